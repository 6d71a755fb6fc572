#include "hate/model.hpp"

#include <algorithm>
#include <cmath>

#include "hate/error.hpp"

namespace hate {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::hate: return "hate";
    case Variant::ate: return "ate";
    case Variant::hte: return "hte";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "hate") return Variant::hate;
  if (name == "ate") return Variant::ate;
  if (name == "hte") return Variant::hte;
  throw InputError("unknown variant '" + name + "' (expected hate, ate or hte)");
}

Variant variant_from_code(std::uint32_t code) {
  if (code > 2) throw InputError("unknown variant code " + std::to_string(code));
  return static_cast<Variant>(code);
}

ModelParams make_zero_params(Variant variant, std::size_t num_items, std::size_t dim,
                             std::size_t window) {
  if (dim < 1) throw InputError("embedding dimension must be >= 1");
  if (num_items < 1) throw InputError("vocabulary must not be empty");
  if (variant == Variant::hte && window < 1) throw InputError("HTE needs an inter window >= 1");
  ModelParams p;
  p.variant = variant;
  p.dim = dim;
  p.window = window;
  p.item_embed = Matrix(dim, num_items);
  p.intra_query = Matrix(1, dim);
  p.inter_bilin = Matrix(dim, dim);
  p.out_inter = Matrix(num_items, dim);
  p.out_intra = Matrix(num_items, dim);
  if (variant == Variant::hte) p.fc = Matrix(dim, window * dim);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  return make_zero_params(variant, num_items(), dim, window);
}

std::vector<Matrix*> ModelParams::blocks() {
  std::vector<Matrix*> b{&item_embed, &intra_query, &inter_bilin, &out_inter, &out_intra};
  if (variant == Variant::hte) b.push_back(&fc);
  return b;
}

std::vector<const Matrix*> ModelParams::blocks() const {
  std::vector<const Matrix*> b{&item_embed, &intra_query, &inter_bilin, &out_inter, &out_intra};
  if (variant == Variant::hte) b.push_back(&fc);
  return b;
}

void check_shapes(const ModelParams& p) {
  const auto n = p.num_items(), k = p.dim;
  auto is = [](const Matrix& m, std::size_t r, std::size_t c) { return m.rows() == r && m.cols() == c; };
  bool ok = k > 0 && n > 0 && is(p.item_embed, k, n) && is(p.intra_query, 1, k) &&
            is(p.inter_bilin, k, k) && is(p.out_inter, n, k) && is(p.out_intra, n, k);
  ok = ok && (p.variant == Variant::hte ? is(p.fc, k, p.window * k) && p.window > 0 : p.fc.empty());
  if (!ok) throw CompatibilityError("parameter shapes are inconsistent with K, |I| and the variant");
}

Vec item_embedding(const ModelParams& p, ItemIndex item) {
  if (item >= p.num_items())
    throw InputError("item index " + std::to_string(item) + " out of range [0, " +
                     std::to_string(p.num_items()) + ")");
  return p.item_embed.col(item);
}

Vec softmax(std::span<const double> scores) {
  Vec out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : out) v /= z;
  return out;
}

Vec intra_attention(std::span<const Vec> embeddings, std::span<const double> query) {
  if (embeddings.empty()) throw InputError("attention over an empty item set");
  Vec logits(embeddings.size());
  for (std::size_t l = 0; l < embeddings.size(); ++l) logits[l] = dot(query, embeddings[l]);
  return softmax(logits);
}

TransactionTrace transaction_embedding(const ModelParams& p, std::span<const ItemIndex> items) {
  if (items.empty()) throw InputError("transaction has no items");
  TransactionTrace t;
  t.items.assign(items.begin(), items.end());
  std::sort(t.items.begin(), t.items.end());
  t.item_vecs.reserve(t.items.size());
  for (auto i : t.items) t.item_vecs.push_back(item_embedding(p, i));
  t.alpha = intra_attention(t.item_vecs, p.query());
  t.embedding.assign(p.dim, 0.0);
  for (std::size_t l = 0; l < t.items.size(); ++l) axpy(t.alpha[l], t.item_vecs[l], t.embedding);
  return t;
}

Vec intra_context_embedding(const ModelParams& p, std::span<const ItemIndex> intra) {
  if (intra.empty()) throw InputError("intra-transaction context is empty");
  return transaction_embedding(p, intra).embedding;
}

Vec inter_attention(std::span<const Vec> transaction_embeddings, const Matrix& bilinear,
                    std::span<const double> intra_embedding) {
  if (transaction_embeddings.empty()) throw InputError("inter-transaction context is empty");
  // B e_ia once, then one dot product per transaction.
  Vec projected(bilinear.rows(), 0.0);
  for (std::size_t r = 0; r < bilinear.rows(); ++r) projected[r] = dot(bilinear.row(r), intra_embedding);
  Vec logits(transaction_embeddings.size());
  for (std::size_t x = 0; x < logits.size(); ++x) logits[x] = dot(transaction_embeddings[x], projected);
  return softmax(logits);
}

InterContext inter_context_embedding(const ModelParams& p, std::span<const Vec> transaction_embeddings,
                                     std::span<const double> intra_embedding) {
  InterContext out;
  out.embedding.assign(p.dim, 0.0);
  switch (p.variant) {
    case Variant::ate:
      throw InputError("the ATE variant has no inter-transaction context");
    case Variant::hate:
      out.beta = inter_attention(transaction_embeddings, p.inter_bilin, intra_embedding);
      for (std::size_t x = 0; x < transaction_embeddings.size(); ++x)
        axpy(out.beta[x], transaction_embeddings[x], out.embedding);
      break;
    case Variant::hte:
      if (transaction_embeddings.size() != p.window)
        throw InputError("HTE expects exactly " + std::to_string(p.window) + " inter transactions, got " +
                         std::to_string(transaction_embeddings.size()));
      for (std::size_t r = 0; r < p.dim; ++r) {
        auto row = p.fc.row(r);
        double s = 0.0;
        for (std::size_t x = 0; x < p.window; ++x)
          s += dot(row.subspan(x * p.dim, p.dim), transaction_embeddings[x]);
        out.embedding[r] = s;
      }
      break;
  }
  return out;
}

InterContext inter_context_embedding(const ModelParams& p,
                                     std::span<const std::vector<ItemIndex>> inter,
                                     std::span<const double> intra_embedding) {
  std::vector<Vec> e;
  e.reserve(inter.size());
  for (const auto& t : inter) e.push_back(transaction_embedding(p, t).embedding);
  return inter_context_embedding(p, e, intra_embedding);
}

double score(const ModelParams& p, ItemIndex item, std::span<const double> inter_embedding,
             std::span<const double> intra_embedding) {
  if (item >= p.num_items())
    throw InputError("item index " + std::to_string(item) + " out of range [0, " +
                     std::to_string(p.num_items()) + ")");
  return dot(p.out_inter.row(item), inter_embedding) + dot(p.out_intra.row(item), intra_embedding);
}

ForwardTrace forward(const ModelParams& p, const TrainingInstance& inst,
                     std::optional<std::span<const ItemIndex>> requested) {
  ForwardTrace tr;
  if (inst.intra.empty()) throw InputError("intra-transaction context is empty");
  tr.intra = transaction_embedding(p, inst.intra);
  tr.inter_embedding.assign(p.dim, 0.0);
  if (p.variant != Variant::ate) {
    if (inst.inter.size() != p.window)
      throw InputError("expected " + std::to_string(p.window) + " inter transactions, got " +
                       std::to_string(inst.inter.size()));
    std::vector<Vec> e;
    tr.inter.reserve(inst.inter.size());
    for (const auto& t : inst.inter) {
      tr.inter.push_back(transaction_embedding(p, t));
      e.push_back(tr.inter.back().embedding);
    }
    auto ctx = inter_context_embedding(p, e, tr.intra.embedding);
    tr.inter_embedding = std::move(ctx.embedding);
    tr.beta = std::move(ctx.beta);
  }
  if (requested) {
    tr.scored.assign(requested->begin(), requested->end());
  } else {
    tr.scored.resize(p.num_items());
    for (std::size_t i = 0; i < tr.scored.size(); ++i) tr.scored[i] = static_cast<ItemIndex>(i);
  }
  tr.scores.resize(tr.scored.size());
  for (std::size_t j = 0; j < tr.scored.size(); ++j)
    tr.scores[j] = score(p, tr.scored[j], tr.inter_embedding, tr.intra.embedding);
  return tr;
}

Vec predict_distribution(const ModelParams& p, const TrainingInstance& inst) {
  return softmax(forward(p, inst).scores);
}

}  // namespace hate
