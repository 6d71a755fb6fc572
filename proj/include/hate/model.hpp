#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hate/dataset.hpp"
#include "hate/matrix.hpp"

namespace hate {

// HATE: attentive intra and inter context.
// ATE:  intra context only, the inter embedding is fixed at zero.
// HTE:  inter attention replaced by a linear map over the concatenated
//       transaction embeddings.
enum class Variant : std::uint32_t { hate = 0, ate = 1, hte = 2 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
Variant variant_from_code(std::uint32_t code);

// Parameter set. Shapes for |I| items, embedding dimension K and inter
// window W:
//   item_embed   K x |I|    column l is the embedding of item l
//   intra_query  1 x K      item-level attention vector, shared by every
//                           transaction and by the intra context
//   inter_bilin  K x K      bilinear transaction/intra interaction
//   out_inter    |I| x K    output weights applied to the inter embedding
//   out_intra    |I| x K    output weights applied to the intra embedding
//   fc           K x (W*K)  HTE only, empty otherwise
struct ModelParams {
  Variant variant = Variant::hate;
  std::size_t dim = 0;
  std::size_t window = 0;
  Matrix item_embed;
  Matrix intra_query;
  Matrix inter_bilin;
  Matrix out_inter;
  Matrix out_intra;
  Matrix fc;

  std::size_t num_items() const { return item_embed.cols(); }
  std::span<const double> query() const { return intra_query.row(0); }

  // Same shapes, all zero. Used for gradients and optimizer accumulators.
  ModelParams zeros_like() const;

  // Fixed serialization order.
  std::vector<Matrix*> blocks();
  std::vector<const Matrix*> blocks() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

ModelParams make_zero_params(Variant variant, std::size_t num_items, std::size_t dim,
                             std::size_t window);

// Uniform in [-0.5/K, 0.5/K] from the given engine state.
template <typename Rng>
ModelParams init_params(Variant variant, std::size_t num_items, std::size_t dim, std::size_t window,
                        Rng& rng);

// Throws CompatibilityError when shapes disagree with variant/dim/window.
void check_shapes(const ModelParams& p);

Vec item_embedding(const ModelParams& p, ItemIndex item);

// Numerically stable softmax.
Vec softmax(std::span<const double> scores);

// Softmax of the query/embedding inner products.
Vec intra_attention(std::span<const Vec> embeddings, std::span<const double> query);

struct TransactionTrace {
  std::vector<ItemIndex> items;  // ascending
  std::vector<Vec> item_vecs;    // embedding of each item
  Vec alpha;
  Vec embedding;
};

// Attention-weighted sum of item embeddings. Items are summed in ascending
// index order, so the result does not depend on the caller's ordering.
TransactionTrace transaction_embedding(const ModelParams& p, std::span<const ItemIndex> items);

// Same computation applied to the intra context.
Vec intra_context_embedding(const ModelParams& p, std::span<const ItemIndex> intra);

// softmax over e_t^T B e_ia for each transaction embedding e_t.
Vec inter_attention(std::span<const Vec> transaction_embeddings, const Matrix& bilinear,
                    std::span<const double> intra_embedding);

struct InterContext {
  Vec embedding;
  Vec beta;  // HATE only
};

// HATE: beta-weighted sum. HTE: fc * concat(e_t). Not defined for ATE.
InterContext inter_context_embedding(const ModelParams& p, std::span<const Vec> transaction_embeddings,
                                     std::span<const double> intra_embedding);
InterContext inter_context_embedding(const ModelParams& p,
                                     std::span<const std::vector<ItemIndex>> inter,
                                     std::span<const double> intra_embedding);

double score(const ModelParams& p, ItemIndex item, std::span<const double> inter_embedding,
             std::span<const double> intra_embedding);

struct ForwardTrace {
  TransactionTrace intra;
  std::vector<TransactionTrace> inter;  // empty for ATE
  Vec beta;                             // HATE only
  Vec inter_embedding;                  // zero vector for ATE
  std::vector<ItemIndex> scored;
  Vec scores;

  std::span<const double> intra_embedding() const { return intra.embedding; }
};

// Full forward pass. The instance target is not used; `requested` selects
// which items get scored (all items when absent).
ForwardTrace forward(const ModelParams& p, const TrainingInstance& inst,
                     std::optional<std::span<const ItemIndex>> requested = std::nullopt);

// P(i | context) for every item.
Vec predict_distribution(const ModelParams& p, const TrainingInstance& inst);

}  // namespace hate

#include "hate/model_init.inl"
