#include "hate/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hate/error.hpp"
#include "hate/kernels.hpp"

namespace hate {

NoiseDistribution::NoiseDistribution(Vec probabilities) : prob_(std::move(probabilities)) {
  const std::size_t n = prob_.size();
  if (n == 0) throw InputError("noise distribution over an empty vocabulary");
  accept_.assign(n, 1.0);
  alias_.resize(n);
  for (std::size_t i = 0; i < n; ++i) alias_[i] = static_cast<ItemIndex>(i);

  // Vose's alias construction.
  Vec scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = prob_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    auto s = small.back();
    small.pop_back();
    auto l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = static_cast<ItemIndex>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto i : small) accept_[i] = 1.0;
  for (auto i : large) accept_[i] = 1.0;
}

NoiseDistribution build_noise_distribution(std::span<const TrainingInstance> train,
                                           std::size_t num_items, double power) {
  if (train.empty()) throw InputError("noise distribution needs at least one training instance");
  std::vector<double> counts(num_items, 1.0);
  for (const auto& inst : train) {
    if (inst.target >= num_items) throw InputError("target outside the vocabulary");
    counts[inst.target] += 1.0;
  }
  Vec p(num_items);
  double z = 0.0;
  for (std::size_t i = 0; i < num_items; ++i) z += p[i] = std::pow(counts[i], power);
  for (double& v : p) v /= z;
  return NoiseDistribution(std::move(p));
}

Gradients Gradients::zeros(const ModelParams& p) {
  Gradients g;
  g.intra_query.assign(p.dim, 0.0);
  g.inter_bilin = Matrix(p.dim, p.dim);
  if (p.variant == Variant::hte) g.fc = Matrix(p.fc.rows(), p.fc.cols());
  return g;
}

namespace {

void add_into(std::map<ItemIndex, Vec>& dst, const std::map<ItemIndex, Vec>& src) {
  for (const auto& [key, v] : src) {
    auto [it, fresh] = dst.try_emplace(key, v.size(), 0.0);
    axpy(1.0, v, it->second);
  }
}

Vec& slot(std::map<ItemIndex, Vec>& m, ItemIndex key, std::size_t dim) {
  return m.try_emplace(key, dim, 0.0).first->second;
}

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool finite(const std::map<ItemIndex, Vec>& m) {
  return std::all_of(m.begin(), m.end(), [](const auto& kv) { return finite(kv.second); });
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Gradients& Gradients::operator+=(const Gradients& o) {
  add_into(item_embed, o.item_embed);
  axpy(1.0, o.intra_query, intra_query);
  axpy(1.0, o.inter_bilin.flat(), inter_bilin.flat());
  add_into(out_inter, o.out_inter);
  add_into(out_intra, o.out_intra);
  axpy(1.0, o.fc.flat(), fc.flat());
  return *this;
}

void Gradients::scale(double factor) {
  for (auto* m : {&item_embed, &out_inter, &out_intra})
    for (auto& [k, v] : *m)
      for (double& x : v) x *= factor;
  for (double& x : intra_query) x *= factor;
  for (double& x : inter_bilin.flat()) x *= factor;
  for (double& x : fc.flat()) x *= factor;
}

bool Gradients::all_finite() const {
  return finite(item_embed) && finite(intra_query) && finite(inter_bilin.flat()) && finite(out_inter) &&
         finite(out_intra) && finite(fc.flat());
}

ModelParams Gradients::to_dense(const ModelParams& shape) const {
  ModelParams d = shape.zeros_like();
  for (const auto& [c, v] : item_embed)
    for (std::size_t r = 0; r < v.size(); ++r) d.item_embed(r, c) = v[r];
  std::copy(intra_query.begin(), intra_query.end(), d.intra_query.flat().begin());
  d.inter_bilin = inter_bilin;
  for (const auto& [r, v] : out_inter) std::copy(v.begin(), v.end(), d.out_inter.row(r).begin());
  for (const auto& [r, v] : out_intra) std::copy(v.begin(), v.end(), d.out_intra.row(r).begin());
  if (shape.variant == Variant::hte) d.fc = fc;
  return d;
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

std::vector<ItemIndex> nce_items(const TrainingInstance& inst, std::span<const ItemIndex> noise_samples) {
  std::vector<ItemIndex> items;
  items.reserve(noise_samples.size() + 1);
  items.push_back(inst.target);
  items.insert(items.end(), noise_samples.begin(), noise_samples.end());
  return items;
}

namespace {

// Shift applied to every score before the logistic: log(k p_noise(i)).
double noise_offset(const NoiseDistribution& noise, ItemIndex item, std::size_t k) {
  return std::log(static_cast<double>(k) * noise.probability(item));
}

void check_trace(const ForwardTrace& trace, std::span<const ItemIndex> noise_samples) {
  if (noise_samples.empty()) throw InputError("NCE needs at least one noise sample");
  if (trace.scored.size() != noise_samples.size() + 1 ||
      !std::equal(noise_samples.begin(), noise_samples.end(), trace.scored.begin() + 1))
    throw InputError("forward trace does not match the target and noise samples");
}

// Gradient of e = sum_l alpha_l h_l, alpha = softmax(q . h_l), given dL/de.
void backprop_transaction(const ModelParams& p, const TransactionTrace& t, std::span<const double> d_embed,
                          Gradients& g) {
  const auto n = t.items.size();
  Vec d_alpha(n);
  double mean = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    d_alpha[l] = dot(t.item_vecs[l], d_embed);
    mean += t.alpha[l] * d_alpha[l];
  }
  const auto query = p.query();
  for (std::size_t l = 0; l < n; ++l) {
    const double d_logit = t.alpha[l] * (d_alpha[l] - mean);
    axpy(d_logit, t.item_vecs[l], g.intra_query);
    Vec& col = slot(g.item_embed, t.items[l], p.dim);
    axpy(t.alpha[l], d_embed, col);
    axpy(d_logit, query, col);
  }
}

}  // namespace

double nce_loss(const ForwardTrace& trace, std::span<const ItemIndex> noise_samples,
                const NoiseDistribution& noise) {
  check_trace(trace, noise_samples);
  const auto k = noise_samples.size();
  double loss = -log_sigmoid(trace.scores[0] - noise_offset(noise, trace.scored[0], k));
  for (std::size_t j = 1; j < trace.scored.size(); ++j)
    loss -= log_sigmoid(-(trace.scores[j] - noise_offset(noise, trace.scored[j], k)));
  return loss;
}

double nce_loss(const ModelParams& p, const TrainingInstance& inst,
                std::span<const ItemIndex> noise_samples, const NoiseDistribution& noise) {
  if (noise_samples.empty()) throw InputError("NCE needs at least one noise sample");
  auto items = nce_items(inst, noise_samples);
  return nce_loss(forward(p, inst, std::span<const ItemIndex>(items)), noise_samples, noise);
}

Gradients backward(const ModelParams& p, const ForwardTrace& trace, const TrainingInstance& inst,
                   std::span<const ItemIndex> noise_samples, const NoiseDistribution& noise) {
  check_trace(trace, noise_samples);
  if (trace.scored[0] != inst.target) throw InputError("forward trace was computed for another target");
  const auto k = noise_samples.size();
  const auto dim = p.dim;
  const bool has_inter = p.variant != Variant::ate;
  Gradients g = Gradients::zeros(p);

  // Output layer. dL/dS is s(D)-1 for the target and s(D) for noise.
  Vec d_inter(dim, 0.0), d_intra(dim, 0.0);
  for (std::size_t j = 0; j < trace.scored.size(); ++j) {
    const ItemIndex item = trace.scored[j];
    const double delta = trace.scores[j] - noise_offset(noise, item, k);
    const double d_score = j == 0 ? sigmoid(delta) - 1.0 : sigmoid(delta);
    axpy(d_score, trace.intra.embedding, slot(g.out_intra, item, dim));
    axpy(d_score, p.out_intra.row(item), d_intra);
    if (has_inter) {
      axpy(d_score, trace.inter_embedding, slot(g.out_inter, item, dim));
      axpy(d_score, p.out_inter.row(item), d_inter);
    }
  }

  const auto n_inter = trace.inter.size();
  std::vector<Vec> d_trans(n_inter, Vec(dim, 0.0));
  const auto& e_ia = trace.intra.embedding;

  if (p.variant == Variant::hate) {
    // e_ie = sum_x beta_x e_x, beta = softmax(e_x^T B e_ia).
    Vec d_beta(n_inter);
    double mean = 0.0;
    for (std::size_t x = 0; x < n_inter; ++x) {
      d_beta[x] = dot(trace.inter[x].embedding, d_inter);
      mean += trace.beta[x] * d_beta[x];
    }
    Vec projected(dim, 0.0);  // B e_ia
    for (std::size_t r = 0; r < dim; ++r) projected[r] = dot(p.inter_bilin.row(r), e_ia);
    for (std::size_t x = 0; x < n_inter; ++x) {
      const auto& e_x = trace.inter[x].embedding;
      const double d_logit = trace.beta[x] * (d_beta[x] - mean);
      axpy(trace.beta[x], d_inter, d_trans[x]);
      axpy(d_logit, projected, d_trans[x]);
      for (std::size_t r = 0; r < dim; ++r) {
        // B^T e_x contribution to e_ia, and the outer product e_x e_ia^T.
        axpy(d_logit * e_x[r], p.inter_bilin.row(r), d_intra);
        axpy(d_logit * e_x[r], e_ia, g.inter_bilin.row(r));
      }
    }
  } else if (p.variant == Variant::hte) {
    // e_ie = fc * concat(e_1, ..., e_W).
    for (std::size_t r = 0; r < dim; ++r) {
      auto fc_row = p.fc.row(r);
      auto g_row = g.fc.row(r);
      for (std::size_t x = 0; x < n_inter; ++x) {
        axpy(d_inter[r], trace.inter[x].embedding, g_row.subspan(x * dim, dim));
        axpy(d_inter[r], fc_row.subspan(x * dim, dim), d_trans[x]);
      }
    }
  }

  for (std::size_t x = 0; x < n_inter; ++x) backprop_transaction(p, trace.inter[x], d_trans[x], g);
  backprop_transaction(p, trace.intra, d_intra, g);
  return g;
}

double full_softmax_loss(const ModelParams& p, const TrainingInstance& inst) {
  auto tr = forward(p, inst);
  const double top = *std::max_element(tr.scores.begin(), tr.scores.end());
  double z = 0.0;
  for (double s : tr.scores) z += std::exp(s - top);
  return top + std::log(z) - tr.scores.at(inst.target);
}

namespace {

inline void adagrad_entry(double& theta, double& acc, double g, double lr, double eps) {
  acc += g * g;
  theta -= lr * g / (std::sqrt(acc) + eps);
}

void adagrad_dense_block(std::span<double> theta, std::span<double> acc, std::span<const double> g,
                         double lr, double eps) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] != 0.0) adagrad_entry(theta[i], acc[i], g[i], lr, eps);
}

}  // namespace

void adagrad_step(ModelParams& p, OptimizerState& opt, const Gradients& g, double lr, double epsilon) {
  if (!g.all_finite()) throw NumericalError("non-finite gradient; optimizer step aborted");
  auto& a = opt.accum;
  for (const auto& [c, v] : g.item_embed)
    for (std::size_t r = 0; r < v.size(); ++r)
      if (v[r] != 0.0) adagrad_entry(p.item_embed(r, c), a.item_embed(r, c), v[r], lr, epsilon);
  adagrad_dense_block(p.intra_query.flat(), a.intra_query.flat(), g.intra_query, lr, epsilon);
  adagrad_dense_block(p.inter_bilin.flat(), a.inter_bilin.flat(), g.inter_bilin.flat(), lr, epsilon);
  for (const auto& [r, v] : g.out_inter)
    adagrad_dense_block(p.out_inter.row(r), a.out_inter.row(r), v, lr, epsilon);
  for (const auto& [r, v] : g.out_intra)
    adagrad_dense_block(p.out_intra.row(r), a.out_intra.row(r), v, lr, epsilon);
  if (p.variant == Variant::hte) adagrad_dense_block(p.fc.flat(), a.fc.flat(), g.fc.flat(), lr, epsilon);
}

void adagrad_step_dense(ModelParams& p, OptimizerState& opt, const ModelParams& g, double lr,
                        double epsilon) {
  auto params = p.blocks();
  auto accums = opt.accum.blocks();
  auto grads = g.blocks();
  for (const Matrix* m : grads)
    if (!finite(m->flat())) throw NumericalError("non-finite gradient; optimizer step aborted");
  for (std::size_t b = 0; b < params.size(); ++b)
    adagrad_dense_block(params[b]->flat(), accums[b]->flat(), grads[b]->flat(), lr, epsilon);
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InputError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw InputError("batch size must be >= 1");
  if (cfg.nce_k < 1) throw InputError("nce_k must be >= 1");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw InputError("learning rate must be > 0");
  if (cfg.dim < 1) throw InputError("embedding dimension must be >= 1");
  if (!(cfg.adagrad_epsilon >= 0.0)) throw InputError("adagrad epsilon must be >= 0");
  if (!std::isfinite(cfg.noise_power)) throw InputError("noise power must be finite");
  if (cfg.threads < 1) throw InputError("threads must be >= 1");
}

TrainResult train(const SplitDataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (data.train.empty()) throw InputError("training split is empty");
  const std::size_t n_items = data.vocab.size();

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  auto& ck = result.checkpoint;
  ck.vocab = data.vocab;
  ck.config = cfg;
  ck.params = init_params(cfg.variant, n_items, cfg.dim, data.window, rng);
  ck.opt = OptimizerState::zeros(ck.params);
  const auto noise = build_noise_distribution(data.train, n_items, cfg.noise_power);

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<BatchItem> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const auto& inst = data.train[order[i]];
        batch.push_back({&inst, draw_noise(noise, inst.target, cfg.nce_k, rng), order[i]});
      }
      auto r = cfg.threads > 1 ? batch_gradients_parallel(ck.params, batch, noise, cfg.threads)
                               : batch_gradients_serial(ck.params, batch, noise);
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (!std::isfinite(r.losses[j]))
          throw NumericalError("non-finite loss at training instance " + std::to_string(batch[j].index) +
                               " (epoch " + std::to_string(epoch) + ")");
        loss_sum += r.losses[j];
      }
      if (cfg.mean_batch_gradient) r.grad.scale(1.0 / static_cast<double>(batch.size()));
      adagrad_step(ck.params, ck.opt, r.grad, cfg.learning_rate, cfg.adagrad_epsilon);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(order.size());
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  ck.epoch = cfg.epochs;
  std::ostringstream state;
  state << rng;
  ck.rng_state = state.str();
  return result;
}

void write_loss_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,mean_loss,wall_seconds\n";
  for (const auto& e : log)
    out << e.epoch << ',' << std::setprecision(17) << e.mean_loss << ',' << std::setprecision(6)
        << e.wall_seconds << '\n';
}

}  // namespace hate
