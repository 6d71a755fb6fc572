#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hate/dataset.hpp"
#include "hate/model.hpp"

namespace hate {

// Smoothed unigram over target occurrences, sampled with Walker's alias
// method.
class NoiseDistribution {
 public:
  explicit NoiseDistribution(Vec probabilities);

  std::size_t size() const { return prob_.size(); }
  double probability(ItemIndex i) const { return prob_[i]; }
  const Vec& probabilities() const { return prob_; }

  template <typename Rng>
  ItemIndex sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng) * static_cast<double>(prob_.size());
    auto slot = std::min(static_cast<std::size_t>(x), prob_.size() - 1);
    return (x - static_cast<double>(slot)) < accept_[slot] ? static_cast<ItemIndex>(slot) : alias_[slot];
  }

 private:
  Vec prob_;
  Vec accept_;
  std::vector<ItemIndex> alias_;
};

// p(i) proportional to (count(i as target) + 1)^power.
NoiseDistribution build_noise_distribution(std::span<const TrainingInstance> train,
                                           std::size_t num_items, double power);

// Draws k samples, redrawing a sample that collides with the target up to
// 100 times before accepting it.
template <typename Rng>
std::vector<ItemIndex> draw_noise(const NoiseDistribution& noise, ItemIndex target, std::size_t k,
                                  Rng& rng) {
  std::vector<ItemIndex> out(k);
  for (auto& s : out) {
    s = noise.sample(rng);
    for (int attempt = 0; attempt < 100 && s == target && noise.size() > 1; ++attempt)
      s = noise.sample(rng);
  }
  return out;
}

// Sparse gradient: only item columns/rows reachable from one instance (or one
// batch) are stored. Maps keep the keys ordered so accumulation and update
// order are deterministic.
struct Gradients {
  std::map<ItemIndex, Vec> item_embed;  // column gradients of the K x |I| matrix
  Vec intra_query;
  Matrix inter_bilin;
  std::map<ItemIndex, Vec> out_inter;  // row gradients
  std::map<ItemIndex, Vec> out_intra;
  Matrix fc;

  static Gradients zeros(const ModelParams& p);
  Gradients& operator+=(const Gradients& o);
  void scale(double factor);
  bool all_finite() const;
  // Same shape as the params, zero where no entry is stored.
  ModelParams to_dense(const ModelParams& shape) const;
};

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x);

// -[log s(D_t) + sum_j log s(-D_j)], D_i = S_i - log(k p_noise(i)), with the
// normalizer fixed at one. The trace argument variant reuses a forward pass
// scored over [target, noise...].
double nce_loss(const ModelParams& p, const TrainingInstance& inst,
                std::span<const ItemIndex> noise_samples, const NoiseDistribution& noise);
double nce_loss(const ForwardTrace& trace, std::span<const ItemIndex> noise_samples,
                const NoiseDistribution& noise);

// Items to score for an NCE step: target followed by the noise samples.
std::vector<ItemIndex> nce_items(const TrainingInstance& inst, std::span<const ItemIndex> noise_samples);

// Exact gradient of nce_loss with respect to every parameter.
Gradients backward(const ModelParams& p, const ForwardTrace& trace, const TrainingInstance& inst,
                   std::span<const ItemIndex> noise_samples, const NoiseDistribution& noise);

// -log P(target | context) under the full softmax. Test oracle only.
double full_softmax_loss(const ModelParams& p, const TrainingInstance& inst);

struct OptimizerState {
  ModelParams accum;  // squared-gradient sums, same shapes as the params

  static OptimizerState zeros(const ModelParams& p) { return {p.zeros_like()}; }
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// Sparse Adagrad: touches only entries with a nonzero gradient.
// Throws NumericalError (and leaves params untouched) on a non-finite gradient.
void adagrad_step(ModelParams& p, OptimizerState& opt, const Gradients& g, double lr, double epsilon);

// Dense reference update over full-shape gradients.
void adagrad_step_dense(ModelParams& p, OptimizerState& opt, const ModelParams& g, double lr,
                        double epsilon);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 30;
  double learning_rate = 0.5;
  std::size_t nce_k = 10;
  double noise_power = 0.75;
  std::uint64_t seed = 1;
  Variant variant = Variant::hate;
  std::size_t dim = 50;
  double adagrad_epsilon = 1e-8;
  bool mean_batch_gradient = false;  // sum over the batch otherwise
  int threads = 1;                   // not part of the result; any value gives identical output

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws InputError on an invalid field.
void validate(const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

struct Checkpoint {
  Vocabulary vocab;
  ModelParams params;
  OptimizerState opt;
  std::uint64_t epoch = 0;
  std::string rng_state;  // textual std::mt19937_64 state
  TrainConfig config;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const SplitDataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

void write_loss_log(std::ostream& out, std::span<const EpochLog> log);

}  // namespace hate
