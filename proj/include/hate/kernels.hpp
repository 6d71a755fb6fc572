#pragma once

// Per-instance hot loops with an OpenMP version and a serial reference. Both
// versions reduce in instance order, so their outputs are bitwise identical
// for any thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "hate/dataset.hpp"
#include "hate/model.hpp"
#include "hate/training.hpp"

namespace hate {

struct BatchItem {
  const TrainingInstance* instance = nullptr;
  std::vector<ItemIndex> noise;
  std::size_t index = 0;  // position in the training split, for diagnostics
};

struct BatchResult {
  Gradients grad;
  std::vector<double> losses;  // one per batch item
};

BatchResult batch_gradients_serial(const ModelParams& p, std::span<const BatchItem> batch,
                                   const NoiseDistribution& noise);
BatchResult batch_gradients_parallel(const ModelParams& p, std::span<const BatchItem> batch,
                                     const NoiseDistribution& noise, int threads);

// 1-based rank of each instance's target over the full vocabulary.
std::vector<std::size_t> rank_targets_serial(const ModelParams& p,
                                             std::span<const TrainingInstance> instances);
std::vector<std::size_t> rank_targets_parallel(const ModelParams& p,
                                               std::span<const TrainingInstance> instances, int threads);

// Number of OpenMP threads actually available (1 without OpenMP).
int max_threads();

}  // namespace hate
