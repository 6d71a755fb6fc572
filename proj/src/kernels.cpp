#include "hate/kernels.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hate/evaluation.hpp"

namespace hate {

namespace {

Gradients instance_gradient(const ModelParams& p, const BatchItem& item, const NoiseDistribution& noise,
                            double& loss) {
  auto items = nce_items(*item.instance, item.noise);
  auto trace = forward(p, *item.instance, std::span<const ItemIndex>(items));
  loss = nce_loss(trace, item.noise, noise);
  return backward(p, trace, *item.instance, item.noise, noise);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

BatchResult batch_gradients_serial(const ModelParams& p, std::span<const BatchItem> batch,
                                   const NoiseDistribution& noise) {
  BatchResult r{Gradients::zeros(p), std::vector<double>(batch.size())};
  for (std::size_t i = 0; i < batch.size(); ++i) r.grad += instance_gradient(p, batch[i], noise, r.losses[i]);
  return r;
}

BatchResult batch_gradients_parallel(const ModelParams& p, std::span<const BatchItem> batch,
                                     const NoiseDistribution& noise, int threads) {
  BatchResult r{Gradients::zeros(p), std::vector<double>(batch.size())};
  std::vector<Gradients> parts(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      parts[i] = instance_gradient(p, batch[i], noise, r.losses[i]);
    } catch (...) {
#pragma omp critical(hate_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& g : parts) r.grad += g;
  return r;
}

std::vector<std::size_t> rank_targets_serial(const ModelParams& p,
                                             std::span<const TrainingInstance> instances) {
  std::vector<std::size_t> ranks(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i)
    ranks[i] = target_rank(forward(p, instances[i]).scores, instances[i].target);
  return ranks;
}

std::vector<std::size_t> rank_targets_parallel(const ModelParams& p,
                                               std::span<const TrainingInstance> instances, int threads) {
  std::vector<std::size_t> ranks(instances.size());
  const auto n = static_cast<std::ptrdiff_t>(instances.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      ranks[i] = target_rank(forward(p, instances[i]).scores, instances[i].target);
    } catch (...) {
#pragma omp critical(hate_rank_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ranks;
}

}  // namespace hate
