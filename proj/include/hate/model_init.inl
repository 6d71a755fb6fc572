#pragma once

#include <random>

namespace hate {

template <typename Rng>
ModelParams init_params(Variant variant, std::size_t num_items, std::size_t dim, std::size_t window,
                        Rng& rng) {
  auto p = make_zero_params(variant, num_items, dim, window);
  const double half = 0.5 / static_cast<double>(dim);
  std::uniform_real_distribution<double> u(-half, half);
  for (Matrix* m : p.blocks())
    for (double& v : m->flat()) v = u(rng);
  return p;
}

}  // namespace hate
