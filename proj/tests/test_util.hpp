#pragma once

#include <random>
#include <vector>

#include "scjd/tensor.hpp"

namespace scjd::testing {

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true, double lo = -1.0,
                            double hi = 1.0) {
  const std::size_t n = shape_numel(shape);
  return Tensor::from(std::move(shape), random_values(n, rng, lo, hi), requires_grad);
}

}  // namespace scjd::testing
