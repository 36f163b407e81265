#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scjd/tensor.hpp"

namespace scjd {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

struct GradCheckOptions {
  double h = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, floor * max(1, |f(x)|)). The
  // floor keeps exactly-zero gradients (e.g. attention key biases) from
  // turning roundoff into a large ratio.
  double floor = 1e-4;
  // 0 checks every coordinate; otherwise a seeded subset per input.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

// Compares reverse-mode gradients of the scalar `f()` with respect to each of
// `inputs` against central differences (f(x+h) - f(x-h)) / 2h.
GradCheckResult grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& opts = {});

}  // namespace scjd
