#include "scjd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace scjd {

GradCheckResult grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& opts) {
  for (auto& in : inputs) {
    if (!in.requires_grad()) throw ContractError("grad_check: every input must require gradients");
    in.zero_grad();
  }
  Tensor f0 = f();
  f0.backward();
  // Central-difference roundoff grows with |f|, so the floor does too.
  const double floor = opts.floor * std::max(1.0, std::fabs(f0.item()));
  std::vector<std::vector<double>> analytic;
  for (auto& in : inputs) {
    auto g = in.has_grad() ? std::vector<double>(in.grad().begin(), in.grad().end())
                           : std::vector<double>(in.numel(), 0.0);
    analytic.push_back(std::move(g));
  }

  GradCheckResult res;
  std::mt19937_64 rng(opts.seed);
  NoGradGuard no_grad;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto vals = inputs[t].mutable_values();
    std::vector<std::size_t> coords(vals.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_input && coords.size() > opts.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.max_coords_per_input);
      std::sort(coords.begin(), coords.end());
    }
    for (auto i : coords) {
      const double orig = vals[i];
      vals[i] = orig + opts.h;
      const double fp = f().item();
      vals[i] = orig - opts.h;
      const double fm = f().item();
      vals[i] = orig;
      const double num = (fp - fm) / (2.0 * opts.h);
      const double a = analytic[t][i];
      const double denom = std::max({std::fabs(a), std::fabs(num), floor});
      const double err = std::fabs(a - num) / denom;
      ++res.coords_checked;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_input = t;
        res.worst_index = i;
        res.analytic = a;
        res.numeric = num;
      }
    }
  }
  return res;
}

}  // namespace scjd
