#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "airseg/optim.hpp"
#include "airseg/tensor.hpp"

namespace airseg {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t samples = 0;
  // location of the worst entry, for diagnostics
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares the analytic gradient of a scalar-valued function against central
// finite differences at n randomly sampled parameter entries. The relative
// error denominator is max(1, |analytic|, |numeric|).
template <typename T, typename F>
GradCheckReport grad_check(F&& f, std::vector<Tensor<T>> params,
                           std::size_t n_samples, double h = 1e-3,
                           std::uint64_t seed = 0x9e3779b9) {
  require(h >= 1e-4 && h <= 1e-2, "grad_check step h must lie in [1e-4, 1e-2], got ", h);
  require(!params.empty(), "grad_check needs at least one parameter tensor");

  zero_grads(params);
  Tensor<T> loss = f();
  require(loss.is_scalar(), "grad_check function must return a scalar");
  backward(loss);
  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  std::size_t total = 0;
  for (const auto& p : params) total += p.numel();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);

  GradCheckReport report;
  report.samples = n_samples;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::size_t flat = pick(rng);
    std::size_t pi = 0;
    while (flat >= params[pi].numel()) {
      flat -= params[pi].numel();
      ++pi;
    }
    T& slot = params[pi].values()[flat];
    const T saved = slot;
    slot = saved + static_cast<T>(h);
    const double f_plus = static_cast<double>(f().value());
    slot = saved - static_cast<T>(h);
    const double f_minus = static_cast<double>(f().value());
    slot = saved;

    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double a = static_cast<double>(analytic[pi][flat]);
    const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = pi;
      report.worst_index = flat;
      report.analytic = a;
      report.numeric = numeric;
    }
  }
  return report;
}

}  // namespace airseg
