#pragma once

#include <random>
#include <vector>

#include "airseg/tensor.hpp"

namespace testutil {

inline std::vector<double> uniform_values(std::size_t n, std::mt19937_64& rng,
                                          double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline airseg::Tensor<double> random_tensor(airseg::Shape shape, std::mt19937_64& rng,
                                            double lo = -1.0, double hi = 1.0,
                                            bool requires_grad = false) {
  const std::size_t n = airseg::shape_numel(shape);
  return airseg::Tensor<double>::from_values(std::move(shape),
                                             uniform_values(n, rng, lo, hi),
                                             requires_grad);
}

// values with pairwise gaps well above the finite-difference step, so pool
// argmax choices cannot flip during a gradient check
inline airseg::Tensor<double> separated_tensor(airseg::Shape shape,
                                               std::mt19937_64& rng,
                                               bool requires_grad = false) {
  const std::size_t n = airseg::shape_numel(shape);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 0.05 * static_cast<double>(i);
  std::shuffle(v.begin(), v.end(), rng);
  return airseg::Tensor<double>::from_values(std::move(shape), std::move(v),
                                             requires_grad);
}

inline std::vector<double> binary_values(std::size_t n, std::mt19937_64& rng,
                                         double p = 0.3) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng) < p ? 1.0 : 0.0;
  return v;
}

}  // namespace testutil
