#pragma once

#include <cstdint>
#include <random>

#include "airseg/gradcheck.hpp"
#include "airseg/loss.hpp"
#include "airseg/u2net.hpp"

namespace airseg {

// Parameter point where the whole network is smooth on a finite-difference
// interval: small random weights with positive conv/batchnorm shifts keep
// every relu input strictly positive, so central differences measure the
// analytic gradient instead of kink-crossing noise. The kink branches
// themselves (relu at zero, pool ties) are pinned by the per-op tests.
template <typename T>
ParamStore<T> smooth_point_params(const U2NetSpec& spec, std::uint64_t seed) {
  ParamStore<T> store;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wd(-0.05, 0.05);
  for (const ParamDesc& d : enumerate_params(spec)) {
    auto t = Tensor<T>::zeros(d.shape);
    const bool head = d.name.rfind("side", 0) == 0 || d.name.rfind("fuse", 0) == 0;
    for (auto& v : t.values()) {
      if (d.init == ParamInit::he_normal)
        v = static_cast<T>(wd(rng));
      else if (d.init == ParamInit::ones)
        v = T(1);
      else if (!head && (d.name.ends_with("/b") || d.name.ends_with("/bn_b")))
        v = T(1);  // shift pre-activations away from the relu boundary
      else
        v = T(0);
    }
    store.add(d.name, std::move(t), d.trainable);
  }
  return store;
}

// End-to-end gradient check of deep_supervision_loss through the network at
// the smooth probe point, 64-bit, against central differences.
inline GradCheckReport u2net_grad_check(const U2NetSpec& spec,
                                        std::size_t n_samples = 100,
                                        double h = 1e-3,
                                        std::uint64_t seed = 99) {
  ParamStore<double> store = smooth_point_params<double>(spec, 42);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int extent = std::max(32, spec.min_input_extent());
  std::vector<double> xv(static_cast<std::size_t>(spec.input_channels) * extent * extent);
  for (auto& v : xv) v = unit(rng);
  auto x = Tensor<double>::from_values({1, spec.input_channels, extent, extent},
                                       std::move(xv));
  std::vector<double> gv(static_cast<std::size_t>(extent) * extent, 0.0);
  for (auto& v : gv) v = unit(rng) < 0.03 ? 1.0 : 0.0;
  auto gt = Tensor<double>::from_values({1, 1, extent, extent}, std::move(gv));

  auto params = store.trainable_params();
  return grad_check<double>(
      [&] {
        SaliencyMaps<double> maps = u2net_forward(x, spec, store, Phase::eval);
        return deep_supervision_loss(maps, gt);
      },
      params, n_samples, h, seed);
}

}  // namespace airseg
