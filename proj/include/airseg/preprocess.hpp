#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "airseg/volume.hpp"

namespace airseg {

constexpr float kSliceSentinel = -9.0f;

// Per-slice z-scored volume mapped into [0, 2.5]; flat slices carry the
// sentinel value in every voxel instead.
struct NormalizedVolume {
  Dims dims;
  Spacing spacing;
  std::vector<float> values;
  std::vector<std::uint8_t> sentinel_slices;  // 1 where sigma fell below the floor

  float at(int z, int y, int x) const { return values[dims.index(z, y, x)]; }
};

// Per axial slice: subtract the slice mean, divide by the population standard
// deviation, clamp z to [-3,3] and map affinely onto [0,2.5]. Slices with
// sigma below `sigma_min` are flat (dark-border slices in CT) and get the
// sentinel wholesale.
inline NormalizedVolume normalize_volume(const Volume& v, double sigma_min = 1e-6) {
  NormalizedVolume out;
  out.dims = v.dims;
  out.spacing = v.spacing;
  out.values.resize(v.values.size());
  out.sentinel_slices.assign(static_cast<std::size_t>(v.dims.d), 0);

  const std::size_t plane = static_cast<std::size_t>(v.dims.h) * v.dims.w;
  for (int z = 0; z < v.dims.d; ++z) {
    const float* src = v.values.data() + static_cast<std::size_t>(z) * plane;
    float* dst = out.values.data() + static_cast<std::size_t>(z) * plane;
    double sum = 0;
    for (std::size_t i = 0; i < plane; ++i) sum += src[i];
    const double mu = sum / static_cast<double>(plane);
    double ss = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = src[i] - mu;
      ss += d * d;
    }
    const double sigma = std::sqrt(ss / static_cast<double>(plane));
    if (sigma < sigma_min) {
      out.sentinel_slices[static_cast<std::size_t>(z)] = 1;
      std::fill(dst, dst + plane, kSliceSentinel);
      continue;
    }
    for (std::size_t i = 0; i < plane; ++i) {
      double zscore = (src[i] - mu) / sigma;
      zscore = std::clamp(zscore, -3.0, 3.0);
      dst[i] = static_cast<float>((zscore + 3.0) * (2.5 / 6.0));
    }
  }
  return out;
}

enum class DepthMode {
  duplicate,  // channel 1 repeats the slice
  adjacent,   // channel 1 holds the next slice (clamped at the top)
};

// One two-channel network input slice.
struct SliceInput {
  int slice_index = 0;
  int h = 0, w = 0;
  std::vector<float> values;  // 2 x h x w, channel-major
};

struct InputStack {
  Dims dims;
  Spacing spacing;
  std::vector<SliceInput> slices;
};

// Doubles the depth dimension of each slice into a two-channel input.
inline InputStack make_inputs(const NormalizedVolume& nv,
                              DepthMode mode = DepthMode::duplicate) {
  InputStack stack;
  stack.dims = nv.dims;
  stack.spacing = nv.spacing;
  stack.slices.reserve(static_cast<std::size_t>(nv.dims.d));
  const std::size_t plane = static_cast<std::size_t>(nv.dims.h) * nv.dims.w;
  for (int z = 0; z < nv.dims.d; ++z) {
    SliceInput s;
    s.slice_index = z;
    s.h = nv.dims.h;
    s.w = nv.dims.w;
    s.values.resize(2 * plane);
    const float* c0 = nv.values.data() + static_cast<std::size_t>(z) * plane;
    const int z1 = mode == DepthMode::duplicate ? z : std::min(z + 1, nv.dims.d - 1);
    const float* c1 = nv.values.data() + static_cast<std::size_t>(z1) * plane;
    std::copy(c0, c0 + plane, s.values.begin());
    std::copy(c1, c1 + plane, s.values.begin() + static_cast<std::ptrdiff_t>(plane));
    stack.slices.push_back(std::move(s));
  }
  return stack;
}

struct TrainTestSplit {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

// Deterministic shuffled partition; |test| = round(test_fraction * n).
inline TrainTestSplit split_train_test(const std::vector<int>& ids,
                                       double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0,
          "test_fraction must lie in (0,1), got ", test_fraction);
  require(ids.size() >= 2, "split needs at least 2 ids, got ", ids.size());
  std::vector<int> shuffled = ids;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(ids.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, ids.size() - 1);
  TrainTestSplit split;
  split.test_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
  return split;
}

}  // namespace airseg
