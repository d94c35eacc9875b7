#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "airseg/errors.hpp"

namespace airseg {

struct Dims {
  int d = 0, h = 0, w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * h + y) * w + x;
  }
  bool operator==(const Dims&) const = default;
};

struct Spacing {
  double z = 1.0, y = 1.0, x = 1.0;
  bool operator==(const Spacing&) const = default;
};

// 3D scalar field in Hounsfield-like units, row-major (z, y, x).
struct Volume {
  Dims dims;
  Spacing spacing;
  std::vector<float> values;

  static Volume zeros(Dims dims, Spacing spacing = {}) {
    require(dims.d > 0 && dims.h > 0 && dims.w > 0,
            "volume dims must be positive, got ", dims.d, "x", dims.h, "x", dims.w);
    Volume v;
    v.dims = dims;
    v.spacing = spacing;
    v.values.assign(dims.numel(), 0.0f);
    return v;
  }

  float& at(int z, int y, int x) { return values[dims.index(z, y, x)]; }
  float at(int z, int y, int x) const { return values[dims.index(z, y, x)]; }
};

// Binary {0,1} field with the same geometry as its Volume.
struct Mask {
  Dims dims;
  Spacing spacing;
  std::vector<std::uint8_t> values;

  static Mask zeros(Dims dims, Spacing spacing = {}) {
    require(dims.d > 0 && dims.h > 0 && dims.w > 0,
            "mask dims must be positive, got ", dims.d, "x", dims.h, "x", dims.w);
    Mask m;
    m.dims = dims;
    m.spacing = spacing;
    m.values.assign(dims.numel(), 0);
    return m;
  }

  std::uint8_t& at(int z, int y, int x) { return values[dims.index(z, y, x)]; }
  std::uint8_t at(int z, int y, int x) const { return values[dims.index(z, y, x)]; }

  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (auto v : values) n += (v != 0);
    return n;
  }
};

// Connected-component labels: 0 is background, labels 1..K are sorted by
// decreasing size, so label 1 is always the largest component.
struct LabelMap {
  Dims dims;
  Spacing spacing;
  std::vector<std::int32_t> values;
  std::vector<std::size_t> component_sizes;  // component_sizes[k-1] = size of label k

  int component_count() const { return static_cast<int>(component_sizes.size()); }
};

}  // namespace airseg
