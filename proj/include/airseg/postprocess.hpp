#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "airseg/volume.hpp"

namespace airseg {

enum class Connectivity : int { faces = 6, full = 26 };

// Probability field with volume geometry; what predict emits per case.
struct ProbabilityVolume {
  Dims dims;
  Spacing spacing;
  std::vector<float> values;  // in [0,1]

  static ProbabilityVolume zeros(Dims dims, Spacing spacing = {}) {
    ProbabilityVolume p;
    p.dims = dims;
    p.spacing = spacing;
    p.values.assign(dims.numel(), 0.0f);
    return p;
  }
};

// voxel = 1 iff value >= t (0.5 itself maps to foreground)
inline Mask binarize(const ProbabilityVolume& prob, double t = 0.5) {
  Mask m = Mask::zeros(prob.dims, prob.spacing);
  for (std::size_t i = 0; i < prob.values.size(); ++i)
    m.values[i] = prob.values[i] >= t ? 1 : 0;
  return m;
}

namespace detail {

struct NeighborTable {
  int offsets[26][3];
  int count;
};

inline NeighborTable neighbor_table(Connectivity conn) {
  NeighborTable t{};
  t.count = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && dy == 0 && dx == 0) continue;
        if (conn == Connectivity::faces && std::abs(dz) + std::abs(dy) + std::abs(dx) != 1)
          continue;
        t.offsets[t.count][0] = dz;
        t.offsets[t.count][1] = dy;
        t.offsets[t.count][2] = dx;
        ++t.count;
      }
  return t;
}

}  // namespace detail

// Connected-component labeling by explicit-stack flood fill. Labels are
// assigned 1..K by decreasing component size; ties break on the smallest
// row-major first-voxel index, so the result is fully deterministic.
inline LabelMap label_components(const Mask& m, Connectivity conn = Connectivity::full) {
  LabelMap lm;
  lm.dims = m.dims;
  lm.spacing = m.spacing;
  lm.values.assign(m.values.size(), 0);

  const auto nbr = detail::neighbor_table(conn);
  const int D = m.dims.d, H = m.dims.h, W = m.dims.w;

  struct Component {
    std::size_t size;
    std::size_t first_voxel;
    std::int32_t provisional;
  };
  std::vector<Component> comps;
  std::vector<std::size_t> stack;

  std::int32_t next = 0;
  for (std::size_t seed = 0; seed < m.values.size(); ++seed) {
    if (m.values[seed] == 0 || lm.values[seed] != 0) continue;
    ++next;
    std::size_t size = 0;
    stack.clear();
    stack.push_back(seed);
    lm.values[seed] = next;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const int z = static_cast<int>(cur / (static_cast<std::size_t>(H) * W));
      const int rem = static_cast<int>(cur % (static_cast<std::size_t>(H) * W));
      const int y = rem / W, x = rem % W;
      for (int k = 0; k < nbr.count; ++k) {
        const int nz = z + nbr.offsets[k][0];
        const int ny = y + nbr.offsets[k][1];
        const int nx = x + nbr.offsets[k][2];
        if (nz < 0 || nz >= D || ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
        const std::size_t ni = m.dims.index(nz, ny, nx);
        if (m.values[ni] != 0 && lm.values[ni] == 0) {
          lm.values[ni] = next;
          stack.push_back(ni);
        }
      }
    }
    comps.push_back({size, seed, next});
  }

  // relabel by decreasing size, first-voxel index breaking ties
  std::vector<std::size_t> order(comps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
    return comps[a].first_voxel < comps[b].first_voxel;
  });
  std::vector<std::int32_t> remap(comps.size() + 1, 0);
  lm.component_sizes.resize(comps.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    remap[static_cast<std::size_t>(comps[order[rank]].provisional)] =
        static_cast<std::int32_t>(rank + 1);
    lm.component_sizes[rank] = comps[order[rank]].size;
  }
  for (auto& v : lm.values)
    if (v != 0) v = remap[static_cast<std::size_t>(v)];
  return lm;
}

// Binary mask of label 1 (the largest component); empty input stays empty.
inline Mask extract_largest(const LabelMap& lm) {
  Mask m = Mask::zeros(lm.dims, lm.spacing);
  for (std::size_t i = 0; i < lm.values.size(); ++i)
    m.values[i] = lm.values[i] == 1 ? 1 : 0;
  return m;
}

// threshold -> label -> keep the largest component
inline Mask refine(const ProbabilityVolume& prob, double t = 0.5,
                   Connectivity conn = Connectivity::full) {
  return extract_largest(label_components(binarize(prob, t), conn));
}

}  // namespace airseg
