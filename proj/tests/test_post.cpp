#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "airseg/postprocess.hpp"

using namespace airseg;

namespace {

// Independent oracle: iterative minimum-label propagation to a fixed point.
// Deliberately a different algorithm from the library's flood fill.
std::vector<int> propagate_labels(const Mask& m, Connectivity conn) {
  const int D = m.dims.d, H = m.dims.h, W = m.dims.w;
  std::vector<int> label(m.values.size(), -1);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    if (m.values[i]) label[i] = static_cast<int>(i);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int z = 0; z < D; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const std::size_t i = m.dims.index(z, y, x);
          if (label[i] < 0) continue;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (dz == 0 && dy == 0 && dx == 0) continue;
                if (conn == Connectivity::faces &&
                    std::abs(dz) + std::abs(dy) + std::abs(dx) != 1)
                  continue;
                const int nz = z + dz, ny = y + dy, nx = x + dx;
                if (nz < 0 || nz >= D || ny < 0 || ny >= H || nx < 0 || nx >= W)
                  continue;
                const std::size_t j = m.dims.index(nz, ny, nx);
                if (label[j] >= 0 && label[j] < label[i]) {
                  label[i] = label[j];
                  changed = true;
                }
              }
        }
  }
  return label;
}

Mask random_mask(Dims dims, double density, std::mt19937_64& rng) {
  Mask m = Mask::zeros(dims);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : m.values) v = u(rng) < density ? 1 : 0;
  return m;
}

ProbabilityVolume prob_from(std::vector<float> values, Dims dims) {
  ProbabilityVolume p = ProbabilityVolume::zeros(dims);
  p.values = std::move(values);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// binarize
// ---------------------------------------------------------------------------

TEST(Binarize, ThresholdAndTieRule) {
  auto p = prob_from({0.7f, 0.3f, 0.5f, 0.49f}, {1, 2, 2});
  Mask m = binarize(p, 0.5);
  EXPECT_EQ(m.values, (std::vector<std::uint8_t>{1, 0, 1, 0}));
}

TEST(Binarize, AllBelowThresholdGivesEmptyMask) {
  auto p = prob_from(std::vector<float>(8, 0.49f), {2, 2, 2});
  EXPECT_EQ(binarize(p, 0.5).foreground_count(), 0u);
}

TEST(Binarize, ThresholdMonotonicity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> vals(16 * 16 * 4);
  for (auto& v : vals) v = u(rng);
  auto p = prob_from(vals, {4, 16, 16});
  for (double t1 = 0.1; t1 <= 0.8; t1 += 0.1) {
    Mask a = binarize(p, t1 + 0.1);
    Mask b = binarize(p, t1);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      EXPECT_LE(a.values[i], b.values[i]);
  }
}

// ---------------------------------------------------------------------------
// connected components
// ---------------------------------------------------------------------------

TEST(LabelComponents, EmptyAndFullMasks) {
  Mask empty = Mask::zeros({3, 3, 3});
  LabelMap le = label_components(empty);
  EXPECT_EQ(le.component_count(), 0);
  for (auto v : le.values) EXPECT_EQ(v, 0);

  Mask full = Mask::zeros({3, 3, 3});
  for (auto& v : full.values) v = 1;
  LabelMap lf = label_components(full);
  EXPECT_EQ(lf.component_count(), 1);
  for (auto v : lf.values) EXPECT_EQ(v, 1);
}

TEST(LabelComponents, CornerAndDiagonalCases) {
  Mask corners = Mask::zeros({3, 3, 3});
  corners.at(0, 0, 0) = 1;
  corners.at(2, 2, 2) = 1;
  EXPECT_EQ(label_components(corners, Connectivity::full).component_count(), 2);
  EXPECT_EQ(label_components(corners, Connectivity::faces).component_count(), 2);

  Mask diag = Mask::zeros({3, 3, 3});
  diag.at(0, 0, 0) = 1;
  diag.at(1, 1, 1) = 1;
  EXPECT_EQ(label_components(diag, Connectivity::full).component_count(), 1);
  EXPECT_EQ(label_components(diag, Connectivity::faces).component_count(), 2);
}

TEST(LabelComponents, MatchesPropagationOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dens(0.05, 0.6);
  for (int it = 0; it < 200; ++it) {
    const Connectivity conn = it % 2 ? Connectivity::faces : Connectivity::full;
    Mask m = random_mask({16, 16, 16}, dens(rng), rng);
    LabelMap lm = label_components(m, conn);
    std::vector<int> oracle = propagate_labels(m, conn);

    // the label maps must induce identical partitions of the foreground
    std::map<int, std::int32_t> oracle_to_lib;
    std::map<std::int32_t, int> lib_to_oracle;
    std::size_t foreground = 0;
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      if (!m.values[i]) {
        EXPECT_EQ(lm.values[i], 0);
        continue;
      }
      ++foreground;
      ASSERT_GT(lm.values[i], 0);
      auto [it1, fresh1] = oracle_to_lib.emplace(oracle[i], lm.values[i]);
      EXPECT_EQ(it1->second, lm.values[i]);
      auto [it2, fresh2] = lib_to_oracle.emplace(lm.values[i], oracle[i]);
      EXPECT_EQ(it2->second, oracle[i]);
    }
    // size bookkeeping
    std::size_t total = 0;
    for (std::size_t k = 0; k < lm.component_sizes.size(); ++k) {
      total += lm.component_sizes[k];
      if (k) EXPECT_GE(lm.component_sizes[k - 1], lm.component_sizes[k]);
    }
    EXPECT_EQ(total, foreground);
  }
}

TEST(LabelComponents, OrderingIsDeterministicWithTies) {
  // two single-voxel components: the one with the smaller row-major first
  // voxel index must get label 1
  Mask m = Mask::zeros({1, 3, 5});
  m.at(0, 0, 4) = 1;
  m.at(0, 2, 0) = 1;
  LabelMap lm = label_components(m);
  EXPECT_EQ(lm.values[m.dims.index(0, 0, 4)], 1);
  EXPECT_EQ(lm.values[m.dims.index(0, 2, 0)], 2);

  Mask again = m;
  LabelMap lm2 = label_components(again);
  EXPECT_EQ(lm.values, lm2.values);
}

// ---------------------------------------------------------------------------
// largest component extraction
// ---------------------------------------------------------------------------

TEST(ExtractLargest, SingleComponentPassesThrough) {
  Mask m = Mask::zeros({1, 2, 3});
  m.at(0, 0, 0) = 1;
  m.at(0, 0, 1) = 1;
  Mask out = extract_largest(label_components(m));
  EXPECT_EQ(out.values, m.values);
}

TEST(ExtractLargest, KeepsOnlyTheBiggest) {
  // components of sizes 100, 7, 3 in a 10x10x10 grid
  Mask m = Mask::zeros({10, 10, 10});
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) m.at(0, y, x) = 1;  // z=0 plane, 100 voxels
  for (int x = 0; x < 7; ++x) m.at(5, 5, x) = 1;     // a 7-voxel bar
  for (int x = 0; x < 3; ++x) m.at(8, 8, x) = 1;     // a 3-voxel bar
  LabelMap lm = label_components(m);
  ASSERT_EQ(lm.component_count(), 3);
  EXPECT_EQ(lm.component_sizes[0], 100u);
  Mask out = extract_largest(lm);
  EXPECT_EQ(out.foreground_count(), 100u);
  for (int x = 0; x < 7; ++x) EXPECT_EQ(out.at(5, 5, x), 0);
}

TEST(ExtractLargest, EmptyInputGivesEmptyOutput) {
  Mask m = Mask::zeros({2, 2, 2});
  Mask out = extract_largest(label_components(m));
  EXPECT_EQ(out.foreground_count(), 0u);
}

TEST(ExtractLargest, OutputIsConnectedSubsetOfInput) {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 50; ++it) {
    Mask m = random_mask({12, 12, 12}, 0.2, rng);
    LabelMap lm = label_components(m);
    Mask out = extract_largest(lm);
    if (lm.component_count() == 0) {
      EXPECT_EQ(out.foreground_count(), 0u);
      continue;
    }
    EXPECT_EQ(out.foreground_count(), lm.component_sizes[0]);
    for (std::size_t i = 0; i < m.values.size(); ++i)
      EXPECT_LE(out.values[i], m.values[i]);
    EXPECT_EQ(label_components(out).component_count(), 1);
  }
}

// ---------------------------------------------------------------------------
// refine
// ---------------------------------------------------------------------------

TEST(Refine, KeepsBrightBlobDropsSpur) {
  ProbabilityVolume p = ProbabilityVolume::zeros({1, 8, 8});
  // large bright blob
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 5; ++x) p.values[p.dims.index(0, y, x)] = 0.9f;
  // small spurious detection far away
  p.values[p.dims.index(0, 7, 7)] = 0.8f;
  Mask out = refine(p, 0.5, Connectivity::full);
  EXPECT_EQ(out.foreground_count(), 16u);
  EXPECT_EQ(out.at(0, 7, 7), 0);
}

TEST(Refine, BelowThresholdEverywhereGivesEmptyMask) {
  ProbabilityVolume p = ProbabilityVolume::zeros({2, 4, 4});
  for (auto& v : p.values) v = 0.3f;
  EXPECT_EQ(refine(p).foreground_count(), 0u);
}

TEST(Refine, IdempotentOnSingleComponentMask) {
  std::mt19937_64 rng(4);
  Mask m = Mask::zeros({4, 8, 8});
  for (int z = 0; z < 4; ++z)
    for (int y = 2; y < 6; ++y)
      for (int x = 2; x < 6; ++x) m.at(z, y, x) = 1;
  ProbabilityVolume as_prob = ProbabilityVolume::zeros(m.dims);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    as_prob.values[i] = static_cast<float>(m.values[i]);
  Mask out = refine(as_prob, 0.5);
  EXPECT_EQ(out.values, m.values);
}
