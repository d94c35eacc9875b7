#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "airseg/gradcheck.hpp"
#include "airseg/loss.hpp"
#include "test_util.hpp"

using namespace airseg;
using testutil::binary_values;
using testutil::random_tensor;

namespace {

SaliencyMaps<double> maps_from(const std::array<Tensor<double>, 6>& side,
                               const Tensor<double>& fuse) {
  SaliencyMaps<double> m;
  m.side = side;
  m.fuse = fuse;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// dice loss table
// ---------------------------------------------------------------------------

TEST(DiceLoss, FourCaseTable) {
  auto zeros = Tensor<double>::zeros({4});
  auto ones = Tensor<double>::filled({4}, 1.0);
  EXPECT_NEAR(dice_loss(zeros, zeros).value(), 0.0, 1e-12);
  EXPECT_NEAR(dice_loss(ones, ones).value(), 0.0, 1e-12);
  EXPECT_NEAR(dice_loss(zeros, ones).value(), 0.8, 1e-12);

  auto half = Tensor<double>::from_values({2}, {0.5, 0.5});
  auto tgt = Tensor<double>::from_values({2}, {1.0, 0.0});
  EXPECT_NEAR(dice_loss(half, tgt).value(), 0.2, 1e-12);
}

TEST(DiceLoss, RejectsShapeMismatch) {
  auto a = Tensor<double>::zeros({4});
  auto b = Tensor<double>::zeros({5});
  EXPECT_THROW(dice_loss(a, b), ValidationError);
}

TEST(DiceLoss, BatchAxisAveragesPerSample) {
  // two samples: a perfect one and an empty-vs-full one
  auto pred = Tensor<double>::from_values({2, 1, 1, 4}, {1, 1, 1, 1, 0, 0, 0, 0});
  auto gt = Tensor<double>::from_values({2, 1, 1, 4}, {1, 1, 1, 1, 1, 1, 1, 1});
  // per-sample losses 0 and 0.8, averaged
  EXPECT_NEAR(dice_loss(pred, gt).value(), 0.4, 1e-12);
}

// ---------------------------------------------------------------------------
// properties
// ---------------------------------------------------------------------------

TEST(DiceLoss, RangeAndSymmetryOverRandomInstances) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 64);
  for (int it = 0; it < 1000; ++it) {
    const int n = len(rng);
    auto pred = random_tensor({n}, rng, 0.0, 1.0);
    auto gt = Tensor<double>::from_values(
        {n}, binary_values(static_cast<std::size_t>(n), rng, 0.4));
    const double l = dice_loss(pred, gt).value();
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, 1.0);
    EXPECT_DOUBLE_EQ(l, dice_loss(gt, pred).value());
  }
}

TEST(DiceLoss, PerfectMatchIsExactZero) {
  std::mt19937_64 rng(2);
  for (int it = 0; it < 20; ++it) {
    auto g = Tensor<double>::from_values({37}, binary_values(37, rng, 0.3));
    EXPECT_EQ(dice_loss(g, g).value(), 0.0);
  }
}

TEST(DiceLoss, GradientMatchesFiniteDifferencesTightly) {
  std::mt19937_64 rng(3);
  auto pred = random_tensor({40}, rng, 0.05, 0.95, true);
  auto gt = Tensor<double>::from_values({40}, binary_values(40, rng, 0.3));
  auto f = [&] { return dice_loss(pred, gt); };
  auto rep = grad_check<double>(f, {pred}, 120, 1e-4, 5);
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

TEST(DiceLoss, EpsilonToZeroMatchesDscComplement) {
  std::mt19937_64 rng(4);
  for (int it = 0; it < 50; ++it) {
    auto a_vals = binary_values(60, rng, 0.4);
    auto b_vals = binary_values(60, rng, 0.4);
    // keep both masks nonempty
    a_vals[0] = 1.0;
    b_vals[1] = 1.0;
    auto a = Tensor<double>::from_values({60}, a_vals);
    auto b = Tensor<double>::from_values({60}, b_vals);

    Mask ma = Mask::zeros({1, 1, 60});
    Mask mb = Mask::zeros({1, 1, 60});
    for (int i = 0; i < 60; ++i) {
      ma.values[static_cast<std::size_t>(i)] = a_vals[static_cast<std::size_t>(i)] != 0;
      mb.values[static_cast<std::size_t>(i)] = b_vals[static_cast<std::size_t>(i)] != 0;
    }
    EXPECT_NEAR(dice_loss(a, b, 1e-12).value(), 1.0 - dsc(ma, mb), 1e-6);
  }
}

// ---------------------------------------------------------------------------
// deep supervision
// ---------------------------------------------------------------------------

TEST(DeepSupervision, SevenIdenticalMapsSumTheirLoss) {
  std::mt19937_64 rng(5);
  auto pred = random_tensor({1, 1, 4, 4}, rng, 0.0, 1.0);
  auto gt = Tensor<double>::from_values({1, 1, 4, 4}, binary_values(16, rng, 0.5));
  const double l = dice_loss(pred, gt).value();
  auto maps = maps_from({pred, pred, pred, pred, pred, pred}, pred);
  EXPECT_NEAR(deep_supervision_loss(maps, gt).value(), 7.0 * l, 1e-12);
}

TEST(DeepSupervision, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(6);
  auto pred = random_tensor({1, 1, 4, 4}, rng, 0.0, 1.0);
  auto gt = Tensor<double>::from_values({1, 1, 4, 4}, binary_values(16, rng, 0.5));
  auto maps = maps_from({pred, pred, pred, pred, pred, pred}, pred);
  LossWeights<double> w;
  w.w_side = {0, 0, 0, 0, 0, 0};
  w.w_fuse = 0;
  EXPECT_EQ(deep_supervision_loss(maps, gt, w).value(), 0.0);
}

TEST(DeepSupervision, WeightedTableCase) {
  auto side1 = Tensor<double>::from_values({2}, {0.5, 0.5});
  auto gt = Tensor<double>::from_values({2}, {1.0, 0.0});
  ASSERT_NEAR(dice_loss(side1, gt).value(), 0.2, 1e-12);

  // fuse map with loss exactly 0.1: pred=[p,0] vs gt=[1,0] gives
  // l = 1 - (2p+1)/(p^2+2); solve (2p+1)/(p^2+2) = 0.9
  const double p = (2.0 - std::sqrt(4.0 - 4.0 * 0.9 * 0.8)) / (2.0 * 0.9);
  auto fuse = Tensor<double>::from_values({2}, {p, 0.0});
  ASSERT_NEAR(dice_loss(fuse, gt).value(), 0.1, 1e-12);

  auto zero_map = Tensor<double>::from_values({2}, {1.0, 0.0});  // loss 0 vs gt
  auto maps = maps_from({side1, zero_map, zero_map, zero_map, zero_map, zero_map}, fuse);
  LossWeights<double> w;
  w.w_side = {1, 0, 0, 0, 0, 0};
  w.w_fuse = 2;
  EXPECT_NEAR(deep_supervision_loss(maps, gt, w).value(), 0.2 + 2.0 * 0.1, 1e-12);
}

TEST(DeepSupervision, LinearInEachWeight) {
  std::mt19937_64 rng(7);
  std::array<Tensor<double>, 6> side;
  for (auto& s : side) s = random_tensor({1, 1, 3, 3}, rng, 0.0, 1.0);
  auto fuse = random_tensor({1, 1, 3, 3}, rng, 0.0, 1.0);
  auto gt = Tensor<double>::from_values({1, 1, 3, 3}, binary_values(9, rng, 0.4));
  auto maps = maps_from(side, fuse);

  for (int k = 0; k < 7; ++k) {
    auto with_weight = [&](double v) {
      LossWeights<double> w;
      if (k < 6)
        w.w_side[static_cast<std::size_t>(k)] = v;
      else
        w.w_fuse = v;
      return deep_supervision_loss(maps, gt, w).value();
    };
    const double l0 = with_weight(0.0), l1 = with_weight(1.0), l2 = with_weight(2.0);
    EXPECT_NEAR(l2 - l1, l1 - l0, 1e-12) << "weight " << k;
  }
}

TEST(DeepSupervision, GradientFlowsThroughAllMaps) {
  std::mt19937_64 rng(8);
  std::array<Tensor<double>, 6> side;
  for (auto& s : side) s = random_tensor({1, 1, 3, 3}, rng, 0.05, 0.95, true);
  auto fuse = random_tensor({1, 1, 3, 3}, rng, 0.05, 0.95, true);
  auto gt = Tensor<double>::from_values({1, 1, 3, 3}, binary_values(9, rng, 0.4));
  auto maps = maps_from(side, fuse);
  std::vector<Tensor<double>> params(side.begin(), side.end());
  params.push_back(fuse);
  auto f = [&] { return deep_supervision_loss(maps, gt); };
  auto rep = grad_check<double>(f, params, 100, 1e-4, 9);
  EXPECT_LT(rep.max_rel_error, 1e-6);
}

// ---------------------------------------------------------------------------
// DSC
// ---------------------------------------------------------------------------

TEST(Dsc, IdenticalDisjointOverlapping) {
  Mask a = Mask::zeros({1, 2, 4});
  Mask b = Mask::zeros({1, 2, 4});
  for (int i = 0; i < 4; ++i) a.values[static_cast<std::size_t>(i)] = 1;
  EXPECT_EQ(dsc(a, a), 1.0);

  for (int i = 4; i < 8; ++i) b.values[static_cast<std::size_t>(i)] = 1;
  EXPECT_EQ(dsc(a, b), 0.0);

  // |A|=4, |B|=4, overlap 2
  Mask c = Mask::zeros({1, 2, 4});
  for (int i = 2; i < 6; ++i) c.values[static_cast<std::size_t>(i)] = 1;
  EXPECT_EQ(dsc(a, c), 0.5);
}

TEST(Dsc, EmptyMasksScoreOne) {
  Mask a = Mask::zeros({2, 2, 2});
  Mask b = Mask::zeros({2, 2, 2});
  EXPECT_EQ(dsc(a, b), 1.0);
}

TEST(Dsc, RejectsDimMismatch) {
  Mask a = Mask::zeros({1, 2, 2});
  Mask b = Mask::zeros({1, 2, 3});
  EXPECT_THROW(dsc(a, b), ValidationError);
}
