#pragma once

#include <array>
#include <vector>

#include "airseg/ops.hpp"
#include "airseg/tensor.hpp"
#include "airseg/u2net.hpp"
#include "airseg/volume.hpp"

namespace airseg {

// Weights of the six side losses plus the fused loss; all default to 1.
template <typename T>
struct LossWeights {
  std::array<T, 6> w_side{T(1), T(1), T(1), T(1), T(1), T(1)};
  T w_fuse = T(1);
};

namespace detail {

template <typename T>
struct DiceTerms {
  T numer, denom;  // 2*sum(g*p)+eps, sum(g^2)+sum(p^2)+eps
};

}  // namespace detail

// Smoothed soft-overlap loss between a probability map and a binary target:
//   l = 1 - (2*sum(g*p) + eps) / (sum(g^2) + sum(p^2) + eps)
// For rank >= 2 tensors axis 0 is the batch: sums run over each sample and
// the per-sample losses are averaged. Differentiable in both arguments.
template <typename T>
Tensor<T> dice_loss(const Tensor<T>& pred, const Tensor<T>& gt, T eps = T(1)) {
  require(pred.shape() == gt.shape(), "dice_loss shape mismatch: pred ",
          shape_str(pred.shape()), " vs gt ", shape_str(gt.shape()));
  const std::size_t batch =
      pred.shape().size() >= 2 ? static_cast<std::size_t>(pred.extent(0)) : 1;
  const std::size_t per = pred.numel() / batch;

  bool track = detail::any_requires_grad<T>(pred, gt);
  Tensor<T> loss = detail::make_result<T>({1}, track, {pred, gt});

  std::vector<detail::DiceTerms<T>> terms(batch);
  const T* p = pred.data();
  const T* g = gt.data();
  T total = T(0);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* pb = p + b * per;
    const T* gb = g + b * per;
    T inter = T(0), sp = T(0), sg = T(0);
    for (std::size_t i = 0; i < per; ++i) {
      inter += gb[i] * pb[i];
      sp += pb[i] * pb[i];
      sg += gb[i] * gb[i];
    }
    terms[b] = {T(2) * inter + eps, sg + sp + eps};
    total += T(1) - terms[b].numer / terms[b].denom;
  }
  loss.values()[0] = total / static_cast<T>(batch);

  if (track) {
    loss.node()->backward_fn = [batch, per, terms = std::move(terms)](
                                   const TensorNode<T>& self) {
      TensorNode<T>& pn = *self.parents[0];
      TensorNode<T>& gn = *self.parents[1];
      const T go = self.grad[0] / static_cast<T>(batch);
      // d l / d p_i = (2*N*p_i - 2*g_i*D) / D^2, symmetric in the two maps
      if (pn.requires_grad) {
        pn.ensure_grad();
        for (std::size_t b = 0; b < batch; ++b) {
          const T numer = terms[b].numer, denom = terms[b].denom;
          const T inv_d2 = T(1) / (denom * denom);
          for (std::size_t i = 0; i < per; ++i) {
            const std::size_t k = b * per + i;
            pn.grad[k] += go * (T(2) * numer * pn.values[k] -
                                T(2) * gn.values[k] * denom) * inv_d2;
          }
        }
      }
      if (gn.requires_grad) {
        gn.ensure_grad();
        for (std::size_t b = 0; b < batch; ++b) {
          const T numer = terms[b].numer, denom = terms[b].denom;
          const T inv_d2 = T(1) / (denom * denom);
          for (std::size_t i = 0; i < per; ++i) {
            const std::size_t k = b * per + i;
            gn.grad[k] += go * (T(2) * numer * gn.values[k] -
                                T(2) * pn.values[k] * denom) * inv_d2;
          }
        }
      }
    };
  }
  return loss;
}

namespace detail {

// Multi-channel side outputs meet a single-channel target via channel mean.
template <typename T>
Tensor<T> match_target(const Tensor<T>& map, const Tensor<T>& gt) {
  if (map.shape() != gt.shape() && map.shape().size() == 4 &&
      gt.shape().size() == 4 && map.extent(1) > 1 && gt.extent(1) == 1)
    return channel_mean(map);
  return map;
}

}  // namespace detail

// Deep-supervision objective: weighted sum of the six side losses and the
// fused loss, every term a dice_loss against the same target.
template <typename T>
Tensor<T> deep_supervision_loss(const SaliencyMaps<T>& maps, const Tensor<T>& gt,
                                const LossWeights<T>& w = {}, T eps = T(1)) {
  Tensor<T> total;
  for (int s = 0; s < 6; ++s) {
    Tensor<T> term = scale(dice_loss(detail::match_target(maps.side[s], gt), gt, eps),
                           w.w_side[static_cast<std::size_t>(s)]);
    total = s == 0 ? term : add(total, term);
  }
  return add(total, scale(dice_loss(detail::match_target(maps.fuse, gt), gt, eps),
                          w.w_fuse));
}

// Evaluation-time Dice Similarity Coefficient of two binary masks:
// 2|A n B| / (|A| + |B|); two empty masks score 1.
inline double dsc(const Mask& pred, const Mask& gt) {
  require(pred.dims == gt.dims, "dsc mask dims mismatch");
  std::size_t inter = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool pa = pred.values[i] != 0;
    const bool pb = gt.values[i] != 0;
    inter += (pa && pb);
    a += pa;
    b += pb;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

}  // namespace airseg
