#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "airseg/tensor.hpp"

namespace airseg {

enum class OptimizerKind { sgd, adam };

// Per-parameter buffers: SGD uses `m` as the momentum buffer, Adam uses
// `m`/`v` as bias-corrected first/second moments.
template <typename T>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  T learning_rate = T(0.001);
  T momentum = T(0.9);  // SGD only
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps_hat = T(1e-8);
  std::int64_t step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static OptimizerState for_params(OptimizerKind kind,
                                   const std::vector<Tensor<T>>& params,
                                   T learning_rate, T momentum = T(0.9)) {
    OptimizerState s;
    s.kind = kind;
    s.learning_rate = learning_rate;
    s.momentum = momentum;
    s.m.resize(params.size());
    s.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      s.m[i].assign(params[i].numel(), T(0));
      if (kind == OptimizerKind::adam) s.v[i].assign(params[i].numel(), T(0));
    }
    return s;
  }
};

// v <- mu*v + g ; theta <- theta - lr*v
template <typename T>
void sgd_momentum_step(std::vector<Tensor<T>>& params, OptimizerState<T>& state) {
  require(params.size() == state.m.size(),
          "optimizer state tracks ", state.m.size(), " parameters, got ",
          params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params[i].values();
    const auto& g = params[i].grad();
    auto& vel = state.m[i];
    require(vel.size() == theta.size(), "optimizer buffer shape drifted");
    for (std::size_t j = 0; j < theta.size(); ++j) {
      vel[j] = state.momentum * vel[j] + g[j];
      theta[j] -= state.learning_rate * vel[j];
    }
  }
  ++state.step_count;
}

// Bias-corrected Adam: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, OptimizerState<T>& state) {
  require(params.size() == state.m.size(),
          "optimizer state tracks ", state.m.size(), " parameters, got ",
          params.size());
  const std::int64_t t = state.step_count + 1;
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(state.beta1), t));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(state.beta2), t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params[i].values();
    const auto& g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    require(m.size() == theta.size() && v.size() == theta.size(),
            "optimizer buffer shape drifted");
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = state.beta1 * m[j] + (T(1) - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (T(1) - state.beta2) * g[j] * g[j];
      const T m_hat = m[j] / bc1;
      const T v_hat = v[j] / bc2;
      theta[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps_hat);
    }
  }
  state.step_count = t;
}

template <typename T>
void optimizer_step(std::vector<Tensor<T>>& params, OptimizerState<T>& state) {
  if (state.kind == OptimizerKind::sgd)
    sgd_momentum_step(params, state);
  else
    adam_step(params, state);
}

template <typename T>
void zero_grads(std::vector<Tensor<T>>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace airseg
