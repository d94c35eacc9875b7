#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "airseg/tensor.hpp"

namespace airseg {

enum class Phase { train, eval };
enum class Interp { bilinear, nearest };

// Thread-local switch for graph recording; forward values are unaffected.
class GradMode {
 public:
  static bool enabled() { return flag(); }
  static void set(bool v) { flag() = v; }

 private:
  static bool& flag() {
    thread_local bool f = true;
    return f;
  }
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

namespace detail {

inline int div_floor(int a, int b) {
  int q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

inline int div_ceil(int a, int b) { return -div_floor(-a, b); }

template <typename T, typename... Inputs>
bool any_requires_grad(const Inputs&... inputs) {
  return GradMode::enabled() && (inputs.requires_grad() || ...);
}

template <typename T>
Tensor<T> make_result(Shape shape, bool track,
                      std::initializer_list<Tensor<T>> parents) {
  auto node = std::make_shared<TensorNode<T>>();
  node->values.assign(shape_numel(shape), T(0));
  node->shape = std::move(shape);
  if (track) {
    node->requires_grad = true;
    for (const auto& p : parents) node->parents.push_back(p.node());
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void check_nchw(const Tensor<T>& x, const char* op) {
  require(x.shape().size() == 4, op, " expects an NxCxHxW tensor, got shape ",
          shape_str(x.shape()));
}

}  // namespace detail

template <typename T>
void assert_finite(const Tensor<T>& t, const char* what) {
  for (T v : t.values()) {
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericError(std::string("non-finite value in ") + what);
  }
}

// ---------------------------------------------------------------------------
// conv2d: zero-padded cross-correlation, square odd kernel
// ---------------------------------------------------------------------------

inline int conv_out_extent(int in, int k, int stride, int pad, int dilation) {
  return (in + 2 * pad - dilation * (k - 1) - 1) / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride = 1, int pad = 0, int dilation = 1) {
  detail::check_nchw(x, "conv2d");
  require(w.shape().size() == 4 && w.extent(2) == w.extent(3),
          "conv2d kernel must be CoutxCinxkxk, got ", shape_str(w.shape()));
  const int N = x.extent(0), Cin = x.extent(1), H = x.extent(2), W = x.extent(3);
  const int Cout = w.extent(0), k = w.extent(2);
  require(k % 2 == 1, "conv2d kernel size must be odd, got ", k);
  require(stride >= 1 && dilation >= 1 && pad >= 0,
          "conv2d needs stride>=1, dilation>=1, pad>=0");
  require(w.extent(1) == Cin, "conv2d channel mismatch: input has ", Cin,
          " channels, kernel expects ", w.extent(1));
  require(b.shape() == Shape{Cout}, "conv2d bias must have shape (", Cout,
          "), got ", shape_str(b.shape()));
  const int OH = conv_out_extent(H, k, stride, pad, dilation);
  const int OW = conv_out_extent(W, k, stride, pad, dilation);
  require(OH >= 1 && OW >= 1, "conv2d output extent would be non-positive for ",
          H, "x", W, " input, kernel ", k, ", stride ", stride, ", pad ", pad,
          ", dilation ", dilation);

  bool track = detail::any_requires_grad<T>(x, w, b);
  Tensor<T> y = detail::make_result<T>({N, Cout, OH, OW}, track, {x, w, b});

  const T* xv = x.data();
  const T* wv = w.data();
  const T* bv = b.data();
  T* yv = y.data();

  for (int n = 0; n < N; ++n) {
    for (int co = 0; co < Cout; ++co) {
      T* yplane = yv + (static_cast<std::size_t>(n) * Cout + co) * OH * OW;
      std::fill(yplane, yplane + static_cast<std::size_t>(OH) * OW, bv[co]);
      for (int ci = 0; ci < Cin; ++ci) {
        const T* xplane = xv + (static_cast<std::size_t>(n) * Cin + ci) * H * W;
        for (int kh = 0; kh < k; ++kh) {
          for (int kw = 0; kw < k; ++kw) {
            const T wgt = wv[((static_cast<std::size_t>(co) * Cin + ci) * k + kh) * k + kw];
            if (wgt == T(0)) continue;
            const int off = kw * dilation - pad;
            const int lo = std::max(0, detail::div_ceil(-off, stride));
            const int hi = std::min(OW - 1, detail::div_floor(W - 1 - off, stride));
            if (hi < lo) continue;
            for (int oh = 0; oh < OH; ++oh) {
              const int ih = oh * stride - pad + kh * dilation;
              if (ih < 0 || ih >= H) continue;
              const T* xrow = xplane + static_cast<std::size_t>(ih) * W;
              T* yrow = yplane + static_cast<std::size_t>(oh) * OW;
              int iw = lo * stride + off;
              for (int ow = lo; ow <= hi; ++ow, iw += stride)
                yrow[ow] += wgt * xrow[iw];
            }
          }
        }
      }
    }
  }

  if (track) {
    y.node()->backward_fn = [N, Cin, H, W, Cout, k, OH, OW, stride, pad,
                             dilation](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      TensorNode<T>& wn = *self.parents[1];
      TensorNode<T>& bn = *self.parents[2];
      const T* g = self.grad.data();
      const bool need_dx = xn.requires_grad;
      const bool need_dw = wn.requires_grad;
      const bool need_db = bn.requires_grad;
      if (need_dx) xn.ensure_grad();
      if (need_dw) wn.ensure_grad();
      if (need_db) bn.ensure_grad();

      if (need_db) {
        for (int n = 0; n < N; ++n)
          for (int co = 0; co < Cout; ++co) {
            const T* gplane = g + (static_cast<std::size_t>(n) * Cout + co) * OH * OW;
            T acc = T(0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(OH) * OW; ++i)
              acc += gplane[i];
            bn.grad[co] += acc;
          }
      }
      if (!need_dx && !need_dw) return;

      for (int n = 0; n < N; ++n) {
        for (int co = 0; co < Cout; ++co) {
          const T* gplane = g + (static_cast<std::size_t>(n) * Cout + co) * OH * OW;
          for (int ci = 0; ci < Cin; ++ci) {
            const std::size_t xbase = (static_cast<std::size_t>(n) * Cin + ci) * H * W;
            for (int kh = 0; kh < k; ++kh) {
              for (int kw = 0; kw < k; ++kw) {
                const std::size_t widx =
                    ((static_cast<std::size_t>(co) * Cin + ci) * k + kh) * k + kw;
                const T wgt = wn.values[widx];
                const int off = kw * dilation - pad;
                const int lo = std::max(0, detail::div_ceil(-off, stride));
                const int hi = std::min(OW - 1, detail::div_floor(W - 1 - off, stride));
                if (hi < lo) continue;
                T wacc = T(0);
                for (int oh = 0; oh < OH; ++oh) {
                  const int ih = oh * stride - pad + kh * dilation;
                  if (ih < 0 || ih >= H) continue;
                  const T* grow = gplane + static_cast<std::size_t>(oh) * OW;
                  const std::size_t xrow = xbase + static_cast<std::size_t>(ih) * W;
                  int iw = lo * stride + off;
                  if (need_dw) {
                    const T* xrowv = xn.values.data() + xrow;
                    int iw2 = iw;
                    for (int ow = lo; ow <= hi; ++ow, iw2 += stride)
                      wacc += grow[ow] * xrowv[iw2];
                  }
                  if (need_dx) {
                    T* dxrow = xn.grad.data() + xrow;
                    for (int ow = lo; ow <= hi; ++ow, iw += stride)
                      dxrow[iw] += wgt * grow[ow];
                  }
                }
                if (need_dw) wn.grad[widx] += wacc;
              }
            }
          }
        }
      }
    };
  }
  return y;
}

// ---------------------------------------------------------------------------
// batchnorm2d: per-channel normalization, population variance in train mode
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, Phase phase, T eps = T(1e-5),
                      T momentum = T(0.1)) {
  detail::check_nchw(x, "batchnorm2d");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  require(gamma.shape() == Shape{C} && beta.shape() == Shape{C},
          "batchnorm2d gamma/beta must have shape (", C, ")");
  require(running_mean.shape() == Shape{C} && running_var.shape() == Shape{C},
          "batchnorm2d running stats must have shape (", C, ")");
  const std::size_t m = static_cast<std::size_t>(N) * H * W;
  if (phase == Phase::train)
    require(m >= 2, "batchnorm2d train mode needs at least 2 values per channel, got ", m);

  bool track = detail::any_requires_grad<T>(x, gamma, beta);
  Tensor<T> y = detail::make_result<T>({N, C, H, W}, track, {x, gamma, beta});

  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const T* xv = x.data();
  T* yv = y.data();

  std::vector<T> mean(C), invstd(C);
  if (phase == Phase::train) {
    for (int c = 0; c < C; ++c) {
      double sum = 0;
      for (int n = 0; n < N; ++n) {
        const T* p = xv + (static_cast<std::size_t>(n) * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(p[i]);
      }
      const double mu = sum / static_cast<double>(m);
      double ss = 0;
      for (int n = 0; n < N; ++n) {
        const T* p = xv + (static_cast<std::size_t>(n) * C + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(m);
      mean[c] = static_cast<T>(mu);
      invstd[c] = T(1) / std::sqrt(static_cast<T>(var) + eps);
      running_mean.values()[c] =
          (T(1) - momentum) * running_mean.values()[c] + momentum * static_cast<T>(mu);
      running_var.values()[c] =
          (T(1) - momentum) * running_var.values()[c] + momentum * static_cast<T>(var);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean.values()[c];
      invstd[c] = T(1) / std::sqrt(running_var.values()[c] + eps);
    }
  }

  // xhat is kept for the backward pass.
  std::vector<T> xhat(track ? x.numel() : 0);
  const T* gv = gamma.data();
  const T* bv = beta.data();
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
      const T mu = mean[c], is = invstd[c], ga = gv[c], be = bv[c];
      for (std::size_t i = 0; i < plane; ++i) {
        const T xh = (xv[base + i] - mu) * is;
        if (track) xhat[base + i] = xh;
        yv[base + i] = ga * xh + be;
      }
    }
  }

  if (track) {
    y.node()->backward_fn = [N, C, plane, m, invstd, xhat = std::move(xhat),
                             phase](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      TensorNode<T>& gn = *self.parents[1];
      TensorNode<T>& bn = *self.parents[2];
      const T* g = self.grad.data();
      if (gn.requires_grad) {
        gn.ensure_grad();
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += g[base + i] * xhat[base + i];
            gn.grad[c] += acc;
          }
      }
      if (bn.requires_grad) {
        bn.ensure_grad();
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
            T acc = T(0);
            for (std::size_t i = 0; i < plane; ++i) acc += g[base + i];
            bn.grad[c] += acc;
          }
      }
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      if (phase == Phase::eval) {
        // running stats are constants here
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
            const T k = gn.values[c] * invstd[c];
            for (std::size_t i = 0; i < plane; ++i) xn.grad[base + i] += k * g[base + i];
          }
        return;
      }
      // train mode: gradients flow through the batch statistics
      for (int c = 0; c < C; ++c) {
        T sg = T(0), sgx = T(0);
        for (int n = 0; n < N; ++n) {
          const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            sg += g[base + i];
            sgx += g[base + i] * xhat[base + i];
          }
        }
        const T inv_m = T(1) / static_cast<T>(m);
        const T k = gn.values[c] * invstd[c];
        for (int n = 0; n < N; ++n) {
          const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i)
            xn.grad[base + i] +=
                k * (g[base + i] - sg * inv_m - xhat[base + i] * sgx * inv_m);
        }
      }
    };
  }
  return y;
}

// ---------------------------------------------------------------------------
// elementwise activations
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>(x.shape(), track, {x});
  const T* xv = x.data();
  T* yv = y.data();
  for (std::size_t i = 0; i < x.numel(); ++i) yv[i] = xv[i] > T(0) ? xv[i] : T(0);
  if (track) {
    y.node()->backward_fn = [](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      // subgradient at exactly 0 is 0
      for (std::size_t i = 0; i < self.values.size(); ++i)
        if (xn.values[i] > T(0)) xn.grad[i] += self.grad[i];
    };
  }
  return y;
}

template <typename T>
T sigmoid_scalar(T v) {
  T s;
  if (v >= T(0)) {
    const T e = std::exp(-v);
    s = T(1) / (T(1) + e);
  } else {
    const T e = std::exp(v);
    s = e / (T(1) + e);
  }
  // keep outputs strictly inside (0,1) even when exp() under/overflows
  const T hi = T(1) - std::numeric_limits<T>::epsilon();
  const T lo = std::numeric_limits<T>::min();
  return std::min(hi, std::max(lo, s));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>(x.shape(), track, {x});
  const T* xv = x.data();
  T* yv = y.data();
  for (std::size_t i = 0; i < x.numel(); ++i) yv[i] = sigmoid_scalar(xv[i]);
  if (track) {
    y.node()->backward_fn = [](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      for (std::size_t i = 0; i < self.values.size(); ++i) {
        const T s = self.values[i];
        xn.grad[i] += self.grad[i] * s * (T(1) - s);
      }
    };
  }
  return y;
}

// ---------------------------------------------------------------------------
// maxpool2d: 2x2 window, stride 2, ceil mode; gradient to first max found
// in row-major window order
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x) {
  detail::check_nchw(x, "maxpool2d");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  require(H >= 2 && W >= 2, "maxpool2d needs spatial extents >= 2, got ", H, "x", W);
  const int OH = (H + 1) / 2, OW = (W + 1) / 2;

  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>({N, C, OH, OW}, track, {x});
  std::vector<int> argmax(track ? y.numel() : 0);

  const T* xv = x.data();
  T* yv = y.data();
  std::size_t oi = 0;
  for (int nc = 0; nc < N * C; ++nc) {
    const T* xplane = xv + static_cast<std::size_t>(nc) * H * W;
    for (int oh = 0; oh < OH; ++oh) {
      const int h1 = std::min(2 * oh + 1, H - 1);
      for (int ow = 0; ow < OW; ++ow, ++oi) {
        const int w1 = std::min(2 * ow + 1, W - 1);
        T best = xplane[static_cast<std::size_t>(2 * oh) * W + 2 * ow];
        int besti = 2 * oh * W + 2 * ow;
        for (int h = 2 * oh; h <= h1; ++h)
          for (int w = 2 * ow; w <= w1; ++w) {
            const T v = xplane[static_cast<std::size_t>(h) * W + w];
            if (v > best) {
              best = v;
              besti = h * W + w;
            }
          }
        yv[oi] = best;
        if (track) argmax[oi] = besti;
      }
    }
  }

  if (track) {
    y.node()->backward_fn = [N, C, H, W, OH, OW,
                             argmax = std::move(argmax)](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      std::size_t oi = 0;
      for (int nc = 0; nc < N * C; ++nc) {
        T* dxplane = xn.grad.data() + static_cast<std::size_t>(nc) * H * W;
        for (int o = 0; o < OH * OW; ++o, ++oi) dxplane[argmax[oi]] += self.grad[oi];
      }
    };
  }
  return y;
}

// ---------------------------------------------------------------------------
// upsampling: corner-aligned bilinear (or nearest), to an explicit size or
// by an integer factor
// ---------------------------------------------------------------------------

namespace detail {

struct UpsampleTap {
  int i0, i1;
  double f;  // weight of i1
};

inline std::vector<UpsampleTap> upsample_taps(int in, int out, Interp mode) {
  std::vector<UpsampleTap> taps(out);
  for (int o = 0; o < out; ++o) {
    double src = (in == 1 || out == 1)
                     ? 0.0
                     : static_cast<double>(o) * (in - 1) / (out - 1);
    if (mode == Interp::nearest) src = std::floor(src + 0.5);
    int i0 = static_cast<int>(src);
    i0 = std::min(i0, in - 1);
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace detail

template <typename T>
Tensor<T> upsample_to(const Tensor<T>& x, int out_h, int out_w,
                      Interp mode = Interp::bilinear) {
  detail::check_nchw(x, "upsample_to");
  require(out_h >= 1 && out_w >= 1, "upsample_to target extents must be >= 1");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  const auto rows = detail::upsample_taps(H, out_h, mode);
  const auto cols = detail::upsample_taps(W, out_w, mode);

  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>({N, C, out_h, out_w}, track, {x});
  const T* xv = x.data();
  T* yv = y.data();
  for (int nc = 0; nc < N * C; ++nc) {
    const T* xp = xv + static_cast<std::size_t>(nc) * H * W;
    T* yp = yv + static_cast<std::size_t>(nc) * out_h * out_w;
    for (int oh = 0; oh < out_h; ++oh) {
      const auto& r = rows[oh];
      const T fr = static_cast<T>(r.f);
      const T* row0 = xp + static_cast<std::size_t>(r.i0) * W;
      const T* row1 = xp + static_cast<std::size_t>(r.i1) * W;
      T* orow = yp + static_cast<std::size_t>(oh) * out_w;
      for (int ow = 0; ow < out_w; ++ow) {
        const auto& c = cols[ow];
        const T fc = static_cast<T>(c.f);
        const T top = row0[c.i0] + fc * (row0[c.i1] - row0[c.i0]);
        const T bot = row1[c.i0] + fc * (row1[c.i1] - row1[c.i0]);
        orow[ow] = top + fr * (bot - top);
      }
    }
  }

  if (track) {
    y.node()->backward_fn = [N, C, H, W, out_h, out_w, rows,
                             cols](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      for (int nc = 0; nc < N * C; ++nc) {
        T* dxp = xn.grad.data() + static_cast<std::size_t>(nc) * H * W;
        const T* gp = self.grad.data() + static_cast<std::size_t>(nc) * out_h * out_w;
        for (int oh = 0; oh < out_h; ++oh) {
          const auto& r = rows[oh];
          const T fr = static_cast<T>(r.f);
          for (int ow = 0; ow < out_w; ++ow) {
            const auto& c = cols[ow];
            const T fc = static_cast<T>(c.f);
            const T g = gp[static_cast<std::size_t>(oh) * out_w + ow];
            dxp[static_cast<std::size_t>(r.i0) * W + c.i0] += (T(1) - fr) * (T(1) - fc) * g;
            dxp[static_cast<std::size_t>(r.i0) * W + c.i1] += (T(1) - fr) * fc * g;
            dxp[static_cast<std::size_t>(r.i1) * W + c.i0] += fr * (T(1) - fc) * g;
            dxp[static_cast<std::size_t>(r.i1) * W + c.i1] += fr * fc * g;
          }
        }
      }
    };
  }
  return y;
}

template <typename T>
Tensor<T> upsample2d(const Tensor<T>& x, int factor, Interp mode = Interp::bilinear) {
  detail::check_nchw(x, "upsample2d");
  require(factor >= 2, "upsample2d factor must be >= 2, got ", factor);
  return upsample_to(x, x.extent(2) * factor, x.extent(3) * factor, mode);
}

// ---------------------------------------------------------------------------
// concat over the channel axis
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  require(!xs.empty(), "concat_channels needs at least one input");
  detail::check_nchw(xs[0], "concat_channels");
  const int N = xs[0].extent(0), H = xs[0].extent(2), W = xs[0].extent(3);
  int Ctot = 0;
  bool track = false;
  for (const auto& x : xs) {
    detail::check_nchw(x, "concat_channels");
    require(x.extent(0) == N && x.extent(2) == H && x.extent(3) == W,
            "concat_channels extent mismatch: ", shape_str(x.shape()), " vs ",
            shape_str(xs[0].shape()));
    Ctot += x.extent(1);
    track = track || (GradMode::enabled() && x.requires_grad());
  }

  auto node = std::make_shared<TensorNode<T>>();
  node->shape = {N, Ctot, H, W};
  node->values.assign(shape_numel(node->shape), T(0));
  if (track) {
    node->requires_grad = true;
    for (const auto& x : xs) node->parents.push_back(x.node());
  }
  Tensor<T> y(std::move(node));

  const std::size_t plane = static_cast<std::size_t>(H) * W;
  std::vector<int> channels(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) channels[i] = xs[i].extent(1);

  T* yv = y.data();
  for (int n = 0; n < N; ++n) {
    int cofs = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const int Ci = channels[i];
      const T* src = xs[i].data() + static_cast<std::size_t>(n) * Ci * plane;
      T* dst = yv + (static_cast<std::size_t>(n) * Ctot + cofs) * plane;
      std::copy(src, src + static_cast<std::size_t>(Ci) * plane, dst);
      cofs += Ci;
    }
  }

  if (track) {
    y.node()->backward_fn = [N, Ctot, plane, channels](const TensorNode<T>& self) {
      for (int n = 0; n < N; ++n) {
        int cofs = 0;
        for (std::size_t i = 0; i < channels.size(); ++i) {
          const int Ci = channels[i];
          TensorNode<T>& p = *self.parents[i];
          if (p.requires_grad) {
            p.ensure_grad();
            const T* g = self.grad.data() + (static_cast<std::size_t>(n) * Ctot + cofs) * plane;
            T* dst = p.grad.data() + static_cast<std::size_t>(n) * Ci * plane;
            for (std::size_t j = 0; j < static_cast<std::size_t>(Ci) * plane; ++j)
              dst[j] += g[j];
          }
          cofs += Ci;
        }
      }
    };
  }
  return y;
}

// ---------------------------------------------------------------------------
// elementwise arithmetic and reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& x, const Tensor<T>& y) {
  require(x.shape() == y.shape(), "add shape mismatch: ", shape_str(x.shape()),
          " vs ", shape_str(y.shape()));
  bool track = detail::any_requires_grad<T>(x, y);
  Tensor<T> z = detail::make_result<T>(x.shape(), track, {x, y});
  const T* a = x.data();
  const T* b = y.data();
  T* c = z.data();
  for (std::size_t i = 0; i < x.numel(); ++i) c[i] = a[i] + b[i];
  if (track) {
    z.node()->backward_fn = [](const TensorNode<T>& self) {
      for (int p = 0; p < 2; ++p) {
        TensorNode<T>& pn = *self.parents[p];
        if (!pn.requires_grad) continue;
        pn.ensure_grad();
        for (std::size_t i = 0; i < self.values.size(); ++i) pn.grad[i] += self.grad[i];
      }
    };
  }
  return z;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& x, const Tensor<T>& y) {
  require(x.shape() == y.shape(), "mul shape mismatch: ", shape_str(x.shape()),
          " vs ", shape_str(y.shape()));
  bool track = detail::any_requires_grad<T>(x, y);
  Tensor<T> z = detail::make_result<T>(x.shape(), track, {x, y});
  const T* a = x.data();
  const T* b = y.data();
  T* c = z.data();
  for (std::size_t i = 0; i < x.numel(); ++i) c[i] = a[i] * b[i];
  if (track) {
    z.node()->backward_fn = [](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      TensorNode<T>& yn = *self.parents[1];
      if (xn.requires_grad) {
        xn.ensure_grad();
        for (std::size_t i = 0; i < self.values.size(); ++i)
          xn.grad[i] += self.grad[i] * yn.values[i];
      }
      if (yn.requires_grad) {
        yn.ensure_grad();
        for (std::size_t i = 0; i < self.values.size(); ++i)
          yn.grad[i] += self.grad[i] * xn.values[i];
      }
    };
  }
  return z;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>(x.shape(), track, {x});
  const T* a = x.data();
  T* b = y.data();
  for (std::size_t i = 0; i < x.numel(); ++i) b[i] = c * a[i];
  if (track) {
    y.node()->backward_fn = [c](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      for (std::size_t i = 0; i < self.values.size(); ++i)
        xn.grad[i] += c * self.grad[i];
    };
  }
  return y;
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& x) {
  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>({1}, track, {x});
  T acc = T(0);
  for (T v : x.values()) acc += v;
  y.values()[0] = acc;
  if (track) {
    y.node()->backward_fn = [](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      const T g = self.grad[0];
      for (std::size_t i = 0; i < xn.values.size(); ++i) xn.grad[i] += g;
    };
  }
  return y;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x) {
  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>({1}, track, {x});
  T acc = T(0);
  for (T v : x.values()) acc += v;
  const T inv_n = T(1) / static_cast<T>(x.numel());
  y.values()[0] = acc * inv_n;
  if (track) {
    y.node()->backward_fn = [inv_n](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      const T g = self.grad[0] * inv_n;
      for (std::size_t i = 0; i < xn.values.size(); ++i) xn.grad[i] += g;
    };
  }
  return y;
}

// Mean over the channel axis of an NxCxHxW tensor, keeping a singleton
// channel. Used to reduce multi-channel side outputs to one probability map.
template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x) {
  detail::check_nchw(x, "channel_mean");
  const int N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  bool track = detail::any_requires_grad<T>(x);
  Tensor<T> y = detail::make_result<T>({N, 1, H, W}, track, {x});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const T inv_c = T(1) / static_cast<T>(C);
  const T* xv = x.data();
  T* yv = y.data();
  for (int n = 0; n < N; ++n) {
    T* yp = yv + static_cast<std::size_t>(n) * plane;
    std::fill(yp, yp + plane, T(0));
    for (int c = 0; c < C; ++c) {
      const T* xp = xv + (static_cast<std::size_t>(n) * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) yp[i] += xp[i];
    }
    for (std::size_t i = 0; i < plane; ++i) yp[i] *= inv_c;
  }
  if (track) {
    y.node()->backward_fn = [N, C, plane, inv_c](const TensorNode<T>& self) {
      TensorNode<T>& xn = *self.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      for (int n = 0; n < N; ++n) {
        const T* g = self.grad.data() + static_cast<std::size_t>(n) * plane;
        for (int c = 0; c < C; ++c) {
          T* dxp = xn.grad.data() + (static_cast<std::size_t>(n) * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) dxp[i] += g[i] * inv_c;
        }
      }
    };
  }
  return y;
}

}  // namespace airseg
