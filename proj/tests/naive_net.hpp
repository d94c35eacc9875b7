#pragma once

// Straight-line re-implementation of the forward path on plain arrays, kept
// deliberately independent of the tensor engine: no graph, no shared code
// beyond the parameter store it reads values from. Used as a forward oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "airseg/params.hpp"
#include "airseg/u2net.hpp"

namespace naive {

struct Plane {
  int n = 1, c = 0, h = 0, w = 0;
  std::vector<double> v;

  std::size_t idx(int ni, int ci, int hi, int wi) const {
    return ((static_cast<std::size_t>(ni) * c + ci) * h + hi) * w + wi;
  }
};

inline Plane conv2d(const Plane& x, const std::vector<double>& wt,
                    const std::vector<double>& b, int cout, int k, int pad,
                    int dil) {
  Plane y;
  y.n = x.n;
  y.c = cout;
  y.h = (x.h + 2 * pad - dil * (k - 1) - 1) + 1;
  y.w = (x.w + 2 * pad - dil * (k - 1) - 1) + 1;
  y.v.assign(static_cast<std::size_t>(y.n) * y.c * y.h * y.w, 0.0);
  for (int ni = 0; ni < y.n; ++ni)
    for (int co = 0; co < cout; ++co)
      for (int oh = 0; oh < y.h; ++oh)
        for (int ow = 0; ow < y.w; ++ow) {
          double acc = b[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < x.c; ++ci)
            for (int kh = 0; kh < k; ++kh)
              for (int kw = 0; kw < k; ++kw) {
                const int ih = oh - pad + kh * dil;
                const int iw = ow - pad + kw * dil;
                if (ih < 0 || ih >= x.h || iw < 0 || iw >= x.w) continue;
                acc += wt[((static_cast<std::size_t>(co) * x.c + ci) * k + kh) * k + kw] *
                       x.v[x.idx(ni, ci, ih, iw)];
              }
          y.v[y.idx(ni, co, oh, ow)] = acc;
        }
  return y;
}

inline Plane batchnorm(const Plane& x, const std::vector<double>& gamma,
                       const std::vector<double>& beta,
                       const std::vector<double>& rm, const std::vector<double>& rv,
                       bool train, double eps = 1e-5) {
  Plane y = x;
  for (int ci = 0; ci < x.c; ++ci) {
    double mu, var;
    if (train) {
      double sum = 0;
      std::size_t m = 0;
      for (int ni = 0; ni < x.n; ++ni)
        for (int hi = 0; hi < x.h; ++hi)
          for (int wi = 0; wi < x.w; ++wi) {
            sum += x.v[x.idx(ni, ci, hi, wi)];
            ++m;
          }
      mu = sum / static_cast<double>(m);
      double ss = 0;
      for (int ni = 0; ni < x.n; ++ni)
        for (int hi = 0; hi < x.h; ++hi)
          for (int wi = 0; wi < x.w; ++wi) {
            const double d = x.v[x.idx(ni, ci, hi, wi)] - mu;
            ss += d * d;
          }
      var = ss / static_cast<double>(m);
    } else {
      mu = rm[static_cast<std::size_t>(ci)];
      var = rv[static_cast<std::size_t>(ci)];
    }
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int ni = 0; ni < x.n; ++ni)
      for (int hi = 0; hi < x.h; ++hi)
        for (int wi = 0; wi < x.w; ++wi) {
          auto& o = y.v[y.idx(ni, ci, hi, wi)];
          o = gamma[static_cast<std::size_t>(ci)] * (o - mu) * inv +
              beta[static_cast<std::size_t>(ci)];
        }
  }
  return y;
}

inline Plane relu(Plane x) {
  for (auto& v : x.v) v = v > 0 ? v : 0;
  return x;
}

inline Plane sigmoid(Plane x) {
  for (auto& v : x.v) {
    double s = v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
    s = std::min(1.0 - 2.220446049250313e-16, std::max(2.2250738585072014e-308, s));
    v = s;
  }
  return x;
}

inline Plane maxpool(const Plane& x) {
  Plane y;
  y.n = x.n;
  y.c = x.c;
  y.h = (x.h + 1) / 2;
  y.w = (x.w + 1) / 2;
  y.v.assign(static_cast<std::size_t>(y.n) * y.c * y.h * y.w, 0.0);
  for (int ni = 0; ni < x.n; ++ni)
    for (int ci = 0; ci < x.c; ++ci)
      for (int oh = 0; oh < y.h; ++oh)
        for (int ow = 0; ow < y.w; ++ow) {
          double best = -1e300;
          for (int hi = 2 * oh; hi <= std::min(2 * oh + 1, x.h - 1); ++hi)
            for (int wi = 2 * ow; wi <= std::min(2 * ow + 1, x.w - 1); ++wi)
              best = std::max(best, x.v[x.idx(ni, ci, hi, wi)]);
          y.v[y.idx(ni, ci, oh, ow)] = best;
        }
  return y;
}

inline Plane upsample_bilinear(const Plane& x, int oh, int ow) {
  Plane y;
  y.n = x.n;
  y.c = x.c;
  y.h = oh;
  y.w = ow;
  y.v.assign(static_cast<std::size_t>(y.n) * y.c * oh * ow, 0.0);
  auto src = [](int o, int in, int out) {
    return (in == 1 || out == 1) ? 0.0
                                 : static_cast<double>(o) * (in - 1) / (out - 1);
  };
  for (int ni = 0; ni < x.n; ++ni)
    for (int ci = 0; ci < x.c; ++ci)
      for (int r = 0; r < oh; ++r) {
        const double sr = src(r, x.h, oh);
        const int r0 = static_cast<int>(sr);
        const int r1 = std::min(r0 + 1, x.h - 1);
        const double fr = sr - r0;
        for (int cw = 0; cw < ow; ++cw) {
          const double sc = src(cw, x.w, ow);
          const int c0 = static_cast<int>(sc);
          const int c1 = std::min(c0 + 1, x.w - 1);
          const double fc = sc - c0;
          const double top = x.v[x.idx(ni, ci, r0, c0)] +
                             fc * (x.v[x.idx(ni, ci, r0, c1)] - x.v[x.idx(ni, ci, r0, c0)]);
          const double bot = x.v[x.idx(ni, ci, r1, c0)] +
                             fc * (x.v[x.idx(ni, ci, r1, c1)] - x.v[x.idx(ni, ci, r1, c0)]);
          y.v[y.idx(ni, ci, r, cw)] = top + fr * (bot - top);
        }
      }
  return y;
}

inline Plane concat(const Plane& a, const Plane& b) {
  Plane y;
  y.n = a.n;
  y.c = a.c + b.c;
  y.h = a.h;
  y.w = a.w;
  y.v.resize(static_cast<std::size_t>(y.n) * y.c * y.h * y.w);
  for (int ni = 0; ni < y.n; ++ni) {
    for (int ci = 0; ci < a.c; ++ci)
      for (int hi = 0; hi < y.h; ++hi)
        for (int wi = 0; wi < y.w; ++wi)
          y.v[y.idx(ni, ci, hi, wi)] = a.v[a.idx(ni, ci, hi, wi)];
    for (int ci = 0; ci < b.c; ++ci)
      for (int hi = 0; hi < y.h; ++hi)
        for (int wi = 0; wi < y.w; ++wi)
          y.v[y.idx(ni, a.c + ci, hi, wi)] = b.v[b.idx(ni, ci, hi, wi)];
  }
  return y;
}

inline Plane add(Plane a, const Plane& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

// parameter access helpers

template <typename T>
std::vector<double> values_of(const airseg::ParamStore<T>& store,
                              const std::string& name) {
  const auto& t = store.get(name);
  return std::vector<double>(t.values().begin(), t.values().end());
}

template <typename T>
Plane cbr(const Plane& x, const airseg::ParamStore<T>& store,
          const std::string& prefix, int cout, int dil, bool train) {
  Plane y = conv2d(x, values_of(store, prefix + "/w"), values_of(store, prefix + "/b"),
                   cout, 3, dil, dil);
  y = batchnorm(y, values_of(store, prefix + "/bn_g"), values_of(store, prefix + "/bn_b"),
                values_of(store, prefix + "/bn_rm"), values_of(store, prefix + "/bn_rv"),
                train);
  return relu(std::move(y));
}

template <typename T>
Plane rsu(const Plane& x, const airseg::RsuSpec& spec,
          const airseg::ParamStore<T>& store, const std::string& prefix, bool train) {
  const int L = spec.height;
  Plane fin = cbr(x, store, prefix + "/convin", spec.out_ch, 1, train);
  std::vector<Plane> enc(static_cast<std::size_t>(L));
  if (spec.dilated) {
    enc[0] = cbr(fin, store, prefix + "/enc0", spec.mid_ch, 1, train);
    for (int i = 1; i < L; ++i)
      enc[static_cast<std::size_t>(i)] =
          cbr(enc[static_cast<std::size_t>(i - 1)], store,
              prefix + "/enc" + std::to_string(i), spec.mid_ch, 1 << i, train);
    Plane d = cbr(concat(enc[static_cast<std::size_t>(L - 1)],
                         enc[static_cast<std::size_t>(L - 2)]),
                  store, prefix + "/dec" + std::to_string(L - 2),
                  L == 2 ? spec.out_ch : spec.mid_ch,
                  L >= 3 ? (1 << (L - 2)) : 1, train);
    for (int j = L - 3; j >= 0; --j)
      d = cbr(concat(d, enc[static_cast<std::size_t>(j)]), store,
              prefix + "/dec" + std::to_string(j),
              j == 0 ? spec.out_ch : spec.mid_ch, 1 << j, train);
    return add(std::move(d), fin);
  }
  enc[0] = cbr(fin, store, prefix + "/enc0", spec.mid_ch, 1, train);
  Plane cur = enc[0];
  for (int i = 1; i <= L - 2; ++i) {
    cur = maxpool(cur);
    enc[static_cast<std::size_t>(i)] =
        cbr(cur, store, prefix + "/enc" + std::to_string(i), spec.mid_ch, 1, train);
    cur = enc[static_cast<std::size_t>(i)];
  }
  enc[static_cast<std::size_t>(L - 1)] =
      cbr(enc[static_cast<std::size_t>(L - 2)], store,
          prefix + "/enc" + std::to_string(L - 1), spec.mid_ch, 2, train);
  Plane d = cbr(concat(enc[static_cast<std::size_t>(L - 1)],
                       enc[static_cast<std::size_t>(L - 2)]),
                store, prefix + "/dec" + std::to_string(L - 2),
                L == 2 ? spec.out_ch : spec.mid_ch, 1, train);
  for (int j = L - 3; j >= 0; --j) {
    d = upsample_bilinear(d, enc[static_cast<std::size_t>(j)].h,
                          enc[static_cast<std::size_t>(j)].w);
    d = cbr(concat(d, enc[static_cast<std::size_t>(j)]), store,
            prefix + "/dec" + std::to_string(j),
            j == 0 ? spec.out_ch : spec.mid_ch, 1, train);
  }
  return add(std::move(d), fin);
}

template <typename T>
Plane u2net_fuse(const Plane& x, const airseg::U2NetSpec& spec,
                 const airseg::ParamStore<T>& store, bool train) {
  std::array<Plane, 6> hx;
  Plane cur = x;
  for (int s = 0; s < 6; ++s) {
    hx[static_cast<std::size_t>(s)] =
        rsu(cur, spec.encoder[static_cast<std::size_t>(s)], store,
            "enc" + std::to_string(s + 1), train);
    if (s < 5) cur = maxpool(hx[static_cast<std::size_t>(s)]);
  }
  std::array<Plane, 5> dec;
  Plane deeper = hx[5];
  for (int s = 4; s >= 0; --s) {
    Plane up = upsample_bilinear(deeper, hx[static_cast<std::size_t>(s)].h,
                                 hx[static_cast<std::size_t>(s)].w);
    dec[static_cast<std::size_t>(s)] =
        rsu(concat(up, hx[static_cast<std::size_t>(s)]),
            spec.decoder[static_cast<std::size_t>(s)], store,
            "dec" + std::to_string(s + 1), train);
    deeper = dec[static_cast<std::size_t>(s)];
  }
  Plane logits;
  for (int s = 0; s < 6; ++s) {
    const Plane& src = s < 5 ? dec[static_cast<std::size_t>(s)] : hx[5];
    Plane logit = conv2d(src, values_of(store, "side" + std::to_string(s + 1) + "/w"),
                         values_of(store, "side" + std::to_string(s + 1) + "/b"),
                         spec.side_channels, 3, 1, 1);
    if (logit.h != x.h || logit.w != x.w)
      logit = upsample_bilinear(logit, x.h, x.w);
    logits = s == 0 ? logit : concat(logits, logit);
  }
  Plane fuse = conv2d(logits, values_of(store, "fuse/w"), values_of(store, "fuse/b"),
                      spec.side_channels, 1, 0, 1);
  return sigmoid(std::move(fuse));
}

}  // namespace naive
