#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "airseg/ops.hpp"
#include "airseg/params.hpp"
#include "airseg/tensor.hpp"

namespace airseg {

// ---------------------------------------------------------------------------
// architecture description
// ---------------------------------------------------------------------------

// One residual U-block: an input transform plus an internal encoder-decoder U
// of `height` levels, added residually. The dilated variant keeps resolution
// and grows dilation 1,2,4,... instead of pooling.
struct RsuSpec {
  int height = 2;
  int in_ch = 1;
  int mid_ch = 1;
  int out_ch = 1;
  bool dilated = false;

  // smallest legal spatial extent at the block's own resolution
  int min_extent() const { return dilated ? 1 : (1 << (height - 1)); }

  void validate() const {
    require(height >= 2, "RSU height must be >= 2, got ", height);
    require(in_ch >= 1 && mid_ch >= 1 && out_ch >= 1,
            "RSU channel counts must be positive");
  }
};

// Six encoder stages, five decoder stages. decoder[i] is the stage working at
// encoder stage i's resolution (decoder[4] is the deepest, applied first).
struct U2NetSpec {
  int input_channels = 2;
  int side_channels = 1;
  double width_factor = 1.0;
  Interp upsample = Interp::bilinear;
  std::array<RsuSpec, 6> encoder;
  std::array<RsuSpec, 5> decoder;

  static U2NetSpec canonical(int input_channels = 2, int side_channels = 1,
                             double width_factor = 1.0);
  static U2NetSpec toy(int input_channels = 2, int side_channels = 1,
                       double width_factor = 1.0);

  void validate() const;
  int min_input_extent() const;
  int fuse_in_channels() const { return 6 * side_channels; }
};

namespace detail {

inline int scaled_channels(int base, double factor) {
  int c = static_cast<int>(std::lround(base * factor));
  return c < 1 ? 1 : c;
}

}  // namespace detail

inline U2NetSpec U2NetSpec::canonical(int input_channels, int side_channels,
                                      double width_factor) {
  require(width_factor > 0, "width_factor must be positive, got ", width_factor);
  auto ch = [&](int base) { return detail::scaled_channels(base, width_factor); };
  U2NetSpec s;
  s.input_channels = input_channels;
  s.side_channels = side_channels;
  s.width_factor = width_factor;
  // heights and widths of the reference two-level nested design
  s.encoder = {{{7, input_channels, ch(32), ch(64), false},
                {6, ch(64), ch(32), ch(128), false},
                {5, ch(128), ch(64), ch(256), false},
                {4, ch(256), ch(128), ch(512), false},
                {4, ch(512), ch(256), ch(512), true},
                {4, ch(512), ch(256), ch(512), true}}};
  s.decoder = {{{7, ch(64) + ch(64), ch(16), ch(64), false},
                {6, ch(128) + ch(128), ch(32), ch(64), false},
                {5, ch(256) + ch(256), ch(64), ch(128), false},
                {4, ch(512) + ch(512), ch(128), ch(256), false},
                {4, ch(512) + ch(512), ch(256), ch(512), true}}};
  s.validate();
  return s;
}

inline U2NetSpec U2NetSpec::toy(int input_channels, int side_channels,
                                double width_factor) {
  require(width_factor > 0, "width_factor must be positive, got ", width_factor);
  auto ch = [&](int base) { return detail::scaled_channels(base, width_factor); };
  const int mid = ch(4), out = ch(8);
  U2NetSpec s;
  s.input_channels = input_channels;
  s.side_channels = side_channels;
  s.width_factor = width_factor;
  s.encoder = {{{3, input_channels, mid, out, false},
                {3, out, mid, out, false},
                {2, out, mid, out, false},
                {2, out, mid, out, false},
                {2, out, mid, out, true},
                {2, out, mid, out, true}}};
  s.decoder = {{{3, 2 * out, mid, out, false},
                {3, 2 * out, mid, out, false},
                {2, 2 * out, mid, out, false},
                {2, 2 * out, mid, out, false},
                {2, 2 * out, mid, out, true}}};
  s.validate();
  return s;
}

inline void U2NetSpec::validate() const {
  require(input_channels >= 1, "input_channels must be >= 1");
  require(side_channels >= 1, "side_channels must be >= 1");
  for (const auto& r : encoder) r.validate();
  for (const auto& r : decoder) r.validate();
  require(encoder[0].in_ch == input_channels, "encoder stage 1 must consume ",
          input_channels, " input channels, spec says ", encoder[0].in_ch);
  for (int s = 1; s < 6; ++s)
    require(encoder[s].in_ch == encoder[s - 1].out_ch,
            "encoder stage ", s + 1, " input channels (", encoder[s].in_ch,
            ") must equal stage ", s, " output channels (", encoder[s - 1].out_ch, ")");
  require(decoder[4].in_ch == encoder[5].out_ch + encoder[4].out_ch,
          "decoder stage 5 must consume encoder 6 + encoder 5 outputs");
  for (int s = 0; s < 4; ++s)
    require(decoder[s].in_ch == decoder[s + 1].out_ch + encoder[s].out_ch,
            "decoder stage ", s + 1, " must consume decoder ", s + 2,
            " + encoder ", s + 1, " outputs");
}

inline int U2NetSpec::min_input_extent() const {
  // walk from the deepest stage back to the input; each 2x2 ceil-mode pool
  // needs extent >= 2 and maps m to 2m-1 one level up
  int m = encoder[5].min_extent();
  for (int s = 4; s >= 0; --s) {
    int need = std::max(encoder[s].min_extent(), decoder[s].min_extent());
    need = std::max(need, 2);  // pool input
    m = std::max(need, 2 * m - 1);
  }
  return m;
}

// ---------------------------------------------------------------------------
// parameter creation
// ---------------------------------------------------------------------------

// Every parameter a spec implies, in deterministic creation order. Shared by
// initialization and by checkpoint verification.
enum class ParamInit { he_normal, zeros, ones };

struct ParamDesc {
  std::string name;
  Shape shape;
  ParamInit init;
  bool trainable;
  int fan_in;  // he_normal only
};

namespace detail {

inline void enumerate_cbr(std::vector<ParamDesc>& out, const std::string& prefix,
                          int in_ch, int out_ch, int k) {
  out.push_back({prefix + "/w", {out_ch, in_ch, k, k}, ParamInit::he_normal, true,
                 in_ch * k * k});
  out.push_back({prefix + "/b", {out_ch}, ParamInit::zeros, true, 0});
  out.push_back({prefix + "/bn_g", {out_ch}, ParamInit::ones, true, 0});
  out.push_back({prefix + "/bn_b", {out_ch}, ParamInit::zeros, true, 0});
  out.push_back({prefix + "/bn_rm", {out_ch}, ParamInit::zeros, false, 0});
  out.push_back({prefix + "/bn_rv", {out_ch}, ParamInit::ones, false, 0});
}

// side and fusion heads carry no batchnorm
inline void enumerate_conv(std::vector<ParamDesc>& out, const std::string& prefix,
                           int in_ch, int out_ch, int k) {
  out.push_back({prefix + "/w", {out_ch, in_ch, k, k}, ParamInit::he_normal, true,
                 in_ch * k * k});
  out.push_back({prefix + "/b", {out_ch}, ParamInit::zeros, true, 0});
}

inline void enumerate_rsu(std::vector<ParamDesc>& out, const std::string& prefix,
                          const RsuSpec& r) {
  enumerate_cbr(out, prefix + "/convin", r.in_ch, r.out_ch, 3);
  enumerate_cbr(out, prefix + "/enc0", r.out_ch, r.mid_ch, 3);
  for (int i = 1; i < r.height; ++i)
    enumerate_cbr(out, prefix + "/enc" + std::to_string(i), r.mid_ch, r.mid_ch, 3);
  for (int j = r.height - 2; j >= 1; --j)
    enumerate_cbr(out, prefix + "/dec" + std::to_string(j), 2 * r.mid_ch, r.mid_ch, 3);
  enumerate_cbr(out, prefix + "/dec0", 2 * r.mid_ch, r.out_ch, 3);
}

}  // namespace detail

inline std::vector<ParamDesc> enumerate_params(const U2NetSpec& spec) {
  spec.validate();
  std::vector<ParamDesc> out;
  for (int s = 0; s < 6; ++s)
    detail::enumerate_rsu(out, "enc" + std::to_string(s + 1), spec.encoder[s]);
  for (int s = 4; s >= 0; --s)
    detail::enumerate_rsu(out, "dec" + std::to_string(s + 1), spec.decoder[s]);
  for (int s = 0; s < 5; ++s)
    detail::enumerate_conv(out, "side" + std::to_string(s + 1),
                           spec.decoder[s].out_ch, spec.side_channels, 3);
  detail::enumerate_conv(out, "side6", spec.encoder[5].out_ch, spec.side_channels, 3);
  detail::enumerate_conv(out, "fuse", spec.fuse_in_channels(), spec.side_channels, 1);
  return out;
}

namespace detail {

template <typename T>
void he_normal_fill(Tensor<T>& w, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (auto& v : w.values()) v = static_cast<T>(dist(rng));
}

}  // namespace detail

// Convolution weights are He-normal (std sqrt(2/fan_in)); biases and
// batchnorm shifts start at zero, batchnorm scales and running variances at
// one. Bit-reproducible for a given seed.
template <typename T>
ParamStore<T> init_params(const U2NetSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore<T> store;
  for (const ParamDesc& d : enumerate_params(spec)) {
    switch (d.init) {
      case ParamInit::he_normal: {
        auto w = Tensor<T>::zeros(d.shape);
        detail::he_normal_fill(w, d.fan_in, rng);
        store.add(d.name, std::move(w), d.trainable);
        break;
      }
      case ParamInit::zeros:
        store.add(d.name, Tensor<T>::zeros(d.shape), d.trainable);
        break;
      case ParamInit::ones:
        store.add(d.name, Tensor<T>::filled(d.shape, T(1)), d.trainable);
        break;
    }
  }
  return store;
}

// ---------------------------------------------------------------------------
// layer audit table
// ---------------------------------------------------------------------------

struct LayerRow {
  std::string name;
  std::string type;
  std::string shape;
  std::size_t params = 0;
};

inline std::size_t conv_param_count(int out_ch, int in_ch, int k) {
  return static_cast<std::size_t>(out_ch) * in_ch * k * k + out_ch;
}

inline std::size_t bn_param_count(int ch) { return 2 * static_cast<std::size_t>(ch); }

namespace detail {

inline void describe_cbr(std::vector<LayerRow>& rows, const std::string& prefix,
                         int in_ch, int out_ch, int k, int dilation) {
  std::string kind = "conv" + std::to_string(k) + "x" + std::to_string(k);
  if (dilation > 1) kind += "/d" + std::to_string(dilation);
  rows.push_back({prefix, kind,
                  std::to_string(out_ch) + "x" + std::to_string(in_ch) + "x" +
                      std::to_string(k) + "x" + std::to_string(k),
                  conv_param_count(out_ch, in_ch, k)});
  rows.push_back({prefix + "/bn", "batchnorm", std::to_string(out_ch),
                  bn_param_count(out_ch)});
}

inline void describe_rsu(std::vector<LayerRow>& rows, const std::string& prefix,
                         const RsuSpec& r) {
  describe_cbr(rows, prefix + "/convin", r.in_ch, r.out_ch, 3, 1);
  describe_cbr(rows, prefix + "/enc0", r.out_ch, r.mid_ch, 3, 1);
  for (int i = 1; i < r.height; ++i) {
    const int dil = r.dilated ? (1 << i) : (i == r.height - 1 ? 2 : 1);
    describe_cbr(rows, prefix + "/enc" + std::to_string(i), r.mid_ch, r.mid_ch, 3, dil);
  }
  for (int j = r.height - 2; j >= 1; --j) {
    const int dil = r.dilated ? (1 << j) : 1;
    describe_cbr(rows, prefix + "/dec" + std::to_string(j), 2 * r.mid_ch, r.mid_ch, 3, dil);
  }
  describe_cbr(rows, prefix + "/dec0", 2 * r.mid_ch, r.out_ch, 3, 1);
}

}  // namespace detail

inline std::vector<LayerRow> describe_layers(const U2NetSpec& spec) {
  spec.validate();
  std::vector<LayerRow> rows;
  for (int s = 0; s < 6; ++s)
    detail::describe_rsu(rows, "enc" + std::to_string(s + 1), spec.encoder[s]);
  for (int s = 4; s >= 0; --s)
    detail::describe_rsu(rows, "dec" + std::to_string(s + 1), spec.decoder[s]);
  for (int s = 0; s < 5; ++s)
    rows.push_back({"side" + std::to_string(s + 1), "conv3x3",
                    std::to_string(spec.side_channels) + "x" +
                        std::to_string(spec.decoder[s].out_ch) + "x3x3",
                    conv_param_count(spec.side_channels, spec.decoder[s].out_ch, 3)});
  rows.push_back({"side6", "conv3x3",
                  std::to_string(spec.side_channels) + "x" +
                      std::to_string(spec.encoder[5].out_ch) + "x3x3",
                  conv_param_count(spec.side_channels, spec.encoder[5].out_ch, 3)});
  rows.push_back({"fuse", "conv1x1",
                  std::to_string(spec.side_channels) + "x" +
                      std::to_string(spec.fuse_in_channels()) + "x1x1",
                  conv_param_count(spec.side_channels, spec.fuse_in_channels(), 1)});
  return rows;
}

inline std::size_t param_count(const U2NetSpec& spec) {
  std::size_t total = 0;
  for (const auto& row : describe_layers(spec)) total += row.params;
  return total;
}

// ---------------------------------------------------------------------------
// forward passes
// ---------------------------------------------------------------------------

template <typename T>
struct SaliencyMaps {
  std::array<Tensor<T>, 6> side;        // probabilities at input resolution
  Tensor<T> fuse;                       // fused probability map
  std::array<Tensor<T>, 6> side_logits; // pre-sigmoid, after upsampling
  Tensor<T> fuse_logit;
};

namespace detail {

template <typename T>
Tensor<T> cbr(const Tensor<T>& x, ParamStore<T>& store, const std::string& prefix,
              int dilation, Phase phase) {
  Tensor<T> y = conv2d(x, store.get(prefix + "/w"), store.get(prefix + "/b"),
                       /*stride=*/1, /*pad=*/dilation, dilation);
  y = batchnorm2d(y, store.get(prefix + "/bn_g"), store.get(prefix + "/bn_b"),
                  store.get(prefix + "/bn_rm"), store.get(prefix + "/bn_rv"), phase);
  return relu(y);
}

}  // namespace detail

// Forward pass of one residual U-block whose parameters live in `store`
// under `prefix`. Spatial extents are preserved.
template <typename T>
Tensor<T> rsu_forward(const Tensor<T>& x, const RsuSpec& spec,
                      ParamStore<T>& store, const std::string& prefix,
                      Phase phase, Interp interp = Interp::bilinear) {
  spec.validate();
  detail::check_nchw(x, "rsu_forward");
  require(x.extent(1) == spec.in_ch, prefix, ": input has ", x.extent(1),
          " channels, block expects ", spec.in_ch);
  const int H = x.extent(2), W = x.extent(3);
  require(H >= spec.min_extent() && W >= spec.min_extent(), prefix,
          ": spatial extents ", H, "x", W, " too small for height ", spec.height,
          "; minimum legal extent is ", spec.min_extent());

  const int L = spec.height;
  Tensor<T> fin = detail::cbr(x, store, prefix + "/convin", 1, phase);

  std::vector<Tensor<T>> enc(L);
  if (spec.dilated) {
    enc[0] = detail::cbr(fin, store, prefix + "/enc0", 1, phase);
    for (int i = 1; i < L; ++i)
      enc[i] = detail::cbr(enc[i - 1], store, prefix + "/enc" + std::to_string(i),
                           1 << i, phase);
    Tensor<T> d = detail::cbr(concat_channels<T>({enc[L - 1], enc[L - 2]}), store,
                              prefix + "/dec" + std::to_string(L - 2),
                              L >= 3 ? (1 << (L - 2)) : 1, phase);
    for (int j = L - 3; j >= 0; --j)
      d = detail::cbr(concat_channels<T>({d, enc[j]}), store,
                      prefix + "/dec" + std::to_string(j), 1 << j, phase);
    return add(d, fin);
  }

  enc[0] = detail::cbr(fin, store, prefix + "/enc0", 1, phase);
  Tensor<T> cur = enc[0];
  for (int i = 1; i <= L - 2; ++i) {
    cur = maxpool2d(cur);
    enc[i] = detail::cbr(cur, store, prefix + "/enc" + std::to_string(i), 1, phase);
    cur = enc[i];
  }
  // bottom level shares the deepest resolution and dilates by 2
  enc[L - 1] = detail::cbr(enc[L - 2], store,
                           prefix + "/enc" + std::to_string(L - 1), 2, phase);
  Tensor<T> d = detail::cbr(concat_channels<T>({enc[L - 1], enc[L - 2]}), store,
                            prefix + "/dec" + std::to_string(L - 2), 1, phase);
  for (int j = L - 3; j >= 0; --j) {
    d = upsample_to(d, enc[j].extent(2), enc[j].extent(3), interp);
    d = detail::cbr(concat_channels<T>({d, enc[j]}), store,
                    prefix + "/dec" + std::to_string(j), 1, phase);
  }
  return add(d, fin);
}

// Full two-level nested forward pass: six encoder stages, five decoder
// stages, six side probability maps and the fused map.
template <typename T>
SaliencyMaps<T> u2net_forward(const Tensor<T>& x, const U2NetSpec& spec,
                              ParamStore<T>& store, Phase phase) {
  spec.validate();
  detail::check_nchw(x, "u2net_forward");
  require(x.extent(1) == spec.input_channels, "u2net_forward: input has ",
          x.extent(1), " channels, spec expects ", spec.input_channels);
  const int H = x.extent(2), W = x.extent(3);
  const int need = spec.min_input_extent();
  require(H >= need && W >= need, "u2net_forward: spatial extents ", H, "x", W,
          " below the minimum legal extent ", need, " for this spec");

  std::array<Tensor<T>, 6> hx;
  Tensor<T> cur = x;
  for (int s = 0; s < 6; ++s) {
    hx[s] = rsu_forward(cur, spec.encoder[s], store, "enc" + std::to_string(s + 1),
                        phase, spec.upsample);
    if (s < 5) cur = maxpool2d(hx[s]);
  }

  std::array<Tensor<T>, 5> dec;
  Tensor<T> deeper = hx[5];
  for (int s = 4; s >= 0; --s) {
    Tensor<T> up = upsample_to(deeper, hx[s].extent(2), hx[s].extent(3), spec.upsample);
    dec[s] = rsu_forward(concat_channels<T>({up, hx[s]}), spec.decoder[s], store,
                         "dec" + std::to_string(s + 1), phase, spec.upsample);
    deeper = dec[s];
  }

  SaliencyMaps<T> maps;
  for (int s = 0; s < 6; ++s) {
    const Tensor<T>& src = s < 5 ? dec[s] : hx[5];
    Tensor<T> logit = conv2d(src, store.get("side" + std::to_string(s + 1) + "/w"),
                             store.get("side" + std::to_string(s + 1) + "/b"),
                             /*stride=*/1, /*pad=*/1, /*dilation=*/1);
    if (logit.extent(2) != H || logit.extent(3) != W)
      logit = upsample_to(logit, H, W, spec.upsample);
    maps.side_logits[s] = logit;
    maps.side[s] = sigmoid(logit);
  }
  std::vector<Tensor<T>> logits(maps.side_logits.begin(), maps.side_logits.end());
  maps.fuse_logit = conv2d(concat_channels<T>(logits), store.get("fuse/w"),
                           store.get("fuse/b"), /*stride=*/1, /*pad=*/0,
                           /*dilation=*/1);
  maps.fuse = sigmoid(maps.fuse_logit);
  return maps;
}

}  // namespace airseg
