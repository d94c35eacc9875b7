#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "airseg/loss.hpp"
#include "airseg/optim.hpp"
#include "airseg/params.hpp"
#include "airseg/postprocess.hpp"
#include "airseg/preprocess.hpp"
#include "airseg/u2net.hpp"
#include "airseg/volume.hpp"
#include "airseg/volume_io.hpp"

namespace airseg {

enum class NumericWidth { f32, f64 };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 0.001;
  double momentum = 0.9;  // SGD only
  int batch_size = 2;
  int epochs = 100;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  std::array<double, 6> w_side{1, 1, 1, 1, 1, 1};
  double w_fuse = 1.0;
  NumericWidth width = NumericWidth::f32;

  void validate() const {
    require(learning_rate > 0 || learning_rate == 0, "learning_rate must be finite");
    require(learning_rate >= 0, "learning_rate must be >= 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(epochs >= 1, "epochs must be >= 1");
    require(test_fraction > 0 && test_fraction < 1,
            "test_fraction must lie in (0,1), got ", test_fraction);
  }
};

// ---------------------------------------------------------------------------
// loss curve
// ---------------------------------------------------------------------------

struct LossRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double train_loss = 0;
  double val_loss = 0;
  bool has_val = false;
};

struct LossCurve {
  std::vector<LossRecord> records;

  // training-loss rows only, in step order
  std::vector<double> step_losses() const {
    std::vector<double> out;
    for (const auto& r : records)
      if (!r.has_val) out.push_back(r.train_loss);
    return out;
  }

  // mean of the k most recent per-step losses at 1-based step `at`
  double trailing_mean(std::size_t k, std::size_t at) const {
    const auto losses = step_losses();
    require(at >= k && at <= losses.size(), "trailing_mean window out of range");
    double sum = 0;
    for (std::size_t i = at - k; i < at; ++i) sum += losses[i];
    return sum / static_cast<double>(k);
  }

  void write_csv(std::ostream& os) const {
    os << "epoch,step,train_loss,val_loss\n";
    os.precision(17);
    for (const auto& r : records) {
      os << r.epoch << "," << r.step << "," << r.train_loss << ",";
      if (r.has_val) os << r.val_loss;
      os << "\n";
    }
  }

  std::string to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// training samples
// ---------------------------------------------------------------------------

template <typename T>
struct TrainSample {
  int h = 0, w = 0;
  std::vector<T> input;   // 2 x h x w
  std::vector<T> target;  // 1 x h x w, binary
};

// Slices volumes into per-slice samples; ground truth is the matching mask slice.
template <typename T>
std::vector<TrainSample<T>> make_dataset(
    const std::vector<std::pair<InputStack, Mask>>& cases) {
  std::vector<TrainSample<T>> out;
  for (const auto& [stack, mask] : cases) {
    require(stack.dims == mask.dims, "input stack dims ", stack.dims.d, "x",
            stack.dims.h, "x", stack.dims.w, " do not match mask dims ",
            mask.dims.d, "x", mask.dims.h, "x", mask.dims.w);
    const std::size_t plane = static_cast<std::size_t>(mask.dims.h) * mask.dims.w;
    for (const SliceInput& s : stack.slices) {
      TrainSample<T> t;
      t.h = s.h;
      t.w = s.w;
      t.input.assign(s.values.begin(), s.values.end());
      t.target.resize(plane);
      const std::uint8_t* mv =
          mask.values.data() + static_cast<std::size_t>(s.slice_index) * plane;
      for (std::size_t i = 0; i < plane; ++i) t.target[i] = static_cast<T>(mv[i]);
      out.push_back(std::move(t));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// checkpoint
// ---------------------------------------------------------------------------

template <typename T>
struct Checkpoint {
  U2NetSpec spec;
  ParamStore<T> store;
  OptimizerState<T> opt;
  std::int64_t step = 0;
};

inline std::string encode_rsu(const RsuSpec& r) {
  std::ostringstream os;
  os << r.height << ":" << r.in_ch << ":" << r.mid_ch << ":" << r.out_ch << ":"
     << (r.dilated ? 1 : 0);
  return os.str();
}

inline RsuSpec decode_rsu(const std::string& s) {
  RsuSpec r;
  int dil = 0;
  char c1, c2, c3, c4;
  std::istringstream is(s);
  is >> r.height >> c1 >> r.in_ch >> c2 >> r.mid_ch >> c3 >> r.out_ch >> c4 >> dil;
  require(!is.fail() && c1 == ':' && c2 == ':' && c3 == ':' && c4 == ':',
          "malformed RSU spec field '", s, "'");
  r.dilated = dil != 0;
  return r;
}

inline std::string encode_spec(const U2NetSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "in=" << spec.input_channels << " side=" << spec.side_channels
     << " wf=" << spec.width_factor
     << " up=" << (spec.upsample == Interp::bilinear ? "bilinear" : "nearest");
  os << " enc=";
  for (int s = 0; s < 6; ++s) os << (s ? "," : "") << encode_rsu(spec.encoder[s]);
  os << " dec=";
  for (int s = 0; s < 5; ++s) os << (s ? "," : "") << encode_rsu(spec.decoder[s]);
  return os.str();
}

inline U2NetSpec decode_spec(const std::string& line) {
  U2NetSpec spec;
  std::istringstream is(line);
  std::string field;
  bool got_enc = false, got_dec = false;
  auto split_list = [](const std::string& s) {
    std::vector<std::string> parts;
    std::istringstream ls(s);
    std::string item;
    while (std::getline(ls, item, ',')) parts.push_back(item);
    return parts;
  };
  while (is >> field) {
    const auto eq = field.find('=');
    require(eq != std::string::npos, "malformed spec field '", field, "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "in")
      spec.input_channels = std::stoi(val);
    else if (key == "side")
      spec.side_channels = std::stoi(val);
    else if (key == "wf")
      spec.width_factor = std::stod(val);
    else if (key == "up") {
      require(val == "bilinear" || val == "nearest",
              "unknown upsample mode '", val, "'");
      spec.upsample = val == "bilinear" ? Interp::bilinear : Interp::nearest;
    } else if (key == "enc") {
      const auto parts = split_list(val);
      require(parts.size() == 6, "spec enc list must have 6 stages, got ", parts.size());
      for (int s = 0; s < 6; ++s) spec.encoder[s] = decode_rsu(parts[s]);
      got_enc = true;
    } else if (key == "dec") {
      const auto parts = split_list(val);
      require(parts.size() == 5, "spec dec list must have 5 stages, got ", parts.size());
      for (int s = 0; s < 5; ++s) spec.decoder[s] = decode_rsu(parts[s]);
      got_dec = true;
    } else {
      fail("unknown spec field '", key, "'");
    }
  }
  require(got_enc && got_dec, "spec line is missing enc= or dec= lists");
  spec.validate();
  return spec;
}

namespace detail {

inline std::string shape_token(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s;
}

inline Shape parse_shape_token(const std::string& tok) {
  Shape shape;
  std::istringstream is(tok);
  std::string part;
  while (std::getline(is, part, 'x')) shape.push_back(std::stoi(part));
  require(!shape.empty(), "empty shape token");
  return shape;
}

template <typename T>
void append_f32_payload(std::string& out, const std::vector<T>& values) {
  for (T v : values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

}  // namespace detail

// Layout: magic line, key lines, one manifest line per tensor
// (name shape payload-offset), a blank line, then packed little-endian
// float32 payloads.
template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::string& path) {
  std::ostringstream head;
  head.precision(17);
  head << "U2CKPT1\n";
  head << "spec: " << encode_spec(ckpt.spec) << "\n";
  head << "optimizer: " << (ckpt.opt.kind == OptimizerKind::adam ? "adam" : "sgd") << "\n";
  head << "lr: " << static_cast<double>(ckpt.opt.learning_rate) << "\n";
  head << "momentum: " << static_cast<double>(ckpt.opt.momentum) << "\n";
  head << "beta1: " << static_cast<double>(ckpt.opt.beta1) << "\n";
  head << "beta2: " << static_cast<double>(ckpt.opt.beta2) << "\n";
  head << "eps: " << static_cast<double>(ckpt.opt.eps_hat) << "\n";
  head << "step: " << ckpt.step << "\n";

  std::string payload;
  auto manifest_line = [&](const std::string& name, const Shape& shape) {
    head << "tensor " << name << " " << detail::shape_token(shape) << " "
         << payload.size() << "\n";
  };
  for (const auto& e : ckpt.store.entries()) {
    manifest_line(e.name, e.tensor.shape());
    detail::append_f32_payload(payload, e.tensor.values());
  }
  std::size_t ti = 0;
  for (const auto& e : ckpt.store.entries()) {
    if (!e.trainable) continue;
    require(ti < ckpt.opt.m.size(), "optimizer state is missing buffers");
    manifest_line("opt/m/" + e.name, e.tensor.shape());
    detail::append_f32_payload(payload, ckpt.opt.m[ti]);
    if (ckpt.opt.kind == OptimizerKind::adam) {
      manifest_line("opt/v/" + e.name, e.tensor.shape());
      detail::append_f32_payload(payload, ckpt.opt.v[ti]);
    }
    ++ti;
  }
  head << "\n";
  detail::write_file(path, head.str() + payload);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  std::istringstream in(bytes);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "U2CKPT1", path,
          ": bad magic line, expected U2CKPT1");

  Checkpoint<T> ckpt;
  struct ManifestEntry {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<ManifestEntry> manifest;
  bool got_spec = false;
  std::string optimizer_name;
  double lr = 0, momentum = 0, beta1 = 0, beta2 = 0, eps = 0;

  while (std::getline(in, line)) {
    if (line.empty()) break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "tensor") {
      ManifestEntry e;
      std::string shape_tok;
      ls >> e.name >> shape_tok >> e.offset;
      require(!ls.fail(), path, ": malformed manifest line '", line, "'");
      e.shape = detail::parse_shape_token(shape_tok);
      manifest.push_back(std::move(e));
    } else if (key == "spec:") {
      ckpt.spec = decode_spec(line.substr(6));
      got_spec = true;
    } else if (key == "optimizer:") {
      ls >> optimizer_name;
    } else if (key == "lr:") {
      ls >> lr;
    } else if (key == "momentum:") {
      ls >> momentum;
    } else if (key == "beta1:") {
      ls >> beta1;
    } else if (key == "beta2:") {
      ls >> beta2;
    } else if (key == "eps:") {
      ls >> eps;
    } else if (key == "step:") {
      ls >> ckpt.step;
    } else {
      fail(path, ": unknown header key '", key, "'");
    }
  }
  require(got_spec, path, ": missing spec line");
  require(optimizer_name == "adam" || optimizer_name == "sgd", path,
          ": missing or unknown optimizer line");

  const std::size_t payload_at = static_cast<std::size_t>(in.tellg());
  require(payload_at != static_cast<std::size_t>(-1) && payload_at <= bytes.size(),
          path, ": header truncated before payload");
  const std::size_t avail = bytes.size() - payload_at;
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data()) + payload_at;

  auto read_tensor = [&](const ManifestEntry& e) {
    const std::size_t n = shape_numel(e.shape);
    require(e.offset + 4 * n <= avail, path, ": payload truncated, tensor ",
            e.name, " needs bytes [", e.offset, ",", e.offset + 4 * n,
            ") but only ", avail, " are present");
    std::vector<T> vals(n);
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = static_cast<T>(std::bit_cast<float>(detail::get_u32(raw + e.offset + 4 * i)));
    return vals;
  };

  // store tensors come first and must match the spec's enumeration exactly
  const auto expected = enumerate_params(ckpt.spec);
  require(manifest.size() >= expected.size(), path,
          ": manifest lists ", manifest.size(), " tensors, spec needs at least ",
          expected.size());
  std::size_t total_bytes = 0;
  for (const auto& e : manifest) total_bytes += 4 * shape_numel(e.shape);
  require(total_bytes == avail, path, ": manifest covers ", total_bytes,
          " payload bytes but the file carries ", avail);

  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& want = expected[i];
    const auto& got = manifest[i];
    require(got.name == want.name, path, ": manifest tensor ", i, " is '",
            got.name, "', spec expects '", want.name, "'");
    require(got.shape == want.shape, path, ": tensor ", got.name,
            " has shape ", detail::shape_token(got.shape), ", spec expects ",
            detail::shape_token(want.shape));
    ckpt.store.add(want.name, Tensor<T>::from_values(want.shape, read_tensor(got)),
                   want.trainable);
  }

  // remaining manifest entries are optimizer buffers in trainable order
  ckpt.opt.kind = optimizer_name == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
  ckpt.opt.learning_rate = static_cast<T>(lr);
  ckpt.opt.momentum = static_cast<T>(momentum);
  ckpt.opt.beta1 = static_cast<T>(beta1);
  ckpt.opt.beta2 = static_cast<T>(beta2);
  ckpt.opt.eps_hat = static_cast<T>(eps);
  ckpt.opt.step_count = ckpt.step;
  std::size_t mi = expected.size();
  for (const auto& e : ckpt.store.entries()) {
    if (!e.trainable) continue;
    require(mi < manifest.size() && manifest[mi].name == "opt/m/" + e.name, path,
            ": expected optimizer buffer opt/m/", e.name, " in manifest");
    ckpt.opt.m.push_back(read_tensor(manifest[mi]));
    ++mi;
    if (ckpt.opt.kind == OptimizerKind::adam) {
      require(mi < manifest.size() && manifest[mi].name == "opt/v/" + e.name, path,
              ": expected optimizer buffer opt/v/", e.name, " in manifest");
      ckpt.opt.v.push_back(read_tensor(manifest[mi]));
      ++mi;
    }
  }
  require(mi == manifest.size(), path, ": manifest holds ", manifest.size() - mi,
          " unexpected extra tensors");
  return ckpt;
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
Tensor<T> batch_input(const std::vector<TrainSample<T>>& ds,
                      const std::vector<int>& ids, std::size_t first,
                      std::size_t count) {
  const int h = ds[static_cast<std::size_t>(ids[first])].h;
  const int w = ds[static_cast<std::size_t>(ids[first])].w;
  std::vector<T> vals;
  vals.reserve(count * 2 * static_cast<std::size_t>(h) * w);
  for (std::size_t i = first; i < first + count; ++i) {
    const auto& s = ds[static_cast<std::size_t>(ids[i])];
    require(s.h == h && s.w == w, "dataset slices disagree on extents: ", h, "x",
            w, " vs ", s.h, "x", s.w);
    vals.insert(vals.end(), s.input.begin(), s.input.end());
  }
  return Tensor<T>::from_values({static_cast<int>(count), 2, h, w}, std::move(vals));
}

template <typename T>
Tensor<T> batch_target(const std::vector<TrainSample<T>>& ds,
                       const std::vector<int>& ids, std::size_t first,
                       std::size_t count) {
  const int h = ds[static_cast<std::size_t>(ids[first])].h;
  const int w = ds[static_cast<std::size_t>(ids[first])].w;
  std::vector<T> vals;
  vals.reserve(count * static_cast<std::size_t>(h) * w);
  for (std::size_t i = first; i < first + count; ++i) {
    const auto& s = ds[static_cast<std::size_t>(ids[i])];
    vals.insert(vals.end(), s.target.begin(), s.target.end());
  }
  return Tensor<T>::from_values({static_cast<int>(count), 1, h, w}, std::move(vals));
}

template <typename T>
LossWeights<T> to_weights(const TrainConfig& cfg) {
  LossWeights<T> w;
  for (std::size_t i = 0; i < 6; ++i) w.w_side[i] = static_cast<T>(cfg.w_side[i]);
  w.w_fuse = static_cast<T>(cfg.w_fuse);
  return w;
}

}  // namespace detail

// Mean objective over the given samples in eval mode; parameters and running
// statistics are left untouched.
template <typename T>
double dataset_loss(const U2NetSpec& spec, ParamStore<T>& store,
                    const std::vector<TrainSample<T>>& ds,
                    const std::vector<int>& ids, const LossWeights<T>& w,
                    int batch_size) {
  if (ids.empty()) return 0.0;
  NoGradGuard no_grad;
  double total = 0;
  for (std::size_t at = 0; at < ids.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size), ids.size() - at);
    Tensor<T> x = detail::batch_input(ds, ids, at, count);
    Tensor<T> gt = detail::batch_target(ds, ids, at, count);
    SaliencyMaps<T> maps = u2net_forward(x, spec, store, Phase::eval);
    total += static_cast<double>(deep_supervision_loss(maps, gt, w).value()) *
             static_cast<double>(count);
  }
  return total / static_cast<double>(ids.size());
}

template <typename T>
struct TrainOutput {
  Checkpoint<T> checkpoint;
  LossCurve curve;
};

// End-to-end supervised loop: deterministic shuffled batches, one optimizer
// step per batch, validation loss once per epoch on the held-out split.
template <typename T>
TrainOutput<T> train(const TrainConfig& cfg, const U2NetSpec& spec,
                     const std::vector<TrainSample<T>>& dataset) {
  cfg.validate();
  spec.validate();
  require(!dataset.empty(), "training dataset is empty");

  std::vector<int> ids(dataset.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  std::vector<int> train_ids = ids, val_ids;
  if (ids.size() >= 2) {
    TrainTestSplit split = split_train_test(ids, cfg.test_fraction, cfg.seed);
    train_ids = split.train_ids;
    val_ids = split.test_ids;
  }

  TrainOutput<T> out;
  out.checkpoint.spec = spec;
  out.checkpoint.store = init_params<T>(spec, cfg.seed);
  auto params = out.checkpoint.store.trainable_params();
  out.checkpoint.opt = OptimizerState<T>::for_params(
      cfg.optimizer, params, static_cast<T>(cfg.learning_rate),
      static_cast<T>(cfg.momentum));
  const LossWeights<T> weights = detail::to_weights<T>(cfg);

  std::mt19937_64 shuffle_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_ids.begin(), train_ids.end(), shuffle_rng);
    double epoch_sum = 0;
    std::size_t epoch_n = 0;
    for (std::size_t at = 0; at < train_ids.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.batch_size), train_ids.size() - at);
      Tensor<T> x = detail::batch_input(dataset, train_ids, at, count);
      Tensor<T> gt = detail::batch_target(dataset, train_ids, at, count);
      SaliencyMaps<T> maps =
          u2net_forward(x, spec, out.checkpoint.store, Phase::train);
      Tensor<T> loss = deep_supervision_loss(maps, gt, weights);
      const double lv = static_cast<double>(loss.value());
      ++step;
      if (!std::isfinite(lv))
        throw NumericError(detail::format_msg("non-finite training loss at step ",
                                              step, " (epoch ", epoch, ")"));
      zero_grads(params);
      backward(loss);
      optimizer_step(params, out.checkpoint.opt);
      epoch_sum += lv * static_cast<double>(count);
      epoch_n += count;
      out.curve.records.push_back({epoch, step, lv, 0.0, false});
    }
    if (!val_ids.empty()) {
      const double vl = dataset_loss(spec, out.checkpoint.store, dataset, val_ids,
                                     weights, cfg.batch_size);
      out.curve.records.push_back(
          {epoch, step, epoch_sum / static_cast<double>(epoch_n), vl, true});
    }
  }
  out.checkpoint.step = step;
  return out;
}

// ---------------------------------------------------------------------------
// inference and evaluation
// ---------------------------------------------------------------------------

// Full forward pipeline for one volume: preprocess, per-slice forward in eval
// mode, stack the fused maps.
template <typename T>
ProbabilityVolume predict_volume(const U2NetSpec& spec, ParamStore<T>& store,
                                 const Volume& v,
                                 DepthMode depth_mode = DepthMode::duplicate) {
  NoGradGuard no_grad;
  NormalizedVolume nv = normalize_volume(v);
  InputStack stack = make_inputs(nv, depth_mode);
  ProbabilityVolume prob = ProbabilityVolume::zeros(v.dims, v.spacing);
  const std::size_t plane = static_cast<std::size_t>(v.dims.h) * v.dims.w;
  for (const SliceInput& s : stack.slices) {
    std::vector<T> vals(s.values.begin(), s.values.end());
    Tensor<T> x = Tensor<T>::from_values({1, 2, s.h, s.w}, std::move(vals));
    SaliencyMaps<T> maps = u2net_forward(x, spec, store, Phase::eval);
    Tensor<T> fuse = maps.fuse.extent(1) > 1 ? channel_mean(maps.fuse) : maps.fuse;
    float* dst = prob.values.data() + static_cast<std::size_t>(s.slice_index) * plane;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = static_cast<float>(fuse.values()[i]);
  }
  return prob;
}

struct EvalCase {
  std::string id;
  Volume volume;
  Mask ground_truth;
};

struct CaseResult {
  std::string id;
  bool ok = false;
  double dsc = 0.0;
  std::string error;
};

struct EvalReport {
  std::vector<CaseResult> cases;
  double mean_dsc = 0.0;

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "case,dsc,status\n";
    for (const auto& c : cases) {
      os << c.id << ",";
      if (c.ok)
        os << c.dsc << ",ok\n";
      else
        os << "," << c.error << "\n";
    }
    os << "mean," << mean_dsc << ",\n";
    return os.str();
  }
};

// predict -> refine -> DSC per case; a failing case is reported and the rest
// still evaluated.
template <typename T>
EvalReport evaluate(const U2NetSpec& spec, ParamStore<T>& store,
                    const std::vector<EvalCase>& cases, double threshold = 0.5,
                    Connectivity conn = Connectivity::full,
                    DepthMode depth_mode = DepthMode::duplicate) {
  EvalReport report;
  double sum = 0;
  std::size_t ok = 0;
  for (const auto& c : cases) {
    CaseResult r;
    r.id = c.id;
    try {
      require(c.volume.dims == c.ground_truth.dims, "case ", c.id,
              ": volume dims do not match ground-truth dims");
      ProbabilityVolume prob = predict_volume(spec, store, c.volume, depth_mode);
      Mask refined = refine(prob, threshold, conn);
      r.dsc = dsc(refined, c.ground_truth);
      r.ok = true;
      sum += r.dsc;
      ++ok;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    report.cases.push_back(std::move(r));
  }
  report.mean_dsc = ok ? sum / static_cast<double>(ok) : 0.0;
  return report;
}

}  // namespace airseg
