#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "airseg/phantom.hpp"
#include "airseg/postprocess.hpp"
#include "airseg/preprocess.hpp"
#include "airseg/trainer.hpp"
#include "airseg/u2net.hpp"

namespace airseg {

// Flat key=value run configuration; every key maps to one typed field and
// unknown keys are hard errors.
struct RunConfig {
  PhantomConfig phantom;
  TrainConfig train;

  std::string arch = "toy";  // toy | canonical
  int input_channels = 2;
  int side_channels = 1;
  double width_factor = 1.0;
  std::string upsample = "bilinear";
  std::string depth_mode = "duplicate";

  double threshold = 0.5;
  int connectivity = 26;

  U2NetSpec make_spec() const {
    require(arch == "toy" || arch == "canonical", "arch must be toy or canonical, got '",
            arch, "'");
    U2NetSpec spec = arch == "toy"
                         ? U2NetSpec::toy(input_channels, side_channels, width_factor)
                         : U2NetSpec::canonical(input_channels, side_channels, width_factor);
    require(upsample == "bilinear" || upsample == "nearest",
            "upsample must be bilinear or nearest, got '", upsample, "'");
    spec.upsample = upsample == "bilinear" ? Interp::bilinear : Interp::nearest;
    return spec;
  }

  DepthMode depth() const {
    require(depth_mode == "duplicate" || depth_mode == "adjacent",
            "depth_mode must be duplicate or adjacent, got '", depth_mode, "'");
    return depth_mode == "duplicate" ? DepthMode::duplicate : DepthMode::adjacent;
  }

  Connectivity conn() const {
    require(connectivity == 6 || connectivity == 26,
            "connectivity must be 6 or 26, got ", connectivity);
    return connectivity == 6 ? Connectivity::faces : Connectivity::full;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename V>
V parse_value(const std::string& key, const std::string& text);

template <>
inline int parse_value<int>(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  int v;
  is >> v;
  require(!is.fail() && is.eof(), "config key '", key, "': '", text,
          "' is not an integer");
  return v;
}

template <>
inline double parse_value<double>(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  double v;
  is >> v;
  require(!is.fail() && is.eof(), "config key '", key, "': '", text,
          "' is not a number");
  return v;
}

template <>
inline float parse_value<float>(const std::string& key, const std::string& text) {
  return static_cast<float>(parse_value<double>(key, text));
}

template <>
inline std::uint64_t parse_value<std::uint64_t>(const std::string& key,
                                                const std::string& text) {
  std::istringstream is(text);
  std::uint64_t v;
  is >> v;
  require(!is.fail() && is.eof(), "config key '", key, "': '", text,
          "' is not a non-negative integer");
  return v;
}

}  // namespace detail

// Applies one key=value assignment; unknown keys and malformed values throw.
inline void apply_config_key(RunConfig& cfg, const std::string& key,
                             const std::string& raw) {
  const std::string value = detail::trim(raw);
  auto as_int = [&] { return detail::parse_value<int>(key, value); };
  auto as_double = [&] { return detail::parse_value<double>(key, value); };
  auto as_float = [&] { return detail::parse_value<float>(key, value); };

  if (key == "dims") {
    std::istringstream is(value);
    is >> cfg.phantom.dims.d >> cfg.phantom.dims.h >> cfg.phantom.dims.w;
    require(!is.fail(), "config key 'dims' needs three integers, got '", value, "'");
  } else if (key == "spacing") {
    std::istringstream is(value);
    is >> cfg.phantom.spacing.z >> cfg.phantom.spacing.y >> cfg.phantom.spacing.x;
    require(!is.fail(), "config key 'spacing' needs three numbers, got '", value, "'");
  } else if (key == "trunk_radius") {
    cfg.phantom.trunk_radius = as_double();
  } else if (key == "trunk_length") {
    cfg.phantom.trunk_length = as_double();
  } else if (key == "branch_depth") {
    cfg.phantom.branch_depth = as_int();
  } else if (key == "angle_min_deg") {
    cfg.phantom.angle_min_deg = as_double();
  } else if (key == "angle_max_deg") {
    cfg.phantom.angle_max_deg = as_double();
  } else if (key == "radius_decay") {
    cfg.phantom.radius_decay = as_double();
  } else if (key == "lumen_hu") {
    cfg.phantom.lumen_hu = as_float();
  } else if (key == "wall_hu") {
    cfg.phantom.wall_hu = as_float();
  } else if (key == "parenchyma_hu") {
    cfg.phantom.parenchyma_hu = as_float();
  } else if (key == "soft_tissue_hu") {
    cfg.phantom.soft_tissue_hu = as_float();
  } else if (key == "noise_std_hu") {
    cfg.phantom.noise_std_hu = as_double();
  } else if (key == "arch") {
    cfg.arch = value;
  } else if (key == "input_channels") {
    cfg.input_channels = as_int();
  } else if (key == "side_channels") {
    cfg.side_channels = as_int();
  } else if (key == "width_factor") {
    cfg.width_factor = as_double();
  } else if (key == "upsample") {
    cfg.upsample = value;
  } else if (key == "depth_mode") {
    cfg.depth_mode = value;
  } else if (key == "optimizer") {
    require(value == "adam" || value == "sgd",
            "config key 'optimizer' must be adam or sgd, got '", value, "'");
    cfg.train.optimizer = value == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = as_double();
  } else if (key == "momentum") {
    cfg.train.momentum = as_double();
  } else if (key == "batch_size") {
    cfg.train.batch_size = as_int();
  } else if (key == "epochs") {
    cfg.train.epochs = as_int();
  } else if (key == "test_fraction") {
    cfg.train.test_fraction = as_double();
  } else if (key == "seed") {
    cfg.train.seed = detail::parse_value<std::uint64_t>(key, value);
  } else if (key == "w_side") {
    std::istringstream is(value);
    for (auto& w : cfg.train.w_side) is >> w;
    require(!is.fail(), "config key 'w_side' needs six numbers, got '", value, "'");
  } else if (key == "w_fuse") {
    cfg.train.w_fuse = as_double();
  } else if (key == "width") {
    require(value == "f32" || value == "f64",
            "config key 'width' must be f32 or f64, got '", value, "'");
    cfg.train.width = value == "f32" ? NumericWidth::f32 : NumericWidth::f64;
  } else if (key == "threshold") {
    cfg.threshold = as_double();
  } else if (key == "connectivity") {
    cfg.connectivity = as_int();
  } else {
    fail("unknown config key '", key, "'");
  }
}

inline RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos, "config line ", line_no,
            " is not a key=value assignment: '", line, "'");
    const std::string key = detail::trim(line.substr(0, eq));
    require(!key.empty(), "config line ", line_no, " has an empty key");
    apply_config_key(cfg, key, line.substr(eq + 1));
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str());
}

}  // namespace airseg
