// Command-line front end for the airway-segmentation pipeline: phantom
// generation, preprocessing, training, prediction, refinement, evaluation,
// gradient checking, architecture audit, and slice montages.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "airseg/airseg.hpp"

namespace {

using namespace airseg;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<int> connectivity;
  std::optional<int> side_channels;
  std::optional<double> width_factor;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key=value run configuration file");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--threshold", opts.threshold, "override the binarization threshold");
  cmd->add_option("--connectivity", opts.connectivity, "override connectivity (6 or 26)");
  cmd->add_option("--side-channels", opts.side_channels, "override side output channels");
  cmd->add_option("--width-factor", opts.width_factor, "override the channel width factor");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config(opts.config_path);
  if (opts.seed) cfg.train.seed = *opts.seed;
  if (opts.threshold) cfg.threshold = *opts.threshold;
  if (opts.connectivity) cfg.connectivity = *opts.connectivity;
  if (opts.side_channels) cfg.side_channels = *opts.side_channels;
  if (opts.width_factor) cfg.width_factor = *opts.width_factor;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write file: ", path);
  out << text;
  require(out.good(), "write failed: ", path);
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int run_phantom(const CommonOpts& opts, const std::string& out_volume,
                const std::string& out_mask) {
  RunConfig cfg = resolve_config(opts);
  PhantomResult ph = gen_phantom(cfg.phantom, cfg.train.seed);
  if (ph.clipped_segments > 0)
    std::fprintf(stderr, "warning: %d tube segments were clipped at the grid bounds\n",
                 ph.clipped_segments);
  write_volume(ph.volume, out_volume, VolDtype::i16);
  write_mask(ph.mask, out_mask);
  std::printf("phantom: %dx%dx%d volume, %zu airway voxels -> %s, %s\n",
              ph.volume.dims.d, ph.volume.dims.h, ph.volume.dims.w,
              ph.mask.foreground_count(), out_volume.c_str(), out_mask.c_str());
  return 0;
}

int run_preprocess(const CommonOpts& opts, const std::string& in_path,
                   const std::string& out_path) {
  (void)resolve_config(opts);
  Volume v = read_volume(in_path);
  NormalizedVolume nv = normalize_volume(v);
  Volume out;
  out.dims = nv.dims;
  out.spacing = nv.spacing;
  out.values = nv.values;
  write_volume(out, out_path, VolDtype::f32);
  std::size_t sentinels = 0;
  for (auto s : nv.sentinel_slices) sentinels += s;
  std::printf("preprocess: %d slices normalized, %zu sentinel slices -> %s\n",
              nv.dims.d, sentinels, out_path.c_str());
  return 0;
}

template <typename T>
int run_train_t(const RunConfig& cfg, const std::vector<std::string>& volume_paths,
                const std::vector<std::string>& mask_paths,
                const std::string& out_ckpt, const std::string& out_csv) {
  U2NetSpec spec = cfg.make_spec();
  std::vector<std::pair<InputStack, Mask>> cases;
  for (std::size_t i = 0; i < volume_paths.size(); ++i) {
    Volume v = read_volume(volume_paths[i]);
    Mask m = read_mask(mask_paths[i]);
    require(v.dims == m.dims, volume_paths[i], " and ", mask_paths[i],
            " disagree on dims");
    cases.emplace_back(make_inputs(normalize_volume(v), cfg.depth()), std::move(m));
  }
  auto dataset = make_dataset<T>(cases);
  TrainOutput<T> out = train<T>(cfg.train, spec, dataset);
  save_checkpoint(out.checkpoint, out_ckpt);
  write_text(out_csv, out.curve.to_csv());
  const auto steps = out.curve.step_losses();
  std::printf("train: %zu samples, %zu steps, final loss %.6f -> %s, %s\n",
              dataset.size(), steps.size(), steps.empty() ? 0.0 : steps.back(),
              out_ckpt.c_str(), out_csv.c_str());
  return 0;
}

int run_train(const CommonOpts& opts, const std::vector<std::string>& volumes,
              const std::vector<std::string>& masks, const std::string& out_ckpt,
              const std::string& out_csv) {
  RunConfig cfg = resolve_config(opts);
  require(volumes.size() == masks.size() && !volumes.empty(),
          "train needs matching volume/mask path lists");
  if (cfg.train.width == NumericWidth::f64)
    return run_train_t<double>(cfg, volumes, masks, out_ckpt, out_csv);
  return run_train_t<float>(cfg, volumes, masks, out_ckpt, out_csv);
}

template <typename T>
int run_predict_t(const RunConfig& cfg, const std::string& ckpt_path, bool init_fresh,
                  const std::string& volume_path, const std::string& out_path) {
  U2NetSpec spec;
  ParamStore<T> store;
  if (init_fresh) {
    spec = cfg.make_spec();
    store = init_params<T>(spec, cfg.train.seed);
  } else {
    Checkpoint<T> ckpt = load_checkpoint<T>(ckpt_path);
    spec = ckpt.spec;
    store = std::move(ckpt.store);
  }
  Volume v = read_volume(volume_path);
  ProbabilityVolume prob = predict_volume(spec, store, v, cfg.depth());
  write_probability(prob, out_path);
  std::printf("predict: %d slices -> %s\n", prob.dims.d, out_path.c_str());
  return 0;
}

int run_predict(const CommonOpts& opts, const std::string& ckpt_path, bool init_fresh,
                const std::string& volume_path, const std::string& out_path) {
  RunConfig cfg = resolve_config(opts);
  require(init_fresh != !ckpt_path.empty(),
          "predict needs either a checkpoint path or --init, not both");
  if (cfg.train.width == NumericWidth::f64)
    return run_predict_t<double>(cfg, ckpt_path, init_fresh, volume_path, out_path);
  return run_predict_t<float>(cfg, ckpt_path, init_fresh, volume_path, out_path);
}

int run_refine(const CommonOpts& opts, const std::string& in_path,
               const std::string& out_path, const std::string& report_path,
               const std::string& labels_path) {
  RunConfig cfg = resolve_config(opts);
  // accepts f32 probability maps and u8 masks (a mask is a 0/1 probability map)
  RvolContents rc = read_rvol(in_path);
  require(rc.dtype == VolDtype::f32 || rc.dtype == VolDtype::u8, in_path,
          ": refine expects an f32 probability map or a u8 mask, got ",
          dtype_name(rc.dtype));
  ProbabilityVolume prob;
  prob.dims = rc.dims;
  prob.spacing = rc.spacing;
  prob.values = std::move(rc.values);
  Mask bin = binarize(prob, cfg.threshold);
  LabelMap lm = label_components(bin, cfg.conn());
  Mask largest = extract_largest(lm);
  write_mask(largest, out_path);
  if (!labels_path.empty()) write_labels(lm, labels_path);

  std::ostringstream report;
  report << "threshold: " << cfg.threshold << "\n";
  report << "connectivity: " << cfg.connectivity << "\n";
  report << "components: " << lm.component_count() << "\n";
  for (int k = 0; k < lm.component_count(); ++k)
    report << "label " << k + 1 << ": " << lm.component_sizes[static_cast<std::size_t>(k)]
           << " voxels\n";
  report << "kept: " << largest.foreground_count() << " voxels\n";
  std::fputs(report.str().c_str(), stdout);
  if (!report_path.empty()) write_text(report_path, report.str());
  return 0;
}

template <typename T>
int run_eval_t(const RunConfig& cfg, const std::string& ckpt_path,
               const std::vector<std::string>& volumes,
               const std::vector<std::string>& masks, const std::string& out_csv) {
  Checkpoint<T> ckpt = load_checkpoint<T>(ckpt_path);
  std::vector<EvalCase> cases;
  for (std::size_t i = 0; i < volumes.size(); ++i)
    cases.push_back({volumes[i], read_volume(volumes[i]), read_mask(masks[i])});
  EvalReport report = evaluate(ckpt.spec, ckpt.store, cases, cfg.threshold,
                               cfg.conn(), cfg.depth());
  const std::string csv = report.to_csv();
  std::fputs(csv.c_str(), stdout);
  if (!out_csv.empty()) write_text(out_csv, csv);
  return 0;
}

int run_eval(const CommonOpts& opts, const std::string& ckpt_path,
             const std::vector<std::string>& volumes,
             const std::vector<std::string>& masks, const std::string& out_csv) {
  RunConfig cfg = resolve_config(opts);
  require(volumes.size() == masks.size() && !volumes.empty(),
          "eval needs matching volume/mask path lists");
  if (cfg.train.width == NumericWidth::f64)
    return run_eval_t<double>(cfg, ckpt_path, volumes, masks, out_csv);
  return run_eval_t<float>(cfg, ckpt_path, volumes, masks, out_csv);
}

int run_gradcheck(const CommonOpts& opts, double tolerance, int samples, double h,
                  std::uint64_t sample_seed) {
  RunConfig cfg = resolve_config(opts);
  U2NetSpec spec = cfg.make_spec();
  GradCheckReport rep =
      u2net_grad_check(spec, static_cast<std::size_t>(samples), h, sample_seed);
  std::printf("gradcheck: max relative error %.6e over %zu sampled parameters "
              "(h=%g, 64-bit)\n",
              rep.max_rel_error, rep.samples, h);
  if (!(rep.max_rel_error < tolerance))
    throw NumericError(detail::format_msg(
        "gradient check failed: max relative error ", rep.max_rel_error,
        " is not below the tolerance ", tolerance));
  return 0;
}

int run_describe(const CommonOpts& opts) {
  RunConfig cfg = resolve_config(opts);
  U2NetSpec spec = cfg.make_spec();
  std::printf("%-24s %-14s %-18s %12s\n", "name", "type", "shape", "params");
  for (const LayerRow& row : describe_layers(spec))
    std::printf("%-24s %-14s %-18s %12zu\n", row.name.c_str(), row.type.c_str(),
                row.shape.c_str(), row.params);
  std::printf("total parameters: %zu\n", param_count(spec));
  std::printf("minimum legal input extent: %d\n", spec.min_input_extent());
  return 0;
}

int run_montage(const CommonOpts& opts, const std::string& in_path,
                const std::string& prefix, int every_k, std::string kind) {
  (void)resolve_config(opts);
  RvolContents rc = read_rvol(in_path);
  if (kind == "auto")
    kind = rc.dtype == VolDtype::f32 ? "volume"
           : rc.dtype == VolDtype::u8 ? "mask"
                                      : "labels";
  std::vector<std::string> written;
  if (kind == "volume") {
    Volume v;
    v.dims = rc.dims;
    v.spacing = rc.spacing;
    v.values = std::move(rc.values);
    written = export_montage(v, prefix, every_k);
  } else if (kind == "mask") {
    written = export_montage(read_mask(in_path), prefix, every_k);
  } else if (kind == "labels") {
    LabelMap lm;
    lm.dims = rc.dims;
    lm.spacing = rc.spacing;
    lm.values.resize(rc.values.size());
    std::int32_t max_label = 0;
    for (std::size_t i = 0; i < rc.values.size(); ++i) {
      lm.values[i] = static_cast<std::int32_t>(rc.values[i]);
      require(lm.values[i] >= 0, in_path, ": labels must be non-negative");
      max_label = std::max(max_label, lm.values[i]);
    }
    lm.component_sizes.assign(static_cast<std::size_t>(max_label), 0);
    for (auto l : lm.values)
      if (l > 0) ++lm.component_sizes[static_cast<std::size_t>(l - 1)];
    written = export_montage(lm, prefix, every_k);
  } else {
    fail("montage kind must be auto, volume, mask, or labels, got '", kind, "'");
  }
  std::printf("montage: wrote %zu images with prefix %s\n", written.size(),
              prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"airseg: U2-net airway segmentation pipeline on phantom CT volumes"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* phantom = app.add_subcommand("phantom", "generate a synthetic airway phantom");
  std::string ph_vol, ph_mask;
  phantom->add_option("volume", ph_vol, "output volume (RVOL1 i16)")->required();
  phantom->add_option("mask", ph_mask, "output ground-truth mask (RVOL1 u8)")->required();
  add_common(phantom, opts);

  auto* pre = app.add_subcommand("preprocess", "per-slice normalization");
  std::string pre_in, pre_out;
  pre->add_option("input", pre_in, "input volume (RVOL1)")->required();
  pre->add_option("output", pre_out, "output normalized volume (RVOL1 f32)")->required();
  add_common(pre, opts);

  auto* tr = app.add_subcommand("train", "train the network on volume/mask pairs");
  std::vector<std::string> tr_vols, tr_masks;
  std::string tr_ckpt, tr_csv;
  tr->add_option("--volume", tr_vols, "training volume (repeatable)")->required();
  tr->add_option("--mask", tr_masks, "matching ground-truth mask (repeatable)")->required();
  tr->add_option("checkpoint", tr_ckpt, "output checkpoint path")->required();
  tr->add_option("losscsv", tr_csv, "output loss-curve CSV path")->required();
  add_common(tr, opts);

  auto* pr = app.add_subcommand("predict", "fused probability map for a volume");
  std::string pr_ckpt, pr_vol, pr_out;
  bool pr_init = false;
  pr->add_option("--checkpoint", pr_ckpt, "trained checkpoint to load");
  pr->add_flag("--init", pr_init, "run with freshly initialized parameters instead");
  pr->add_option("volume", pr_vol)->required();
  pr->add_option("output", pr_out, "output probability volume (RVOL1 f32)")->required();
  add_common(pr, opts);

  auto* rf = app.add_subcommand("refine", "threshold, label, keep the largest component");
  std::string rf_in, rf_out, rf_report, rf_labels;
  rf->add_option("input", rf_in, "probability volume (RVOL1 f32)")->required();
  rf->add_option("output", rf_out, "output mask (RVOL1 u8)")->required();
  rf->add_option("--report", rf_report, "also write the component report here");
  rf->add_option("--labels", rf_labels, "also write the label map (RVOL1 i16)");
  add_common(rf, opts);

  auto* ev = app.add_subcommand("eval", "per-case DSC of the full pipeline");
  std::string ev_ckpt, ev_csv;
  std::vector<std::string> ev_vols, ev_masks;
  ev->add_option("checkpoint", ev_ckpt)->required();
  ev->add_option("--volume", ev_vols, "case volume (repeatable)")->required();
  ev->add_option("--mask", ev_masks, "case ground truth (repeatable)")->required();
  ev->add_option("--out", ev_csv, "also write the DSC table here");
  add_common(ev, opts);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  double gc_tol = 1e-3, gc_h = 1e-3;
  int gc_samples = 100;
  std::uint64_t gc_seed = 99;
  gc->add_option("--tolerance", gc_tol, "maximum accepted relative error");
  gc->add_option("--h", gc_h, "central-difference step");
  gc->add_option("--samples", gc_samples, "number of sampled parameter entries");
  gc->add_option("--sample-seed", gc_seed, "sampling seed");
  add_common(gc, opts);

  auto* de = app.add_subcommand("describe", "layer table and parameter audit");
  add_common(de, opts);

  auto* mo = app.add_subcommand("montage", "export axial slices as PGM images");
  std::string mo_in, mo_prefix, mo_kind = "auto";
  int mo_every = 1;
  mo->add_option("input", mo_in, "RVOL1 file")->required();
  mo->add_option("prefix", mo_prefix, "output path prefix")->required();
  mo->add_option("--every-k", mo_every, "export every k-th slice");
  mo->add_option("--kind", mo_kind, "auto|volume|mask|labels");
  add_common(mo, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (phantom->parsed()) return run_phantom(opts, ph_vol, ph_mask);
    if (pre->parsed()) return run_preprocess(opts, pre_in, pre_out);
    if (tr->parsed()) return run_train(opts, tr_vols, tr_masks, tr_ckpt, tr_csv);
    if (pr->parsed()) return run_predict(opts, pr_ckpt, pr_init, pr_vol, pr_out);
    if (rf->parsed()) return run_refine(opts, rf_in, rf_out, rf_report, rf_labels);
    if (ev->parsed()) return run_eval(opts, ev_ckpt, ev_vols, ev_masks, ev_csv);
    if (gc->parsed()) return run_gradcheck(opts, gc_tol, gc_samples, gc_h, gc_seed);
    if (de->parsed()) return run_describe(opts);
    if (mo->parsed()) return run_montage(opts, mo_in, mo_prefix, mo_every, mo_kind);
  } catch (const airseg::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
