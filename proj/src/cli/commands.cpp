#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "binary_io.hpp"
#include "polsar/change_detect.hpp"
#include "polsar/dataset.hpp"
#include "polsar/dncnn/inference.hpp"
#include "polsar/dncnn/train.hpp"
#include "polsar/metrics.hpp"
#include "polsar/parallel.hpp"
#include "polsar/raster_io.hpp"
#include "polsar/speckle_sim.hpp"
#include "polsar/transform.hpp"

namespace polsar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Logger sink(const Logger& log) {
  if (log) return log;
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Exact, locale-free number for CSV/JSON text outputs.
std::string exact(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt("%.17g", v);
}

// Re-throws library errors with the file that caused them.
template <class F>
auto in_file(const fs::path& path, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ManifestError&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Precision precision_of(JsonReader& r) {
  const auto p = r.optional_string("precision", "f64");
  if (p == "f64") return Precision::f64;
  if (p == "f32") return Precision::f32;
  throw ManifestError(r.path() + ".precision: expected \"f32\" or \"f64\"");
}

std::string file_digest(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  return fnv1a_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

fs::path record_path_for(const fs::path& primary) { return fs::path(primary.string() + ".run.json"); }

void write_record(CommandResult& result, const fs::path& record, const std::string& command, const Manifest& m,
                  std::optional<std::uint64_t> seed) {
  json doc;
  doc["command"] = command;
  doc["manifest_digest"] = "fnv1a64:" + m.digest;
  doc["manifest"] = m.doc;
  doc["seed"] = seed ? json(*seed) : json(nullptr);
  doc["versions"] = {{"polsar", kVersion}, {"psr", 1}, {"psd", 1}, {"psm", 1}};
  json outs = json::array();
  const fs::path base = record.parent_path();
  for (const auto& o : result.outputs) {
    outs.push_back({{"path", o.lexically_proximate(base).generic_string()}, {"fnv1a64", file_digest(o)}});
  }
  doc["outputs"] = outs;
  write_text(record, doc.dump(2) + "\n");
  result.record = record;
}

void check_png(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || !std::equal(sig, sig + 8, reinterpret_cast<const unsigned char*>(bytes.data()))) {
    throw IoError(path.string() + ": quicklook is not a PNG file");
  }
}

std::optional<std::uint64_t> optional_seed(JsonReader& r) {
  if (!r.has("seed")) {
    r.optional_uint("seed", 0);  // mark as seen
    return std::nullopt;
  }
  return r.required_uint("seed");
}

std::size_t as_size(std::uint64_t v) { return static_cast<std::size_t>(v); }

}  // namespace

TemporalStack read_stack_manifest(const fs::path& path) {
  const Manifest m = in_file(path, [&] { return load_manifest(path); });
  JsonReader root(m.doc, "$");
  TemporalStack stack;
  stack.dates = root.string_array("dates");
  const auto epochs = root.string_array("epochs");
  if (root.has("truths")) root.string_array("truths");
  else root.optional_string("truths", "");
  root.finish();
  for (const auto& e : epochs) {
    const fs::path p = m.resolve(e);
    stack.epochs.push_back(in_file(p, [&] { return read_c2(p); }));
  }
  in_file(path, [&] { stack.validate(2); });
  return stack;
}

CommandResult cmd_simulate(const fs::path& manifest_path, const Logger& log_in) {
  const auto log = sink(log_in);
  const Manifest m = load_manifest(manifest_path);
  JsonReader root(m.doc, "$");
  const std::uint64_t seed = root.required_uint("seed");

  SceneSpec spec;
  {
    auto scene = root.object("scene");
    spec.height = as_size(scene.required_uint("height"));
    spec.width = as_size(scene.required_uint("width"));
    for (auto& reg : scene.object_array("regions")) {
      spec.regions.push_back({reg.rect("rect"), reg.cov2("truth")});
      reg.finish();
    }
    for (auto& pt : scene.object_array("points", false)) {
      PointTarget t;
      t.row = as_size(pt.required_uint("row"));
      t.col = as_size(pt.required_uint("col"));
      t.amplitude = pt.cov2("amplitude");
      pt.finish();
      spec.points.push_back(t);
    }
    scene.finish();
  }
  ChangeScript script;
  script.epochs = as_size(root.optional_uint("epochs", 1));
  for (auto& ev : root.object_array("changes", false)) {
    ChangeEvent e;
    e.epoch = as_size(ev.required_uint("epoch"));
    e.region = ev.rect("rect");
    e.truth = ev.cov2("truth");
    ev.finish();
    script.events.push_back(e);
  }
  const std::string start = root.optional_string("start_date", "2021-01-01");
  const double interval = root.optional_number("interval_days", 12);
  if (interval != std::floor(interval)) throw ManifestError("$.interval_days: expected an integer");
  const Precision precision = precision_of(root);
  const fs::path out_dir = m.resolve(root.required_string("output_dir"));
  root.finish();

  log("simulate: " + std::to_string(script.epochs) + " epochs of " + std::to_string(spec.height) + "x" +
      std::to_string(spec.width) + ", seed " + std::to_string(seed));
  const SimulatedStack sim = simulate_stack(spec, script, seed, start, static_cast<int>(interval));

  CommandResult result;
  json stack_doc;
  stack_doc["dates"] = sim.stack.dates;
  stack_doc["epochs"] = json::array();
  stack_doc["truths"] = json::array();
  for (std::size_t e = 0; e < sim.stack.size(); ++e) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03zu.psr", e);
    write_raster(sim.stack.epochs[e], out_dir / name, precision);
    result.outputs.push_back(out_dir / name);
    stack_doc["epochs"].push_back(name);
    std::snprintf(name, sizeof name, "truth_%03zu.psr", e);
    write_raster(sim.truths[e], out_dir / name, Precision::f64);
    result.outputs.push_back(out_dir / name);
    stack_doc["truths"].push_back(name);
  }
  write_raster(sim.change_truth, out_dir / "change_truth.psr");
  result.outputs.push_back(out_dir / "change_truth.psr");
  write_text(out_dir / "stack.json", stack_doc.dump(2) + "\n");
  result.outputs.push_back(out_dir / "stack.json");

  for (const auto& o : result.outputs) {
    if (o.extension() == ".psr") in_file(o, [&] { read_raster(o); });
  }
  if (script.epochs >= 2) read_stack_manifest(out_dir / "stack.json");

  write_record(result, out_dir / "simulate.run.json", "simulate", m, seed);
  result.summary.push_back("seed " + std::to_string(seed));
  result.summary.push_back("stack " + (out_dir / "stack.json").string());
  return result;
}

CommandResult cmd_changemask(const fs::path& manifest_path, const Logger& log_in) {
  const auto log = sink(log_in);
  const Manifest m = load_manifest(manifest_path);
  JsonReader root(m.doc, "$");
  const auto seed = optional_seed(root);
  const fs::path stack_path = m.resolve(root.required_string("stack"));
  ChangeMaskOptions opts;
  if (root.has("window")) {
    const auto w = root.number_array("window", 2);
    if (w[0] < 1 || w[1] < 1 || w[0] != std::floor(w[0]) || w[1] != std::floor(w[1])) {
      throw ManifestError("$.window: expected two positive integers");
    }
    opts.win_az = static_cast<std::size_t>(w[0]);
    opts.win_rg = static_cast<std::size_t>(w[1]);
  } else {
    root.optional_string("window", "");
  }
  const double factor = root.optional_number("correlation_factor", 1.0);
  if (!(factor > 0.0)) throw ManifestError("$.correlation_factor: must be positive");
  const auto looks = root.maybe_number("looks");
  opts.looks = looks ? *looks : static_cast<double>(opts.win_az * opts.win_rg) * factor;
  opts.significance = root.optional_number("significance", opts.significance);
  const fs::path mask_path = m.resolve(root.required_string("output_mask"));
  const fs::path prob_path = m.resolve(root.required_string("output_probability"));
  root.finish();

  const TemporalStack stack = read_stack_manifest(stack_path);
  log("changemask: k=" + std::to_string(stack.size()) + ", window " + std::to_string(opts.win_az) + "x" +
      std::to_string(opts.win_rg) + ", n=" + exact(opts.looks));
  const ChangeMask cm = change_mask(stack, opts);

  CommandResult result;
  write_raster(cm.mask, mask_path);
  write_raster(cm.prob, prob_path, Precision::f32);
  result.outputs = {mask_path, prob_path};
  const MaskImage back = in_file(mask_path, [&] { return read_mask(mask_path); });
  in_file(prob_path, [&] { read_real_image(prob_path); });
  if (back != cm.mask) throw IoError(mask_path.string() + ": mask did not survive a round trip");

  std::size_t changed = 0;
  for (auto v : cm.mask.pixels()) changed += v != 0;
  if (cm.singular_pixels > 0) {
    result.warnings.push_back(std::to_string(cm.singular_pixels) + " pixels had singular matrices and were flagged");
    log("warning: " + result.warnings.back());
  }
  write_record(result, record_path_for(mask_path), "changemask", m, seed);
  result.summary.push_back("changed fraction " +
                           fmt("%.6f", static_cast<double>(changed) / static_cast<double>(cm.mask.size())));
  return result;
}

CommandResult cmd_dataset(const fs::path& manifest_path, const Logger& log_in) {
  const auto log = sink(log_in);
  const Manifest m = load_manifest(manifest_path);
  JsonReader root(m.doc, "$");
  const std::uint64_t seed = root.required_uint("seed");
  struct Source {
    fs::path stack;
    std::optional<fs::path> mask;
  };
  std::vector<Source> sources;
  for (auto& s : root.object_array("stacks")) {
    Source src{m.resolve(s.required_string("stack")), std::nullopt};
    if (s.has("mask")) src.mask = m.resolve(s.required_string("mask"));
    else s.optional_string("mask", "");
    s.finish();
    sources.push_back(std::move(src));
  }
  if (sources.empty()) throw ManifestError("$.stacks: at least one stack is required");
  const std::size_t count = as_size(root.required_uint("count"));
  const std::size_t patch = as_size(root.optional_uint("patch", 64));
  const double max_ratio = root.optional_number("max_change_ratio", 0.10);
  const std::size_t attempts = as_size(root.optional_uint("attempts_per_patch", 100));
  double lo = 0.0, hi = 99.9;
  if (auto n = root.optional_object("norm")) {
    lo = n->optional_number("lo_percentile", lo);
    hi = n->optional_number("hi_percentile", hi);
    n->finish();
  }
  const fs::path out = m.resolve(root.required_string("output"));
  root.finish();

  std::vector<TemporalStack> stacks;
  for (const auto& s : sources) stacks.push_back(read_stack_manifest(s.stack));

  // Global normalization over every epoch of every stack.
  NormStats norm;
  {
    std::vector<BandStack> bands;
    TransformReport rep;
    for (const auto& st : stacks) {
      for (const auto& e : st.epochs) bands.push_back(transform_raster(e, PsdPolicy::project, &rep));
    }
    if (rep.projected_pixels > 0) log("dataset: repaired " + std::to_string(rep.projected_pixels) + " non-PSD pixels");
    norm = compute_norm_stats(bands, lo, hi);
  }

  PatchDataset ds;
  ds.norm = norm;
  ds.patch_size = patch;
  ds.source_digest = m.digest;
  CommandResult result;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const std::size_t share = count / stacks.size() + (i < count % stacks.size() ? 1 : 0);
    if (share == 0) continue;
    MaskImage mask;
    if (sources[i].mask) mask = in_file(*sources[i].mask, [&] { return read_mask(*sources[i].mask); });
    const C2Raster reference = temporal_average(stacks[i]);
    SamplingOptions so;
    so.count = share;
    so.patch = patch;
    so.max_change_ratio = max_ratio;
    so.seed = seed;
    so.stack_id = static_cast<std::uint32_t>(i);
    so.attempts_per_patch = attempts;
    SamplingReport rep;
    PatchDataset part = in_file(sources[i].stack, [&] {
      return sample_patches(stacks[i], reference, mask, norm, so, &rep);
    });
    log("dataset: stack " + std::to_string(i) + " accepted " + std::to_string(rep.accepted) + "/" +
        std::to_string(rep.attempts) + " draws, clipped " + std::to_string(rep.clips.below) + " below / " +
        std::to_string(rep.clips.above) + " above");
    for (auto& p : part.pairs) ds.pairs.push_back(std::move(p));
  }

  write_dataset(ds, out);
  result.outputs.push_back(out);
  const PatchDataset back = in_file(out, [&] { return read_dataset(out); });
  if (back.pairs.size() != ds.pairs.size()) throw IoError(out.string() + ": pair count mismatch after write");
  write_record(result, record_path_for(out), "dataset", m, seed);
  result.summary.push_back("pairs " + std::to_string(ds.pairs.size()));
  return result;
}

CommandResult cmd_train(const fs::path& manifest_path, const Logger& log_in) {
  const auto log = sink(log_in);
  const Manifest m = load_manifest(manifest_path);
  JsonReader root(m.doc, "$");
  const std::uint64_t seed = root.required_uint("seed");
  const fs::path ds_path = m.resolve(root.required_string("dataset"));

  nn::NetConfig nc;
  if (auto n = root.optional_object("network")) {
    nc.depth = as_size(n->optional_uint("depth", nc.depth));
    nc.width = as_size(n->optional_uint("width", nc.width));
    nc.kernel = as_size(n->optional_uint("kernel", nc.kernel));
    nc.bn_epsilon = n->optional_number("bn_epsilon", nc.bn_epsilon);
    nc.bn_momentum = n->optional_number("bn_momentum", nc.bn_momentum);
    n->finish();
  }
  nn::TrainConfig tc;
  tc.seed = seed;
  if (auto t = root.optional_object("training")) {
    tc.epochs = as_size(t->optional_uint("epochs", tc.epochs));
    tc.batch_size = as_size(t->optional_uint("batch_size", tc.batch_size));
    tc.lr0 = t->optional_number("lr0", tc.lr0);
    tc.lr_decay_every = as_size(t->optional_uint("lr_decay_every", tc.lr_decay_every));
    tc.lr_decay_factor = t->optional_number("lr_decay_factor", tc.lr_decay_factor);
    tc.validation_fraction = t->optional_number("validation_fraction", tc.validation_fraction);
    tc.identity_init = t->optional_bool("identity_init", tc.identity_init);
    if (auto a = t->optional_object("adam")) {
      tc.adam.beta1 = a->optional_number("beta1", tc.adam.beta1);
      tc.adam.beta2 = a->optional_number("beta2", tc.adam.beta2);
      tc.adam.eps = a->optional_number("epsilon", tc.adam.eps);
      a->finish();
    }
    t->finish();
  }
  const fs::path ckpt = m.resolve(root.required_string("checkpoint"));
  const fs::path log_path = m.resolve(root.required_string("log"));
  root.finish();
  nc.validate();
  tc.validate();

  const PatchDataset ds = in_file(ds_path, [&] { return read_dataset(ds_path); });
  log("train: " + std::to_string(ds.pairs.size()) + " pairs, depth " + std::to_string(nc.depth) + ", width " +
      std::to_string(nc.width) + ", " + std::to_string(tc.epochs) + " epochs");
  const nn::TrainResult tr = in_file(ds_path, [&] {
    return nn::train(ds, nc, tc, [&](const nn::EpochLog& e) {
      log("epoch " + std::to_string(e.epoch) + " lr " + fmt("%g", e.lr) + " train " + fmt("%.6g", e.train_loss) +
          " val " + fmt("%.6g", e.val_loss));
    });
  });

  CommandResult result;
  nn::save_checkpoint(tr.model, ckpt);
  nn::write_training_log(tr.log, log_path);
  result.outputs = {ckpt, log_path};
  in_file(ckpt, [&] { nn::load_checkpoint(ckpt); });
  write_record(result, record_path_for(ckpt), "train", m, seed);
  const double best = tr.log.empty() ? 0.0 : tr.log[tr.best_epoch].val_loss;
  result.summary.push_back("best epoch " + std::to_string(tr.best_epoch) + ", val loss " + fmt("%.6g", best) +
                           " (zero-model baseline " + fmt("%.6g", tr.baseline_val_loss) + ")");
  return result;
}

CommandResult cmd_despeckle(const fs::path& manifest_path, const Logger& log_in) {
  const auto log = sink(log_in);
  const Manifest m = load_manifest(manifest_path);
  JsonReader root(m.doc, "$");
  const auto seed = optional_seed(root);
  const fs::path input = m.resolve(root.required_string("input"));
  const fs::path ckpt = m.resolve(root.required_string("checkpoint"));
  const fs::path out = m.resolve(root.required_string("output"));
  fs::path ql = out;
  ql.replace_extension(".png");
  ql = m.resolve(root.optional_string("quicklook", ql.string()));
  nn::DespeckleOptions opts;
  opts.tile = as_size(root.optional_uint("tile", opts.tile));
  opts.overlap = as_size(root.optional_uint("overlap", opts.overlap));
  opts.repair_psd = root.optional_bool("repair_psd", opts.repair_psd);
  std::optional<NormStats> manifest_norm;
  if (auto n = root.optional_object("norm")) {
    NormStats ns;
    const auto lo = n->number_array("x_min", 4);
    const auto hi = n->number_array("x_max", 4);
    std::copy(lo.begin(), lo.end(), ns.x_min.begin());
    std::copy(hi.begin(), hi.end(), ns.x_max.begin());
    n->finish();
    manifest_norm = ns;
  }
  const Precision precision = precision_of(root);
  root.finish();

  const nn::NetworkModel model = in_file(ckpt, [&] { return nn::load_checkpoint(ckpt); });
  CommandResult result;
  if (manifest_norm && !(*manifest_norm == model.norm)) {
    result.warnings.push_back("manifest normalization differs from the checkpoint; using the checkpoint's");
    log("warning: " + result.warnings.back());
  }
  const C2Raster c2 = in_file(input, [&] { return read_c2(input); });
  nn::DespeckleReport rep;
  const C2Raster filtered = in_file(input, [&] { return nn::despeckle_raster(c2, model, opts, &rep); });
  log("despeckle: " + std::to_string(rep.tiles) + " tiles, " + std::to_string(rep.output_clipped) +
      " clipped outputs, " + std::to_string(rep.inverse.projected_pixels) + " PSD repairs");

  write_raster(filtered, out, precision);
  export_quicklook(filtered, ql);
  result.outputs = {out, ql};
  const C2Raster back = in_file(out, [&] { return read_c2(out); });
  if (!back.same_shape(c2)) throw IoError(out.string() + ": geometry changed");
  check_png(ql);
  write_record(result, record_path_for(out), "despeckle", m, seed);
  result.summary.push_back("filtered " + out.string());
  return result;
}

CommandResult cmd_evaluate(const fs::path& manifest_path, const Logger& log_in) {
  const auto log = sink(log_in);
  const Manifest m = load_manifest(manifest_path);
  JsonReader root(m.doc, "$");
  const auto seed = optional_seed(root);
  const fs::path orig_path = m.resolve(root.required_string("original"));
  const fs::path filt_path = m.resolve(root.required_string("filtered"));
  std::optional<fs::path> ref_path;
  if (root.has("reference")) ref_path = m.resolve(root.required_string("reference"));
  else root.optional_string("reference", "");
  std::vector<RegionOfInterest> rois;
  for (auto& r : root.object_array("rois")) {
    RegionOfInterest roi;
    roi.label = r.required_string("label");
    roi.row0 = as_size(r.required_uint("row0"));
    roi.col0 = as_size(r.required_uint("col0"));
    roi.height = as_size(r.required_uint("height"));
    roi.width = as_size(r.required_uint("width"));
    r.finish();
    rois.push_back(roi);
  }
  SsimOptions so;
  std::optional<double> dynamic_range;
  if (auto s = root.optional_object("ssim")) {
    so.window = as_size(s->optional_uint("window", so.window));
    dynamic_range = s->maybe_number("dynamic_range");
    const auto c = s->optional_string("constants", "linear");
    if (c == "linear") so.constants = SsimConstants::linear;
    else if (c == "squared") so.constants = SsimConstants::squared;
    else throw ManifestError(s->path() + ".constants: expected \"linear\" or \"squared\"");
    s->finish();
  }
  const fs::path out = m.resolve(root.required_string("output"));
  root.finish();

  const C2Raster original = in_file(orig_path, [&] { return read_c2(orig_path); });
  const C2Raster filtered = in_file(filt_path, [&] { return read_c2(filt_path); });
  require_same_shape(original, filtered, "evaluate original/filtered");
  std::optional<C2Raster> reference;
  if (ref_path) {
    reference = in_file(*ref_path, [&] { return read_c2(*ref_path); });
    require_same_shape(original, *reference, "evaluate original/reference");
  }
  for (const auto& roi : rois) roi.validate(original.height(), original.width());

  const RealImage filt_span = span_image(filtered);
  const std::optional<RealImage> ref_span = reference ? std::optional(span_image(*reference)) : std::nullopt;

  CommandResult result;
  std::ostringstream csv;
  csv << "label,enl_original,enl_filtered,epd_roa_h,epd_roa_v,epd_roa,ssim\n";
  for (const auto& roi : rois) {
    const auto e0 = enl(original, roi);
    const auto e1 = enl(filtered, roi);
    const auto h = epd_roa(original, filtered, roi, EdgeDirection::horizontal);
    const auto v = epd_roa(original, filtered, roi, EdgeDirection::vertical);
    std::string ssim_field;
    if (ref_span) {
      SsimOptions o = so;
      if (dynamic_range) {
        o.dynamic_range = *dynamic_range;
      } else {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t r = roi.row0; r < roi.row0 + roi.height; ++r) {
          for (std::size_t c = roi.col0; c < roi.col0 + roi.width; ++c) {
            lo = std::min(lo, (*ref_span)(r, c));
            hi = std::max(hi, (*ref_span)(r, c));
          }
        }
        o.dynamic_range = hi > lo ? hi - lo : 1.0;
      }
      ssim_field = exact(ssim(filt_span, *ref_span, roi, o));
    }
    csv << roi.label << ',' << exact(e0.value) << ',' << exact(e1.value) << ',' << exact(h.value) << ','
        << exact(v.value) << ',' << exact(0.5 * (h.value + v.value)) << ',' << ssim_field << '\n';
    if (h.skipped + v.skipped > 0) {
      result.warnings.push_back("ROI '" + roi.label + "' skipped " + std::to_string(h.skipped + v.skipped) +
                                " pixel pairs with zero span");
      log("warning: " + result.warnings.back());
    }
  }

  write_text(out, csv.str());
  result.outputs = {out};
  write_record(result, record_path_for(out), "evaluate", m, seed);
  result.summary.push_back("metrics " + out.string());
  return result;
}

CommandResult cmd_quicklook(const fs::path& input, const fs::path& output, const Logger& log_in) {
  const auto log = sink(log_in);
  const AnyRaster raster = in_file(input, [&] { return read_raster(input); });
  C2Raster c2;
  if (const auto* p = std::get_if<C2Raster>(&raster)) {
    c2 = *p;
  } else if (const auto* b = std::get_if<BandStack>(&raster)) {
    c2 = untransform_raster(*b, true);
  } else {
    throw InvalidArgument(input.string() + ": quicklook needs a covariance or intensity raster");
  }
  export_quicklook(c2, output);
  check_png(output);
  log("quicklook: " + output.string());
  CommandResult result;
  result.outputs = {output};
  return result;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Deep-learning speckle filter for dual-pol SAR covariance data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: POLSAR_THREADS or all cores)")
      ->check(CLI::Range(1, 4096));

  fs::path manifest;
  struct Stage {
    const char* name;
    const char* help;
    CommandResult (*fn)(const fs::path&, const Logger&);
  };
  const Stage stages[] = {
      {"simulate", "Simulate a Wishart speckle stack from a scene manifest", cmd_simulate},
      {"changemask", "Omnibus change mask from a stack manifest", cmd_changemask},
      {"dataset", "Build a change-aware patch dataset (PSD1)", cmd_dataset},
      {"train", "Train the residual CNN and write a PSM1 checkpoint", cmd_train},
      {"despeckle", "Filter a covariance raster with a checkpoint", cmd_despeckle},
      {"evaluate", "ENL, EPD-ROA and SSIM over ROIs to CSV", cmd_evaluate},
  };
  std::vector<std::pair<CLI::App*, const Stage*>> subs;
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("manifest", manifest, "JSON manifest")->required()->check(CLI::ExistingFile);
    subs.emplace_back(sub, &s);
  }
  fs::path ql_in, ql_out;
  auto* ql = app.add_subcommand("quicklook", "Write an RGB PNG of a covariance raster");
  ql->add_option("input", ql_in, "PSR1 raster")->required()->check(CLI::ExistingFile);
  ql->add_option("output", ql_out, "PNG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (threads > 0) set_thread_count(threads);

  try {
    CommandResult r;
    if (ql->parsed()) {
      r = cmd_quicklook(ql_in, ql_out);
    } else {
      for (const auto& [sub, stage] : subs) {
        if (sub->parsed()) r = stage->fn(manifest, {});
      }
    }
    for (const auto& line : r.summary) std::cout << line << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace polsar::cli
