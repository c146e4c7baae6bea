// nca-edge: command-line front end for the NCA inference engine.
//
// Exit codes: 0 ok, 2 usage, 3 format (including size budget and task mismatch),
// 4 numeric fault, 5 I/O. Errors print one line: "error: <class>: <message>".

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "nca/bench.hpp"
#include "nca/bundle.hpp"
#include "nca/demo_models.hpp"
#include "nca/error.hpp"
#include "nca/fs_util.hpp"
#include "nca/metrics.hpp"
#include "nca/model_io.hpp"
#include "nca/pipeline.hpp"
#include "nca/state.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIo = 5;

int exit_code_for(nca::ErrorClass cls) {
  switch (cls) {
    case nca::ErrorClass::usage:
    case nca::ErrorClass::config:
    case nca::ErrorClass::contract: return kExitUsage;
    case nca::ErrorClass::format:
    case nca::ErrorClass::size_budget:
    case nca::ErrorClass::task_mismatch: return kExitFormat;
    case nca::ErrorClass::numeric: return kExitNumeric;
    case nca::ErrorClass::io: return kExitIo;
  }
  return kExitUsage;
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

struct ScheduleFlags {
  std::uint64_t seed = 0;
  int steps = 100;
  bool early_stop = false;
  int min_steps = 10;
  float delta_threshold = 0.1f;
  int cooldown = 5;
  std::string kernel = "vector";

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "PRNG seed")->capture_default_str();
    app->add_option("--steps", steps, "maximum NCA steps")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_flag("--early-stop", early_stop, "stop once hidden channels settle");
    app->add_option("--min-steps", min_steps, "early stop: steps before the counter runs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--delta-threshold", delta_threshold, "early stop: hidden-delta threshold")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--cooldown", cooldown, "early stop: consecutive quiet steps")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--kernel", kernel, "matvec path")->capture_default_str()->check(CLI::IsMember({"scalar", "vector"}));
  }

  nca::StepConfig config() const {
    nca::StepConfig c;
    c.max_steps = steps;
    c.seed = seed;
    c.kernel = nca::parse_kernel_path(kernel);
    if (early_stop) c.early_stop = nca::EarlyStopParams{min_steps, delta_threshold, cooldown};
    c.validate();
    return c;
  }
};

struct InferFlags {
  std::string model;
  std::string input;
  std::string output;
  std::string soft;
  std::string trace;
  std::string rle;
  int size = 0;
  float fire_rate = 0.0f;
  ScheduleFlags schedule;
};

void add_infer_options(CLI::App* app, InferFlags& f, bool segmentation) {
  app->add_option("--model", f.model, "weight file")->required();
  app->add_option("--input", f.input, "input image (PNG/PPM)")->required();
  app->add_option("--output", f.output, segmentation ? "binary mask PNG" : "16-bit depth PNG")->required();
  if (segmentation) {
    app->add_option("--soft", f.soft, "also write the soft mask as 8-bit PNG");
    app->add_option("--rle", f.rle, "also write the binary mask as run-length text");
  }
  app->add_option("--trace", f.trace, "write the step trace as JSON lines");
  app->add_option("--size", f.size, "resize input to N x N before inference")->check(CLI::PositiveNumber);
  app->add_option("--fire-rate", f.fire_rate, "override the model's fire rate")->check(CLI::Range(0.0, 1.0));
  f.schedule.add_to(app);
}

std::string trace_jsonl(const nca::StepTrace& trace) {
  std::ostringstream out;
  for (const auto& s : trace.steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["hidden_delta"] = s.hidden_delta;
    j["fired_cells"] = s.fired_cells;
    j["cooldown"] = s.cooldown;
    j["stopped_early"] = s.stopped_early;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["total_steps"] = trace.total_steps;
  summary["stopped_early"] = trace.stopped_early();
  out << summary.dump() << '\n';
  return out.str();
}

nca::InferenceResult run_inference(const InferFlags& f, nca::TaskTag expected) {
  nca::ModelSpec spec = nca::io::load_model(f.model);
  if (spec.task != expected) {
    throw nca::TaskMismatchError("model " + f.model + " is a " + std::string(nca::to_string(spec.task)) +
                                 " model, expected " + std::string(nca::to_string(expected)));
  }
  if (f.fire_rate > 0.0f) spec.fire_rate = f.fire_rate;
  const nca::StepConfig config = f.schedule.config();
  nca::RgbImage image = nca::load_image(f.input);
  if (f.size > 0) image = nca::resize_bilinear(image, f.size, f.size);
  return nca::infer_image(image, spec, config);
}

int cmd_infer_seg(const InferFlags& f) {
  const auto result = run_inference(f, nca::TaskTag::segmentation);
  const nca::SegMask seg = nca::extract_segmentation(result.grid);
  const nca::BoolMask mask = seg.binary();
  nca::GrayImage mask_img(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.size(); ++i) mask_img.data[i] = mask.data[i] ? 1.0f : 0.0f;
  nca::save_gray(f.output, mask_img, nca::BitDepth::eight);
  if (!f.soft.empty()) nca::save_gray(f.soft, seg.soft, nca::BitDepth::eight);
  if (!f.rle.empty()) nca::write_file_atomic(f.rle, nca::to_rle(mask));
  if (!f.trace.empty()) nca::write_file_atomic(f.trace, trace_jsonl(result.trace));
  std::cout << "infer-seg: steps=" << result.trace.total_steps
            << " stopped_early=" << (result.trace.stopped_early() ? 1 : 0) << " foreground=" << mask.count() << '\n';
  return kExitOk;
}

int cmd_infer_depth(const InferFlags& f) {
  const auto result = run_inference(f, nca::TaskTag::depth);
  const nca::DepthMap depth = nca::extract_depth(result.grid);
  nca::save_gray(f.output, depth.normalized(), nca::BitDepth::sixteen);
  if (!f.trace.empty()) nca::write_file_atomic(f.trace, trace_jsonl(result.trace));
  std::cout << "infer-depth: steps=" << result.trace.total_steps
            << " stopped_early=" << (result.trace.stopped_early() ? 1 : 0) << '\n';
  return kExitOk;
}

struct CurateFlags {
  std::string input;
  std::string output;
  double threshold = nca::kCurationThreshold;
};

int cmd_curate(const CurateFlags& f) {
  const auto files = nca::list_files(f.input, {".png", ".pgm", ".ppm", ".pnm"});
  std::vector<nca::DepthMap> maps(files.size());
  nca::parallel_for(files.size(), nca::batch_threads(files.size()),
                    [&](std::size_t i) { maps[i] = nca::DepthMap{nca::load_gray(files[i])}; });
  const nca::CurationResult result = nca::curate(maps, f.threshold);

  const fs::path out(f.output);
  std::error_code ec;
  fs::create_directories(out / "accepted", ec);
  fs::create_directories(out / "rejected", ec);
  if (ec) throw nca::IoError(out, "cannot create output directories: " + ec.message());
  std::vector<bool> accepted(files.size(), false);
  for (auto i : result.accepted) accepted[i] = true;
  std::ostringstream scores;
  scores << "file\tscore\taccepted\n";
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path dest = out / (accepted[i] ? "accepted" : "rejected") / files[i].filename();
    nca::write_file_atomic(dest, nca::io::read_file(files[i]));
    scores << files[i].filename().string() << '\t' << std::setprecision(9) << result.scores[i] << '\t'
           << (accepted[i] ? 1 : 0) << '\n';
  }
  nca::write_file_atomic(out / "scores.tsv", scores.str());
  std::cout << "curate: total=" << files.size() << " accepted=" << result.accepted.size()
            << " rejected=" << result.rejected.size() << " threshold=" << f.threshold << '\n';
  return kExitOk;
}

struct EvalFlags {
  std::string pred;
  std::string gt;
  std::string output;
};

nca::BoolMask load_mask(const fs::path& path) {
  const nca::GrayImage g = nca::load_gray(path);
  nca::BoolMask m(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) m.data[i] = g.data[i] > 0.5f ? 1 : 0;
  return m;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

int cmd_eval(const EvalFlags& f) {
  const auto preds = nca::list_files(f.pred, {".png", ".pgm", ".ppm", ".pnm"});
  if (preds.empty()) throw nca::IoError(f.pred, "no prediction masks found");
  std::vector<double> dices(preds.size());
  std::vector<double> ious(preds.size());
  nca::parallel_for(preds.size(), nca::batch_threads(preds.size()), [&](std::size_t i) {
    const fs::path gt_path = fs::path(f.gt) / preds[i].filename();
    if (!fs::exists(gt_path)) throw nca::IoError(gt_path, "no ground truth for prediction");
    const nca::BoolMask p = load_mask(preds[i]);
    const nca::BoolMask g = load_mask(gt_path);
    dices[i] = nca::dice(p, g);
    ious[i] = nca::iou(p, g);
  });
  std::ostringstream table;
  table << std::fixed << std::setprecision(6);
  table << "image\tdice\tiou\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    table << preds[i].filename().string() << '\t' << dices[i] << '\t' << ious[i] << '\n';
  }
  const auto [dm, ds] = mean_std(dices);
  const auto [im, is] = mean_std(ious);
  table << "mean\t" << dm << " ± " << ds << '\t' << im << " ± " << is << '\n';
  std::cout << table.str();
  if (!f.output.empty()) nca::write_file_atomic(f.output, table.str());
  return kExitOk;
}

struct ValidateFlags {
  std::string model;
  std::size_t max_bytes = nca::io::kDefaultSizeBudget;
};

int cmd_validate(const ValidateFlags& f) {
  const auto bytes = nca::io::read_file(f.model);
  const nca::io::Header header = nca::io::read_header(bytes);
  const nca::ModelSpec spec = nca::io::deserialize(bytes);
  const nca::io::SizeReport report = nca::io::size_report(spec);
  std::cout << "format version: " << header.version << '\n'
            << "task:           " << nca::to_string(header.task) << '\n'
            << "channels:       " << header.channels << '\n'
            << "mlp_hidden:     " << header.mlp_hidden << '\n'
            << "fire_rate:      " << header.fire_rate << '\n';
  for (const auto& [name, size] : report.sections()) {
    std::cout << "  " << std::left << std::setw(8) << name << std::right << std::setw(10) << size << " B\n";
  }
  std::cout << "  total   " << std::setw(10) << report.total << " B (budget " << f.max_bytes << " B)\n";
  if (report.total > f.max_bytes) throw nca::SizeBudgetError(report.total, f.max_bytes);
  std::cout << "valid\n";
  return kExitOk;
}

struct BenchFlags {
  std::string model;
  std::string input;
  std::string output;
  std::string gnuplot;
  int size = 0;
  int kernel_reps = 15;
  ScheduleFlags schedule;
};

int cmd_bench(BenchFlags f) {
  const nca::ModelSpec spec = nca::io::load_model(f.model);
  f.schedule.early_stop = false;
  nca::bench::SchedulePair pair;
  pair.fixed = f.schedule.config();
  f.schedule.early_stop = true;
  pair.early = f.schedule.config();
  std::optional<int> size;
  if (f.size > 0) size = f.size;
  nca::bench::BenchReport report = nca::bench::bench_sequence(f.input, spec, pair, f.schedule.seed, size);
  if (f.kernel_reps > 0) report.kernel = nca::bench::bench_kernel(spec.perception_size(), spec.mlp_hidden, f.kernel_reps);
  nca::bench::write_table(std::cout, report);
  if (!f.output.empty()) {
    std::ostringstream out;
    nca::bench::write_jsonl(out, report);
    nca::write_file_atomic(f.output, out.str());
  }
  if (!f.gnuplot.empty()) {
    std::ostringstream out;
    nca::bench::write_gnuplot(out, report);
    nca::write_file_atomic(f.gnuplot, out.str());
  }
  return kExitOk;
}

struct SynthFlags {
  std::string output;
  int frames = 50;
  int size = 64;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthFlags& f) {
  const fs::path out(f.output);
  std::error_code ec;
  for (const char* sub : {"frames", "masks", "depth"}) fs::create_directories(out / sub, ec);
  if (ec) throw nca::IoError(out, "cannot create output directories: " + ec.message());
  nca::io::save_model(out / "seg_model.ncaw", nca::demo::default_contracting_model(nca::TaskTag::segmentation));
  nca::io::save_model(out / "depth_model.ncaw", nca::demo::default_contracting_model(nca::TaskTag::depth));
  const auto seq = nca::demo::synthetic_sequence(f.frames, f.size, f.size, f.seed);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << i << ".png";
    nca::save_rgb(out / "frames" / name.str(), seq[i].image);
    nca::GrayImage mask(seq[i].mask.height, seq[i].mask.width);
    for (std::size_t k = 0; k < mask.size(); ++k) mask.data[k] = seq[i].mask.data[k] ? 1.0f : 0.0f;
    nca::save_gray(out / "masks" / name.str(), mask);
    nca::save_gray(out / "depth" / name.str(), seq[i].depth, nca::BitDepth::sixteen);
  }
  std::cout << "synth: wrote 2 models and " << seq.size() << " frames to " << out.string() << '\n';
  return kExitOk;
}

struct BundleFlags {
  std::string input;
  std::string kernel = "vector";
  double tolerance = 1e-4;
};

int cmd_verify_bundle(const BundleFlags& f) {
  const nca::BundleCheck check = nca::verify_bundle(f.input, nca::parse_kernel_path(f.kernel));
  std::cout << "steps: expected " << check.steps_expected << ", engine " << check.steps_actual << '\n'
            << "output mean abs diff: " << check.output_mean_abs_diff << '\n'
            << "output max abs diff:  " << check.output_max_abs_diff << '\n'
            << "max hidden-delta diff: " << check.max_delta_diff << '\n';
  if (!check.passed(f.tolerance)) throw nca::NumericFault(check.steps_actual, "engine does not reproduce the bundle");
  std::cout << "bundle reproduced\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nca-edge: neural cellular automata inference toolkit"};
  app.require_subcommand(1);

  InferFlags seg_flags;
  auto* seg = app.add_subcommand("infer-seg", "segment an image; writes a binary mask PNG");
  add_infer_options(seg, seg_flags, true);

  InferFlags depth_flags;
  auto* depth = app.add_subcommand("infer-depth", "estimate relative depth; writes a 16-bit PNG");
  add_infer_options(depth, depth_flags, false);

  CurateFlags curate_flags;
  auto* curate = app.add_subcommand("curate", "split depth maps into accepted/rejected by gradient score");
  curate->add_option("--input", curate_flags.input, "directory of depth maps")->required();
  curate->add_option("--output", curate_flags.output, "output directory")->required();
  curate->add_option("--curation-threshold", curate_flags.threshold, "accept if score > threshold")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Dice and IoU of predicted masks against ground truth");
  eval->add_option("--pred,--input", eval_flags.pred, "directory of predicted masks")->required();
  eval->add_option("--gt", eval_flags.gt, "directory of ground-truth masks (same file names)")->required();
  eval->add_option("--output", eval_flags.output, "also write the table to this file");

  ValidateFlags validate_flags;
  auto* validate = app.add_subcommand("validate-model", "check a weight file and print its size report");
  validate->add_option("--model,model", validate_flags.model, "weight file")->required();
  validate->add_option("--max-bytes", validate_flags.max_bytes, "size budget")->capture_default_str();

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "fixed vs early-stopped schedules over a frame directory");
  bench->add_option("--model", bench_flags.model, "weight file")->required();
  bench->add_option("--input", bench_flags.input, "directory of frames")->required();
  bench->add_option("--output", bench_flags.output, "JSON-lines report");
  bench->add_option("--gnuplot", bench_flags.gnuplot, "whitespace-separated columns for plotting");
  bench->add_option("--size", bench_flags.size, "resize frames to N x N")->check(CLI::PositiveNumber);
  bench->add_option("--kernel-reps", bench_flags.kernel_reps, "matvec timing repetitions (0 skips)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  bench_flags.schedule.add_to(bench);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "write demo models and a synthetic frame sequence");
  synth->add_option("--output", synth_flags.output, "output directory")->required();
  synth->add_option("--frames", synth_flags.frames, "frame count")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_flags.size, "frame size")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_flags.seed, "PRNG seed")->capture_default_str();

  BundleFlags bundle_flags;
  auto* bundle = app.add_subcommand("verify-bundle", "re-run a reference bundle and compare outputs");
  bundle->add_option("--input", bundle_flags.input, "bundle directory")->required();
  bundle->add_option("--kernel", bundle_flags.kernel, "matvec path")->check(CLI::IsMember({"scalar", "vector"}));
  bundle->add_option("--tolerance", bundle_flags.tolerance, "mean abs tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    if (*seg) return cmd_infer_seg(seg_flags);
    if (*depth) return cmd_infer_depth(depth_flags);
    if (*curate) return cmd_curate(curate_flags);
    if (*eval) return cmd_eval(eval_flags);
    if (*validate) return cmd_validate(validate_flags);
    if (*bench) return cmd_bench(bench_flags);
    if (*synth) return cmd_synth(synth_flags);
    if (*bundle) return cmd_verify_bundle(bundle_flags);
  } catch (const nca::FormatError& e) {
    std::cerr << "error: format: " << one_line(e.what()) << '\n';
    return kExitFormat;
  } catch (const nca::Error& e) {
    std::cerr << "error: " << nca::to_string(e.error_class()) << ": " << one_line(e.what()) << '\n';
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << one_line(e.what()) << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
