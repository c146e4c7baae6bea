#include "nca/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <ostream>

#include "nca/error.hpp"
#include "nca/fs_util.hpp"
#include "nca/kernels.hpp"
#include "nca/rng.hpp"
#include "nca/state.hpp"

namespace nca::bench {

using clock = std::chrono::steady_clock;

SchedulePair SchedulePair::defaults(KernelPath kernel) {
  SchedulePair s;
  s.fixed.max_steps = 100;
  s.fixed.kernel = kernel;
  s.early.max_steps = 100;
  s.early.early_stop = EarlyStopParams{};
  s.early.kernel = kernel;
  return s;
}

namespace {

struct TimedRun {
  ChannelGrid grid;
  StepTrace trace;
  double seconds;
};

TimedRun timed_run(const RgbImage& image, const ModelSpec& spec, StepConfig config, std::uint64_t seed) {
  Rng noise(derive_seed(seed, kNoiseStream));
  ChannelGrid grid = seed_state(image, spec, noise);
  config.seed = derive_seed(seed, kMaskStream);
  Engine engine(spec, config.kernel);
  const auto t0 = clock::now();
  StepTrace trace = engine.run(grid, config);
  const auto t1 = clock::now();
  return {std::move(grid), std::move(trace), std::chrono::duration<double>(t1 - t0).count()};
}

}  // namespace

BenchReport bench_frames(const std::vector<RgbImage>& frames, const std::vector<std::string>& names,
                         const ModelSpec& spec, const SchedulePair& schedules, std::uint64_t base_seed) {
  if (frames.empty()) throw UsageError("bench needs at least one frame");
  if (names.size() != frames.size()) throw ConfigError("frame names do not match frame count");
  schedules.fixed.validate();
  schedules.early.validate();

  BenchReport report;
  double total_seconds = 0.0;
  double diff_sum = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::uint64_t seed = base_seed + i;
    const TimedRun fixed = timed_run(frames[i], spec, schedules.fixed, seed);
    const TimedRun early = timed_run(frames[i], spec, schedules.early, seed);

    FrameResult fr;
    fr.name = names[i];
    fr.steps_fixed = fixed.trace.total_steps;
    fr.steps_early = early.trace.total_steps;
    fr.seconds_fixed = fixed.seconds;
    fr.seconds_early = early.seconds;
    fr.stopped_early = early.trace.stopped_early();
    const int last = spec.channels - 1;
    double diff = 0.0;
    for (int y = 0; y < fixed.grid.height(); ++y) {
      for (int x = 0; x < fixed.grid.width(); ++x) {
        diff += std::fabs(static_cast<double>(fixed.grid.at(y, x, last)) - early.grid.at(y, x, last));
      }
    }
    fr.output_mean_abs_diff = diff / static_cast<double>(fixed.grid.cell_count());

    report.total_steps_fixed += fr.steps_fixed;
    report.total_steps_regularized += fr.steps_early;
    total_seconds += fr.seconds_fixed + fr.seconds_early;
    diff_sum += fr.output_mean_abs_diff;
    report.max_output_abs_diff = std::max(report.max_output_abs_diff, fr.output_mean_abs_diff);
    report.frames.push_back(std::move(fr));
  }
  report.reduction_factor =
      static_cast<double>(report.total_steps_fixed) / static_cast<double>(report.total_steps_regularized);
  report.mean_seconds_per_step =
      total_seconds / static_cast<double>(report.total_steps_fixed + report.total_steps_regularized);
  report.mean_output_abs_diff = diff_sum / static_cast<double>(report.frames.size());
  return report;
}

BenchReport bench_sequence(const std::filesystem::path& dir, const ModelSpec& spec, const SchedulePair& schedules,
                           std::uint64_t base_seed, std::optional<int> size) {
  const auto files = list_files(dir, {".png", ".pgm", ".ppm", ".pnm"});
  if (files.empty()) throw IoError(dir, "no frames found");
  std::vector<RgbImage> frames;
  std::vector<std::string> names;
  for (const auto& f : files) {
    RgbImage img = load_image(f);
    if (size) img = resize_bilinear(img, *size, *size);
    frames.push_back(std::move(img));
    names.push_back(f.filename().string());
  }
  return bench_frames(frames, names, spec, schedules, base_seed);
}

double kernel_relative_error(const std::vector<float>& matrix, int rows, int cols, const std::vector<float>& x,
                             const std::vector<float>& scalar_out, const std::vector<float>& vector_out) {
  double worst = 0.0;
  for (int j = 0; j < cols; ++j) {
    double scale = 0.0;
    for (int i = 0; i < rows; ++i) {
      scale += std::fabs(static_cast<double>(x[i]) * matrix[static_cast<std::size_t>(i) * cols + j]);
    }
    const double err = std::fabs(static_cast<double>(vector_out[j]) - scalar_out[j]);
    if (err == 0.0) continue;
    worst = std::max(worst, scale > 0.0 ? err / scale : INFINITY);
  }
  return worst;
}

KernelBench bench_kernel(int rows, int cols, int repetitions, std::uint64_t seed) {
  if (rows < 1 || cols < 1 || repetitions < 1) throw ConfigError("kernel bench needs positive dimensions");
  Rng rng(seed);
  std::vector<float> m(static_cast<std::size_t>(rows) * cols);
  std::vector<float> x(static_cast<std::size_t>(rows));
  for (float& v : m) v = 2.0f * rng.uniform() - 1.0f;
  for (float& v : x) v = 2.0f * rng.uniform() - 1.0f;
  std::vector<float> ys(static_cast<std::size_t>(cols));
  std::vector<float> yv(static_cast<std::size_t>(cols));
  const MatrixView view{m, rows, cols};

  matvec_scalar(view, x, ys);
  matvec_vector(view, x, yv);
  KernelBench kb;
  kb.rows = rows;
  kb.cols = cols;
  kb.repetitions = repetitions;
  kb.max_rel_error = kernel_relative_error(m, rows, cols, x, ys, yv);
  if (!(kb.max_rel_error <= 1e-5)) throw NumericFault(0, "scalar and vector matvec disagree");

  // Enough inner iterations per sample to sit well above timer resolution.
  const long long flops = 2LL * rows * cols;
  const int inner = static_cast<int>(std::clamp<long long>(4'000'000 / std::max(flops, 1LL), 1, 1'000'000));
  volatile float sink = 0.0f;
  auto time_path = [&](KernelPath path, std::vector<float>& y) {
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r) {
      const auto t0 = clock::now();
      for (int k = 0; k < inner; ++k) {
        matvec(path, view, x, y);
        x[static_cast<std::size_t>(k) % x.size()] += y[0] * 0.0f;  // keep the call observable
      }
      const auto t1 = clock::now();
      sink = sink + y[0];
      samples.push_back(std::chrono::duration<double>(t1 - t0).count() / inner);
    }
    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
    return samples[samples.size() / 2];
  };
  kb.scalar_seconds = time_path(KernelPath::scalar, ys);
  kb.vector_seconds = time_path(KernelPath::vector, yv);
  kb.speedup = kb.scalar_seconds / std::max(kb.vector_seconds, 1e-12);
  return kb;
}

void write_jsonl(std::ostream& out, const BenchReport& report) {
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    const auto& f = report.frames[i];
    nlohmann::ordered_json j;
    j["type"] = "frame";
    j["index"] = i;
    j["name"] = f.name;
    j["steps_fixed"] = f.steps_fixed;
    j["steps_early"] = f.steps_early;
    j["seconds_fixed"] = f.seconds_fixed;
    j["seconds_early"] = f.seconds_early;
    j["stopped_early"] = f.stopped_early;
    j["output_mean_abs_diff"] = f.output_mean_abs_diff;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json agg;
  agg["type"] = "aggregate";
  agg["frames"] = report.frames.size();
  agg["total_steps_fixed"] = report.total_steps_fixed;
  agg["total_steps_regularized"] = report.total_steps_regularized;
  agg["reduction_factor"] = report.reduction_factor;
  agg["mean_seconds_per_step"] = report.mean_seconds_per_step;
  agg["mean_output_abs_diff"] = report.mean_output_abs_diff;
  agg["max_output_abs_diff"] = report.max_output_abs_diff;
  if (report.kernel) {
    agg["kernel_rows"] = report.kernel->rows;
    agg["kernel_cols"] = report.kernel->cols;
    agg["kernel_scalar_seconds"] = report.kernel->scalar_seconds;
    agg["kernel_vector_seconds"] = report.kernel->vector_seconds;
    agg["kernel_speedup"] = report.kernel->speedup;
    agg["kernel_max_rel_error"] = report.kernel->max_rel_error;
  }
  out << agg.dump() << '\n';
}

void write_table(std::ostream& out, const BenchReport& report) {
  out << std::left << std::setw(28) << "frame" << std::right << std::setw(8) << "fixed" << std::setw(8) << "early"
      << std::setw(8) << "cut" << std::setw(12) << "ms fixed" << std::setw(12) << "ms early" << std::setw(12)
      << "out diff" << '\n';
  for (const auto& f : report.frames) {
    out << std::left << std::setw(28) << f.name.substr(0, 27) << std::right << std::setw(8) << f.steps_fixed
        << std::setw(8) << f.steps_early << std::setw(8) << (f.stopped_early ? "yes" : "no") << std::fixed
        << std::setprecision(2) << std::setw(12) << f.seconds_fixed * 1e3 << std::setw(12) << f.seconds_early * 1e3
        << std::setprecision(5) << std::setw(12) << f.output_mean_abs_diff << '\n';
    out.unsetf(std::ios::floatfield);
  }
  out << "total steps fixed:        " << report.total_steps_fixed << '\n'
      << "total steps regularized:  " << report.total_steps_regularized << '\n'
      << "reduction factor:         " << std::setprecision(4) << report.reduction_factor << '\n'
      << "mean time per step (ms):  " << report.mean_seconds_per_step * 1e3 << '\n'
      << "mean output diff:         " << report.mean_output_abs_diff << '\n';
  if (report.kernel) {
    const auto& k = *report.kernel;
    out << "kernel " << k.rows << "x" << k.cols << ": scalar " << k.scalar_seconds * 1e9 << " ns, vector "
        << k.vector_seconds * 1e9 << " ns, speedup " << k.speedup << '\n';
  }
}

void write_gnuplot(std::ostream& out, const BenchReport& report) {
  out << "# index steps_fixed steps_early seconds_fixed seconds_early output_diff\n";
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    const auto& f = report.frames[i];
    out << i << ' ' << f.steps_fixed << ' ' << f.steps_early << ' ' << f.seconds_fixed << ' ' << f.seconds_early
        << ' ' << f.output_mean_abs_diff << '\n';
  }
}

}  // namespace nca::bench
