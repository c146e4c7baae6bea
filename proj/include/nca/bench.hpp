#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nca/engine.hpp"
#include "nca/image.hpp"
#include "nca/model_spec.hpp"

namespace nca::bench {

/// The two schedules compared per frame. Their seeds are ignored; every frame i uses
/// base_seed + i for both, so the early-stopped run is a prefix of the fixed run.
struct SchedulePair {
  StepConfig fixed;
  StepConfig early;

  static SchedulePair defaults(KernelPath kernel = KernelPath::vector);
};

struct FrameResult {
  std::string name;
  int steps_fixed = 0;
  int steps_early = 0;
  double seconds_fixed = 0.0;
  double seconds_early = 0.0;
  bool stopped_early = false;
  double output_mean_abs_diff = 0.0;  // output channel, early vs fixed
};

struct KernelBench {
  int rows = 0;
  int cols = 0;
  int repetitions = 0;
  double scalar_seconds = 0.0;  // median per matvec
  double vector_seconds = 0.0;
  double speedup = 0.0;
  double max_rel_error = 0.0;
};

struct BenchReport {
  std::vector<FrameResult> frames;
  long long total_steps_fixed = 0;
  long long total_steps_regularized = 0;
  double reduction_factor = 0.0;
  double mean_seconds_per_step = 0.0;
  double mean_output_abs_diff = 0.0;
  double max_output_abs_diff = 0.0;
  std::optional<KernelBench> kernel;
};

BenchReport bench_frames(const std::vector<RgbImage>& frames, const std::vector<std::string>& names,
                         const ModelSpec& spec, const SchedulePair& schedules, std::uint64_t base_seed);

/// Loads every PNG/PGM/PPM in `dir` (lexicographic order), optionally resized to
/// size x size, and benchmarks them. Throws IoError for an empty directory.
BenchReport bench_sequence(const std::filesystem::path& dir, const ModelSpec& spec, const SchedulePair& schedules,
                           std::uint64_t base_seed, std::optional<int> size = std::nullopt);

/// |vector - scalar| relative to sum_i |x_i| |M_ij|, the natural scale of output j.
double kernel_relative_error(const std::vector<float>& matrix, int rows, int cols, const std::vector<float>& x,
                             const std::vector<float>& scalar_out, const std::vector<float>& vector_out);

/// Cross-checks both matvec paths, then times each as the median of `repetitions` runs.
/// Throws NumericFault if the paths disagree by more than 1e-5 relative.
KernelBench bench_kernel(int rows, int cols, int repetitions, std::uint64_t seed = 1);

void write_jsonl(std::ostream& out, const BenchReport& report);
void write_table(std::ostream& out, const BenchReport& report);
/// Columns: index steps_fixed steps_early seconds_fixed seconds_early output_diff.
void write_gnuplot(std::ostream& out, const BenchReport& report);

}  // namespace nca::bench
