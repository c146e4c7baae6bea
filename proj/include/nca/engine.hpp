#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nca/grid.hpp"
#include "nca/kernels.hpp"
#include "nca/model_spec.hpp"
#include "nca/rng.hpp"

namespace nca {

struct EarlyStopParams {
  int min_steps = 10;
  float delta_threshold = 0.1f;
  int cooldown_init = 5;

  void validate() const;
};

struct StepConfig {
  int max_steps = 100;
  std::uint64_t seed = 0;
  std::optional<EarlyStopParams> early_stop;
  KernelPath kernel = KernelPath::vector;

  void validate() const;
};

struct EarlyStopState {
  int steps_done = 0;  // steps completed before the one being checked
  int cooldown = 5;
};

struct EarlyStopDecision {
  bool stop = false;
  EarlyStopState state;
};

/// Advances the early-stop counter by one step whose hidden-channel change was
/// `hidden_delta`. Before `min_steps` steps have completed the cooldown is held at its
/// initial value. After that a delta below the threshold decrements the cooldown and
/// stops when it reaches zero; any other delta resets it.
EarlyStopDecision early_stop_check(EarlyStopState state, float hidden_delta, const EarlyStopParams& params);

struct StepRecord {
  int step = 0;  // 1-based
  float hidden_delta = 0.0f;
  int fired_cells = 0;
  int cooldown = 0;
  bool stopped_early = false;
  double seconds = 0.0;
};

struct StepTrace {
  std::vector<StepRecord> steps;
  int total_steps = 0;

  bool stopped_early() const noexcept { return !steps.empty() && steps.back().stopped_early; }
};

struct StepResult {
  float hidden_delta = 0.0f;
  int fired_cells = 0;
};

/// Writes the 3C perception vector of cell (x, y) into `out`: the cell's own channels,
/// then the bank A and bank B depthwise 3x3 responses with clamp-to-edge borders.
void perceive_into(const ChannelGrid& grid, const ModelSpec& spec, int x, int y, std::span<float> out);
std::vector<float> perceive(const ChannelGrid& grid, const ModelSpec& spec, int x, int y);

/// update = w2^T relu(w1^T perception + b1). `hidden` is scratch of size mlp_hidden.
void mlp_forward_into(std::span<const float> perception, const ModelSpec& spec, KernelPath kernel,
                      std::span<float> hidden, std::span<float> update);
std::vector<float> mlp_forward(std::span<const float> perception, const ModelSpec& spec,
                               KernelPath kernel = KernelPath::vector);

/// A cell fires iff its uniform draw is below `fire_rate`. One draw per cell, row-major.
inline bool draw_fire(Rng& rng, float fire_rate) noexcept { return rng.uniform() < fire_rate; }

std::vector<std::uint8_t> stochastic_mask(Rng& rng, std::size_t cell_count, float fire_rate);

/// Two-buffer NCA stepper. Owns the update buffer; the grid is the other buffer.
///
/// The spec must outlive the engine and must not be modified while in use. Distinct
/// engines may run concurrently on distinct grids.
class Engine {
 public:
  explicit Engine(const ModelSpec& spec, KernelPath kernel = KernelPath::vector);

  /// One step in place. Cells draw their fire decision first; fired cells compute their
  /// update into the update buffer, which is added to channels 3..C-1 after the sweep.
  /// Returns the mean absolute change over the hidden channels 3..C-2.
  /// Throws NumericFault (grid untouched) if the step would produce non-finite values.
  StepResult step(ChannelGrid& grid, Rng& rng, int step_index = 1);

  /// Runs up to config.max_steps steps in place, with optional early stopping.
  StepTrace run(ChannelGrid& grid, const StepConfig& config);

  const ModelSpec& spec() const noexcept { return *spec_; }
  KernelPath kernel() const noexcept { return kernel_; }
  void set_kernel(KernelPath kernel) noexcept { kernel_ = kernel; }

 private:
  void check_grid(const ChannelGrid& grid) const;

  const ModelSpec* spec_;
  KernelPath kernel_;
  StateBuffer update_;
  std::vector<float> perception_;
  std::vector<float> hidden_;
};

/// Single step with a temporary engine.
StepResult nca_step(ChannelGrid& grid, const ModelSpec& spec, Rng& rng, KernelPath kernel = KernelPath::vector);

/// Full inference in place; kernel path is taken from the config.
StepTrace run(ChannelGrid& grid, const ModelSpec& spec, const StepConfig& config);

}  // namespace nca
