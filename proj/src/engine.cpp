#include "nca/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "nca/error.hpp"

namespace nca {

void EarlyStopParams::validate() const {
  if (min_steps < 1) throw ConfigError("min_steps must be >= 1");
  if (!(delta_threshold > 0.0f) || !std::isfinite(delta_threshold)) {
    throw ConfigError("delta_threshold must be a positive finite number");
  }
  if (cooldown_init < 1) throw ConfigError("cooldown must be >= 1");
}

void StepConfig::validate() const {
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (early_stop) early_stop->validate();
}

EarlyStopDecision early_stop_check(EarlyStopState state, float hidden_delta, const EarlyStopParams& params) {
  EarlyStopDecision d;
  d.state.steps_done = state.steps_done + 1;
  if (state.steps_done < params.min_steps) {
    d.state.cooldown = params.cooldown_init;
    return d;
  }
  if (hidden_delta < params.delta_threshold) {
    d.state.cooldown = state.cooldown - 1;
    d.stop = d.state.cooldown <= 0;
  } else {
    d.state.cooldown = params.cooldown_init;
  }
  return d;
}

void perceive_into(const ChannelGrid& grid, const ModelSpec& spec, int x, int y, std::span<float> out) {
  if (spec.channels != grid.channels()) {
    throw ConfigError("model has " + std::to_string(spec.channels) + " channels, grid has " +
                      std::to_string(grid.channels()));
  }
  if (x < 0 || y < 0 || x >= grid.width() || y >= grid.height()) {
    throw ContractViolation("cell (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                            std::to_string(grid.width()) + "x" + std::to_string(grid.height()) + " grid");
  }
  const int channels = grid.channels();
  if (out.size() != static_cast<std::size_t>(3 * channels)) {
    throw ConfigError("perception buffer must hold 3C values");
  }

  const int ys[3] = {std::max(y - 1, 0), y, std::min(y + 1, grid.height() - 1)};
  const int xs[3] = {std::max(x - 1, 0), x, std::min(x + 1, grid.width() - 1)};
  const float* taps[9];
  for (int r = 0; r < 3; ++r) {
    for (int s = 0; s < 3; ++s) taps[r * 3 + s] = grid.cell(ys[r], xs[s]).data();
  }

  const float* bank_a = spec.bank_a.data();
  const float* bank_b = spec.bank_b.data();
  float* own = out.data();
  float* resp_a = own + channels;
  float* resp_b = resp_a + channels;
  for (int c = 0; c < channels; ++c) {
    const float* fa = bank_a + c * kFilterTaps;
    const float* fb = bank_b + c * kFilterTaps;
    float sa = 0.0f;
    float sb = 0.0f;
    for (int k = 0; k < kFilterTaps; ++k) {
      const float v = taps[k][c];
      sa += fa[k] * v;
      sb += fb[k] * v;
    }
    own[c] = taps[4][c];
    resp_a[c] = sa;
    resp_b[c] = sb;
  }
}

std::vector<float> perceive(const ChannelGrid& grid, const ModelSpec& spec, int x, int y) {
  std::vector<float> out(static_cast<std::size_t>(3 * grid.channels()));
  perceive_into(grid, spec, x, y, out);
  return out;
}

void mlp_forward_into(std::span<const float> perception, const ModelSpec& spec, KernelPath kernel,
                      std::span<float> hidden, std::span<float> update) {
  if (perception.size() != static_cast<std::size_t>(spec.perception_size())) {
    throw ConfigError("perception has " + std::to_string(perception.size()) + " values, model expects " +
                      std::to_string(spec.perception_size()));
  }
  if (hidden.size() != static_cast<std::size_t>(spec.mlp_hidden) ||
      update.size() != static_cast<std::size_t>(spec.channels)) {
    throw ConfigError("mlp scratch buffers do not match model dimensions");
  }
  matvec(kernel, MatrixView{spec.mlp_w1, spec.perception_size(), spec.mlp_hidden}, perception, hidden, spec.mlp_b1);
  for (int j = 0; j < spec.mlp_hidden; ++j) hidden[j] = std::max(hidden[j], 0.0f);
  matvec(kernel, MatrixView{spec.mlp_w2, spec.mlp_hidden, spec.channels}, hidden, update);
}

std::vector<float> mlp_forward(std::span<const float> perception, const ModelSpec& spec, KernelPath kernel) {
  std::vector<float> hidden(static_cast<std::size_t>(std::max(spec.mlp_hidden, 0)));
  std::vector<float> update(static_cast<std::size_t>(std::max(spec.channels, 0)));
  mlp_forward_into(perception, spec, kernel, hidden, update);
  return update;
}

std::vector<std::uint8_t> stochastic_mask(Rng& rng, std::size_t cell_count, float fire_rate) {
  if (!(fire_rate > 0.0f && fire_rate <= 1.0f)) throw ConfigError("fire_rate must be in (0, 1]");
  std::vector<std::uint8_t> mask(cell_count);
  for (auto& m : mask) m = draw_fire(rng, fire_rate) ? 1 : 0;
  return mask;
}

Engine::Engine(const ModelSpec& spec, KernelPath kernel) : spec_(&spec), kernel_(kernel) {
  spec.validate();
  perception_.resize(static_cast<std::size_t>(spec.perception_size()));
  hidden_.resize(static_cast<std::size_t>(spec.mlp_hidden));
}

void Engine::check_grid(const ChannelGrid& grid) const {
  if (grid.channels() != spec_->channels) {
    throw ConfigError("model has " + std::to_string(spec_->channels) + " channels, grid has " +
                      std::to_string(grid.channels()));
  }
}

StepResult Engine::step(ChannelGrid& grid, Rng& rng, int step_index) {
  check_grid(grid);
  if (update_.size() != grid.size()) update_ = StateBuffer(grid.size());
  std::fill(update_.data(), update_.data() + update_.size(), 0.0f);

  const int channels = grid.channels();
  const ModelSpec& spec = *spec_;
  StepResult result;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!draw_fire(rng, spec.fire_rate)) continue;
      ++result.fired_cells;
      perceive_into(grid, spec, x, y, perception_);
      std::span<float> out(update_.data() + grid.index(y, x, 0), static_cast<std::size_t>(channels));
      mlp_forward_into(perception_, spec, kernel_, hidden_, out);
    }
  }

  // Validate the whole commit before touching the grid.
  float* state = grid.data().data();
  const float* update = update_.data();
  const std::size_t cells = grid.cell_count();
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t base = cell * channels;
    for (int c = kRgbChannels; c < channels; ++c) {
      if (!std::isfinite(state[base + c] + update[base + c])) {
        throw NumericFault(step_index, "non-finite value in channel " + std::to_string(c) + " of cell " +
                                           std::to_string(cell));
      }
    }
  }

  double hidden_change = 0.0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t base = cell * channels;
    for (int c = kRgbChannels; c < channels - 1; ++c) {
      const float before = state[base + c];
      state[base + c] = before + update[base + c];
      hidden_change += std::fabs(static_cast<double>(state[base + c]) - before);
    }
    state[base + channels - 1] += update[base + channels - 1];
  }
  const double entries = static_cast<double>(cells) * (channels - kRgbChannels - 1);
  result.hidden_delta = static_cast<float>(hidden_change / entries);
  return result;
}

StepTrace Engine::run(ChannelGrid& grid, const StepConfig& config) {
  config.validate();
  check_grid(grid);
  Rng rng(config.seed);
  StepTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(config.max_steps));
  EarlyStopState es{0, config.early_stop ? config.early_stop->cooldown_init : 0};
  using clock = std::chrono::steady_clock;
  for (int step = 1; step <= config.max_steps; ++step) {
    const auto t0 = clock::now();
    const StepResult r = this->step(grid, rng, step);
    const auto t1 = clock::now();
    StepRecord rec;
    rec.step = step;
    rec.hidden_delta = r.hidden_delta;
    rec.fired_cells = r.fired_cells;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    bool stop = false;
    if (config.early_stop) {
      const EarlyStopDecision d = early_stop_check(es, r.hidden_delta, *config.early_stop);
      es = d.state;
      stop = d.stop;
    }
    rec.cooldown = es.cooldown;
    rec.stopped_early = stop;
    trace.steps.push_back(rec);
    if (stop) break;
  }
  trace.total_steps = static_cast<int>(trace.steps.size());
  return trace;
}

StepResult nca_step(ChannelGrid& grid, const ModelSpec& spec, Rng& rng, KernelPath kernel) {
  Engine engine(spec, kernel);
  return engine.step(grid, rng);
}

StepTrace run(ChannelGrid& grid, const ModelSpec& spec, const StepConfig& config) {
  Engine engine(spec, config.kernel);
  return engine.run(grid, config);
}

}  // namespace nca
