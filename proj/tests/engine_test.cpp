#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nca/demo_models.hpp"
#include "nca/engine.hpp"
#include "nca/error.hpp"
#include "nca/pipeline.hpp"
#include "nca/state.hpp"
#include "support/reference_nca.hpp"

namespace nca {
namespace {

ChannelGrid random_grid(int h, int w, int c, std::uint64_t seed) {
  ChannelGrid g(h, w, c);
  Rng rng(seed);
  for (float& v : g.data()) v = rng.uniform();
  return g;
}

testing::NaiveGrid to_naive(const ChannelGrid& g) {
  return {g.height(), g.width(), g.channels(), std::vector<float>(g.data().begin(), g.data().end())};
}

// ---- Rng -------------------------------------------------------------------

TEST(RngTest, MatchesFrozenReferenceSequence) {
  // Values produced by an independent Python implementation of the documented algorithm.
  Rng r0(0);
  EXPECT_EQ(r0.next_u64(), 0x7bbcb40d550682d0ULL);
  EXPECT_EQ(r0.next_u64(), 0xde7fe413d00cc9fdULL);
  EXPECT_EQ(r0.next_u64(), 0xb3c638353c668c91ULL);
  Rng r42(42);
  EXPECT_FLOAT_EQ(r42.uniform(), 0.194105863571167f);
  EXPECT_FLOAT_EQ(r42.uniform(), 0.5626317858695984f);
  EXPECT_FLOAT_EQ(r42.uniform(), 0.48610609769821167f);
  EXPECT_EQ(derive_seed(7, kNoiseStream), 0x33977dffc4820e8dULL);
  EXPECT_EQ(derive_seed(7, kMaskStream), 0x5d5e06bd306b39e3ULL);
}

TEST(RngTest, UniformStaysInHalfOpenUnitInterval) {
  Rng rng(99);
  for (int i = 0; i < 100000; ++i) {
    const float u = rng.uniform();
    ASSERT_GE(u, 0.0f);
    ASSERT_LT(u, 1.0f);
  }
}

// ---- perceive --------------------------------------------------------------

TEST(PerceiveTest, IdentitySegmentIsTheCellState) {
  const auto grid = random_grid(6, 7, 8, 1);
  const auto spec = demo::make_random_model(TaskTag::segmentation, 8, 16, 2);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 7; ++x) {
      const auto p = perceive(grid, spec, x, y);
      ASSERT_EQ(p.size(), 24u);
      for (int c = 0; c < 8; ++c) EXPECT_EQ(p[c], grid.at(y, x, c));
    }
  }
}

TEST(PerceiveTest, AllOnesFilterOnConstantFieldGivesNineTimesValue) {
  ChannelGrid grid(5, 5, 5);
  std::fill(grid.data().begin(), grid.data().end(), 0.25f);
  auto spec = ModelSpec::zeros(TaskTag::segmentation, 5, 8);
  std::fill(spec.bank_a.begin(), spec.bank_a.end(), 1.0f);
  const auto p = perceive(grid, spec, 2, 2);
  for (int c = 0; c < 5; ++c) {
    EXPECT_FLOAT_EQ(p[5 + c], 9 * 0.25f);
    EXPECT_FLOAT_EQ(p[10 + c], 0.0f);
  }
  // Replicate padding keeps the constant field constant at the corner too.
  const auto corner = perceive(grid, spec, 0, 0);
  EXPECT_FLOAT_EQ(corner[5], 9 * 0.25f);
}

TEST(PerceiveTest, MatchesDirectConvolutionOracle) {
  const int H = 5, W = 5, C = 6;
  const auto grid = random_grid(H, W, C, 11);
  const auto spec = demo::make_random_model(TaskTag::segmentation, C, 8, 12, 1.0f);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const auto p = perceive(grid, spec, x, y);
      for (int c = 0; c < C; ++c) {
        double a = 0.0, b = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = std::clamp(y + dy, 0, H - 1), xx = std::clamp(x + dx, 0, W - 1);
            const int tap = (dy + 1) * 3 + (dx + 1);
            a += static_cast<double>(spec.bank_a[c * 9 + tap]) * grid.at(yy, xx, c);
            b += static_cast<double>(spec.bank_b[c * 9 + tap]) * grid.at(yy, xx, c);
          }
        }
        EXPECT_NEAR(p[C + c], a, 1e-6);
        EXPECT_NEAR(p[2 * C + c], b, 1e-6);
      }
    }
  }
}

TEST(PerceiveTest, RejectsOutOfBoundsAndChannelMismatch) {
  const auto grid = random_grid(4, 4, 6, 3);
  const auto spec6 = ModelSpec::zeros(TaskTag::segmentation, 6, 8);
  const auto spec7 = ModelSpec::zeros(TaskTag::segmentation, 7, 8);
  EXPECT_THROW(perceive(grid, spec6, 4, 0), ContractViolation);
  EXPECT_THROW(perceive(grid, spec6, 0, -1), ContractViolation);
  EXPECT_THROW(perceive(grid, spec7, 0, 0), ConfigError);
}

// ---- mlp_forward -----------------------------------------------------------

TEST(MlpTest, ZeroOutputLayerGivesZeroUpdate) {
  auto spec = demo::make_random_model(TaskTag::segmentation, 6, 16, 4);
  std::fill(spec.mlp_w2.begin(), spec.mlp_w2.end(), 0.0f);
  std::vector<float> p(18, 0.7f);
  for (float v : mlp_forward(p, spec)) EXPECT_EQ(v, 0.0f);
}

TEST(MlpTest, ZeroFirstLayerAndBiasGivesZeroUpdate) {
  auto spec = demo::make_random_model(TaskTag::segmentation, 6, 16, 5);
  std::fill(spec.mlp_w1.begin(), spec.mlp_w1.end(), 0.0f);
  std::fill(spec.mlp_b1.begin(), spec.mlp_b1.end(), 0.0f);
  std::vector<float> p(18, -3.0f);
  for (float v : mlp_forward(p, spec)) EXPECT_EQ(v, 0.0f);
}

TEST(MlpTest, MatchesDotProductOracle) {
  const int Hm = 8;
  const auto spec = demo::make_random_model(TaskTag::segmentation, 5, Hm, 6, 1.0f, 1.0f);
  // Five channels is the minimum model; use the first 3*5 inputs.
  std::vector<float> p(15);
  Rng rng(7);
  for (float& v : p) v = 2.0f * rng.uniform() - 1.0f;
  const auto out = mlp_forward(p, spec, KernelPath::scalar);
  const auto out_v = mlp_forward(p, spec, KernelPath::vector);
  for (int c = 0; c < 5; ++c) {
    double s = 0.0;
    for (int j = 0; j < Hm; ++j) {
      double h = spec.mlp_b1[j];
      for (int i = 0; i < 15; ++i) h += static_cast<double>(p[i]) * spec.mlp_w1[i * Hm + j];
      s += std::max(h, 0.0) * spec.mlp_w2[j * 5 + c];
    }
    EXPECT_NEAR(out[c], s, 1e-6);
    EXPECT_NEAR(out_v[c], s, 1e-6);
  }
}

TEST(MlpTest, DimensionMismatchIsConfigError) {
  const auto spec = ModelSpec::zeros(TaskTag::segmentation, 6, 8);
  std::vector<float> p(17);
  EXPECT_THROW(mlp_forward(p, spec), ConfigError);
}

// ---- stochastic_mask -------------------------------------------------------

TEST(StochasticMaskTest, FireRateOneFiresEveryCell) {
  Rng rng(5);
  const auto mask = stochastic_mask(rng, 5000, 1.0f);
  EXPECT_TRUE(std::all_of(mask.begin(), mask.end(), [](auto v) { return v == 1; }));
}

TEST(StochasticMaskTest, HalfRateFractionIsConcentrated) {
  // Binomial(10000, 0.5) has sd 50 cells, so [4700, 5300] is a 6-sigma band.
  Rng rng(12345);
  const auto mask = stochastic_mask(rng, 10000, 0.5f);
  const double frac = std::count(mask.begin(), mask.end(), 1) / 10000.0;
  EXPECT_GE(frac, 0.47);
  EXPECT_LE(frac, 0.53);
}

TEST(StochasticMaskTest, FireFractionWithinOnePercentOverManyDraws) {
  for (float rate : {0.2f, 0.5f, 0.8f}) {
    Rng rng(static_cast<std::uint64_t>(rate * 1000));
    const auto mask = stochastic_mask(rng, 100000, rate);
    const double frac = std::count(mask.begin(), mask.end(), 1) / 100000.0;
    EXPECT_NEAR(frac, rate, 0.01) << "rate " << rate;
  }
}

TEST(StochasticMaskTest, SameSeedSameMask) {
  Rng a(77), b(77);
  EXPECT_EQ(stochastic_mask(a, 4096, 0.5f), stochastic_mask(b, 4096, 0.5f));
}

TEST(StochasticMaskTest, RejectsInvalidFireRate) {
  Rng rng(1);
  EXPECT_THROW(stochastic_mask(rng, 10, 0.0f), ConfigError);
  EXPECT_THROW(stochastic_mask(rng, 10, 1.5f), ConfigError);
}

// ---- nca_step --------------------------------------------------------------

TEST(NcaStepTest, ZeroOutputLayerLeavesGridUnchanged) {
  auto spec = demo::make_random_model(TaskTag::segmentation, 8, 16, 9);
  std::fill(spec.mlp_w2.begin(), spec.mlp_w2.end(), 0.0f);
  auto grid = random_grid(8, 8, 8, 10);
  const std::vector<float> before(grid.data().begin(), grid.data().end());
  Rng rng(1);
  const StepResult r = nca_step(grid, spec, rng);
  EXPECT_EQ(r.hidden_delta, 0.0f);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), grid.data().begin()));
}

TEST(NcaStepTest, RgbChannelsNeverChange) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = demo::make_random_model(TaskTag::depth, 9, 32, seed, 0.5f, 1.0f, 0.8f);
    auto grid = random_grid(7, 9, 9, seed + 100);
    std::vector<float> rgb;
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x)
        for (int c = 0; c < 3; ++c) rgb.push_back(grid.at(y, x, c));
    StepConfig cfg;
    cfg.max_steps = 10;
    cfg.seed = seed;
    run(grid, spec, cfg);
    std::size_t k = 0;
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x)
        for (int c = 0; c < 3; ++c) ASSERT_EQ(grid.at(y, x, c), rgb[k++]);
  }
}

TEST(NcaStepTest, MatchesNaiveReferenceAcrossShapes) {
  int case_id = 0;
  for (int channels : {5, 8, 18}) {
    for (KernelPath kernel : {KernelPath::scalar, KernelPath::vector}) {
      ++case_id;
      const int h = 3 + case_id % 9, w = 4 + (case_id * 5) % 11;
      const auto spec = demo::make_random_model(TaskTag::segmentation, channels, 24 + case_id, case_id);
      auto grid = random_grid(h, w, channels, 1000 + case_id);
      auto naive = to_naive(grid);
      Rng engine_rng(case_id), naive_rng(case_id);
      Engine engine(spec, kernel);
      for (int step = 0; step < 12; ++step) {
        const float delta = engine.step(grid, engine_rng).hidden_delta;
        const float naive_delta = static_cast<float>(testing::naive_step(naive, spec, naive_rng));
        ASSERT_NEAR(delta, naive_delta, 1e-6);
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < naive.data.size(); ++i) {
        worst = std::max(worst, std::fabs(static_cast<double>(grid.data()[i]) - naive.data[i]));
      }
      EXPECT_LE(worst, 1e-6) << "channels " << channels << " kernel " << to_string(kernel);
    }
  }
}

TEST(NcaStepTest, HiddenDeltaIsMeanAbsoluteHiddenChange) {
  const auto spec = demo::make_random_model(TaskTag::segmentation, 7, 16, 21, 0.5f, 1.0f);
  auto grid = random_grid(6, 6, 7, 22);
  const std::vector<float> before(grid.data().begin(), grid.data().end());
  Rng rng(3);
  const float delta = nca_step(grid, spec, rng).hidden_delta;
  double sum = 0.0;
  for (std::size_t cell = 0; cell < 36; ++cell)
    for (int c = 3; c < 6; ++c) sum += std::fabs(grid.data()[cell * 7 + c] - before[cell * 7 + c]);
  EXPECT_NEAR(delta, sum / (36 * 3), 1e-7);
  EXPECT_GT(delta, 0.0f);
}

TEST(NcaStepTest, NonFiniteUpdateRaisesNumericFaultAndKeepsGrid) {
  auto spec = ModelSpec::zeros(TaskTag::segmentation, 5, 4, 1.0f);
  spec.mlp_b1[0] = 3.0e38f;
  spec.mlp_w2[0 * 5 + 4] = 10.0f;  // overflows to inf in the output channel
  auto grid = random_grid(3, 3, 5, 1);
  const std::vector<float> before(grid.data().begin(), grid.data().end());
  Rng rng(0);
  Engine engine(spec);
  try {
    engine.step(grid, rng, 7);
    FAIL() << "expected NumericFault";
  } catch (const NumericFault& e) {
    EXPECT_EQ(e.step(), 7);
    EXPECT_NE(std::string(e.what()).find("step 7"), std::string::npos);
  }
  EXPECT_TRUE(std::equal(before.begin(), before.end(), grid.data().begin()));
}

TEST(NcaStepTest, ChannelMismatchIsConfigError) {
  const auto spec = ModelSpec::zeros(TaskTag::segmentation, 6, 8);
  ChannelGrid grid(4, 4, 7);
  Rng rng(0);
  EXPECT_THROW(nca_step(grid, spec, rng), ConfigError);
}

// ---- buffers ---------------------------------------------------------------

TEST(BufferDisciplineTest, InferenceUsesAtMostTwoStateBuffers) {
  const auto spec = demo::default_contracting_model(TaskTag::segmentation);
  const auto frames = demo::synthetic_sequence(1, 16, 16, 3);
  StepConfig cfg;
  cfg.max_steps = 25;
  cfg.early_stop = EarlyStopParams{};

  StateBuffer::reset_allocations();
  auto result = infer_image(frames[0].image, spec, cfg);
  EXPECT_LE(StateBuffer::allocations(), 2u);

  StateBuffer::reset_allocations();
  ChannelGrid grid(16, 16, spec.channels);
  Engine engine(spec);
  engine.run(grid, cfg);
  engine.run(grid, cfg);
  EXPECT_EQ(StateBuffer::allocations(), 2u);
}

// ---- early stopping --------------------------------------------------------

int stop_step(const std::vector<float>& deltas, const EarlyStopParams& p) {
  EarlyStopState s{0, p.cooldown_init};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto d = early_stop_check(s, deltas[i], p);
    s = d.state;
    if (d.stop) return static_cast<int>(i) + 1;
  }
  return -1;
}

TEST(EarlyStopTest, AllZeroDeltasStopAtFifteen) {
  const std::vector<float> zeros(30, 0.0f);
  EXPECT_EQ(testing::simulate_early_stop(zeros, 10, 0.1f, 5), 15);
  EXPECT_EQ(stop_step(zeros, EarlyStopParams{}), 15);
}

TEST(EarlyStopTest, OscillatingDeltasNeverStop) {
  std::vector<float> deltas;
  for (int i = 0; i < 1000; ++i) deltas.push_back(i % 2 ? 0.5f : 0.05f);
  EXPECT_EQ(testing::simulate_early_stop(deltas, 10, 0.1f, 5), -1);
  EXPECT_EQ(stop_step(deltas, EarlyStopParams{}), -1);
}

TEST(EarlyStopTest, CounterHeldBeforeMinSteps) {
  EarlyStopParams p;
  EarlyStopState s{0, p.cooldown_init};
  for (int i = 0; i < 10; ++i) {
    const auto d = early_stop_check(s, 0.0f, p);
    EXPECT_FALSE(d.stop);
    EXPECT_EQ(d.state.cooldown, 5);
    s = d.state;
  }
  EXPECT_EQ(s.steps_done, 10);
  const auto d = early_stop_check(s, 0.0f, p);
  EXPECT_EQ(d.state.cooldown, 4);
}

TEST(EarlyStopTest, ThresholdIsStrict) {
  const std::vector<float> at_threshold(100, 0.1f);
  EXPECT_EQ(stop_step(at_threshold, EarlyStopParams{}), -1);
}

TEST(EarlyStopTest, MatchesCounterSimulationOnRandomSequences) {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    EarlyStopParams p{1 + static_cast<int>(rng.next_u64() % 12), 0.1f, 1 + static_cast<int>(rng.next_u64() % 6)};
    std::vector<float> deltas(60);
    for (float& d : deltas) d = rng.uniform() < 0.8f ? 0.05f : 0.3f;
    EXPECT_EQ(stop_step(deltas, p), testing::simulate_early_stop(deltas, p.min_steps, 0.1f, p.cooldown_init));
  }
}

TEST(RunTest, WithoutEarlyStopRunsExactlyMaxSteps) {
  const auto spec = demo::default_contracting_model(TaskTag::segmentation);
  ChannelGrid grid(8, 8, spec.channels);
  StepConfig cfg;
  cfg.max_steps = 37;
  const auto trace = run(grid, spec, cfg);
  EXPECT_EQ(trace.total_steps, 37);
  EXPECT_FALSE(trace.stopped_early());
  for (int i = 0; i < 37; ++i) EXPECT_EQ(trace.steps[i].step, i + 1);
}

TEST(RunTest, QuiescentModelStopsAtStepFifteen) {
  auto spec = demo::make_random_model(TaskTag::segmentation, 18, 128, 8);
  std::fill(spec.mlp_w2.begin(), spec.mlp_w2.end(), 0.0f);
  auto grid = random_grid(10, 10, 18, 4);
  StepConfig cfg;
  cfg.early_stop = EarlyStopParams{};
  const auto trace = run(grid, spec, cfg);
  EXPECT_EQ(trace.total_steps, 15);
  EXPECT_TRUE(trace.stopped_early());
  EXPECT_GE(trace.total_steps, cfg.early_stop->min_steps + cfg.early_stop->cooldown_init);
  for (const auto& s : trace.steps) EXPECT_EQ(s.hidden_delta, 0.0f);
}

TEST(RunTest, HighThresholdNeverCrossedRunsToMax) {
  const auto spec = demo::make_random_model(TaskTag::segmentation, 6, 16, 31, 0.5f, 1.0f);
  auto grid = random_grid(6, 6, 6, 32);
  StepConfig cfg;
  cfg.max_steps = 40;
  cfg.early_stop = EarlyStopParams{10, 1e-30f, 5};
  const auto trace = run(grid, spec, cfg);
  EXPECT_EQ(trace.total_steps, 40);
  EXPECT_FALSE(trace.stopped_early());
}

TEST(RunTest, RepeatedRunsAreBitIdentical) {
  const auto spec = demo::make_random_model(TaskTag::depth, 10, 32, 41);
  const auto start = random_grid(12, 9, 10, 42);
  StepConfig cfg;
  cfg.max_steps = 30;
  cfg.seed = 43;
  cfg.early_stop = EarlyStopParams{};
  auto a = start;
  auto b = start;
  const auto ta = run(a, spec, cfg);
  const auto tb = run(b, spec, cfg);
  EXPECT_EQ(0, std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)));
  ASSERT_EQ(ta.total_steps, tb.total_steps);
  for (int i = 0; i < ta.total_steps; ++i) {
    EXPECT_EQ(ta.steps[i].hidden_delta, tb.steps[i].hidden_delta);
    EXPECT_EQ(ta.steps[i].fired_cells, tb.steps[i].fired_cells);
    EXPECT_EQ(ta.steps[i].cooldown, tb.steps[i].cooldown);
  }
}

TEST(RunTest, TraceInvariantsHold) {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = demo::make_random_model(TaskTag::segmentation, 6, 16, trial, 0.3f, 0.5f);
    auto grid = random_grid(5, 5, 6, trial + 500);
    StepConfig cfg;
    cfg.max_steps = 1 + static_cast<int>(rng.next_u64() % 40);
    cfg.early_stop = EarlyStopParams{1 + static_cast<int>(rng.next_u64() % 10), 0.02f, 1 + static_cast<int>(rng.next_u64() % 5)};
    const auto trace = run(grid, spec, cfg);
    EXPECT_LE(trace.total_steps, cfg.max_steps);
    for (const auto& s : trace.steps) EXPECT_GE(s.hidden_delta, 0.0f);
    if (trace.stopped_early()) {
      EXPECT_GE(trace.total_steps, cfg.early_stop->min_steps + cfg.early_stop->cooldown_init);
    }
    EXPECT_TRUE(grid.all_finite());
  }
}

TEST(RunTest, InvalidConfigIsRejected) {
  const auto spec = ModelSpec::zeros(TaskTag::segmentation, 6, 8);
  ChannelGrid grid(2, 2, 6);
  StepConfig cfg;
  cfg.max_steps = 0;
  EXPECT_THROW(run(grid, spec, cfg), ConfigError);
  cfg.max_steps = 5;
  cfg.early_stop = EarlyStopParams{0, 0.1f, 5};
  EXPECT_THROW(run(grid, spec, cfg), ConfigError);
  cfg.early_stop = EarlyStopParams{10, 0.0f, 5};
  EXPECT_THROW(run(grid, spec, cfg), ConfigError);
  cfg.early_stop = EarlyStopParams{10, 0.1f, 0};
  EXPECT_THROW(run(grid, spec, cfg), ConfigError);
}

TEST(ModelSpecTest, ValidateRejectsBadFireRateAndNonFiniteWeights) {
  auto spec = ModelSpec::zeros(TaskTag::segmentation, 6, 8);
  EXPECT_NO_THROW(spec.validate());
  spec.fire_rate = 0.0f;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.fire_rate = 0.5f;
  spec.mlp_w1[3] = NAN;
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(ModelSpec::zeros(TaskTag::segmentation, 4, 8), ConfigError);
  EXPECT_EQ(default_spec(TaskTag::segmentation).channels, 18);
  EXPECT_EQ(default_spec(TaskTag::depth).channels, 22);
}

}  // namespace
}  // namespace nca
