#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "nca/demo_models.hpp"
#include "nca/image.hpp"
#include "nca/model_io.hpp"
#include "support/cli.hpp"

namespace nca {
namespace {

namespace fs = std::filesystem;
using testing::quote;
using testing::run_cli;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir("cli");
    golden_ = testing::data_dir() / "golden_seg.ncaw";
    frame_ = dir_ / "frame.png";
    save_rgb(frame_, demo::synthetic_sequence(1, 24, 24, 1)[0].image);
  }

  fs::path dir_;
  fs::path golden_;
  fs::path frame_;
};

TEST_F(CliTest, InferSegWritesAllOutputs) {
  const auto r = run_cli("infer-seg --model " + quote(golden_) + " --input " + quote(frame_) + " --output " +
                         quote(dir_ / "mask.png") + " --soft " + quote(dir_ / "soft.png") + " --rle " +
                         quote(dir_ / "mask.rle") + " --trace " + quote(dir_ / "trace.jsonl") + " --early-stop");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto mask = load_gray(dir_ / "mask.png");
  EXPECT_EQ(mask.height, 24);
  for (float v : mask.data) EXPECT_TRUE(v == 0.0f || v == 1.0f);
  EXPECT_TRUE(fs::exists(dir_ / "soft.png"));
  const auto rle = from_rle(testing::slurp(dir_ / "mask.rle"));
  EXPECT_EQ(rle.height, 24);
  EXPECT_FALSE(testing::slurp(dir_ / "trace.jsonl").empty());
}

TEST_F(CliTest, SameSeedGivesByteIdenticalMasks) {
  for (int run = 0; run < 2; ++run) {
    const auto r = run_cli("infer-seg --model " + quote(golden_) + " --input " + quote(frame_) + " --seed 5 --output " +
                           quote(dir_ / ("m" + std::to_string(run) + ".png")) + " --soft " +
                           quote(dir_ / ("s" + std::to_string(run) + ".png")));
    ASSERT_EQ(r.exit_code, 0) << r.out;
  }
  EXPECT_EQ(testing::slurp(dir_ / "m0.png"), testing::slurp(dir_ / "m1.png"));
  EXPECT_EQ(testing::slurp(dir_ / "s0.png"), testing::slurp(dir_ / "s1.png"));
}

TEST_F(CliTest, CorruptModelIsFormatExit) {
  auto bytes = io::read_file(golden_);
  bytes[100] ^= 0xff;
  std::ofstream(dir_ / "bad.ncaw", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto r = run_cli("infer-seg --model " + quote(dir_ / "bad.ncaw") + " --input " + quote(frame_) + " --output " +
                         quote(dir_ / "m.png"));
  EXPECT_EQ(r.exit_code, 3) << r.out;
  EXPECT_NE(r.out.find("error: format"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "m.png"));
}

TEST_F(CliTest, MissingInputIsIoExit) {
  const auto r = run_cli("infer-seg --model " + quote(golden_) + " --input " + quote(dir_ / "none.png") +
                         " --output " + quote(dir_ / "m.png"));
  EXPECT_EQ(r.exit_code, 5) << r.out;
}

TEST_F(CliTest, BadFlagsAreUsageExit) {
  EXPECT_EQ(run_cli("infer-seg --model x").exit_code, 2);
  EXPECT_EQ(run_cli("no-such-command").exit_code, 2);
  EXPECT_EQ(run_cli("infer-seg --model " + quote(golden_) + " --input " + quote(frame_) + " --output " +
                    quote(dir_ / "m.png") + " --kernel avx")
                .exit_code,
            2);
}

TEST_F(CliTest, InferDepthWritesSixteenBitPng) {
  io::save_model(dir_ / "depth.ncaw", demo::default_contracting_model(TaskTag::depth));
  const auto r = run_cli("infer-depth --model " + quote(dir_ / "depth.ncaw") + " --input " + quote(frame_) +
                         " --output " + quote(dir_ / "d.png"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const std::string png = testing::slurp(dir_ / "d.png");
  ASSERT_GT(png.size(), 25u);
  EXPECT_EQ(png[24], 16);
  const auto d = load_gray(dir_ / "d.png");
  EXPECT_NEAR(*std::max_element(d.data.begin(), d.data.end()), 1.0f, 1e-6);
  EXPECT_NEAR(*std::min_element(d.data.begin(), d.data.end()), 0.0f, 1e-6);
}

TEST_F(CliTest, TaskMismatchIsRejected) {
  const auto r = run_cli("infer-depth --model " + quote(golden_) + " --input " + quote(frame_) + " --output " +
                         quote(dir_ / "d.png"));
  EXPECT_EQ(r.exit_code, 3) << r.out;
  EXPECT_NE(r.out.find("error: task-mismatch"), std::string::npos) << r.out;
}

TEST_F(CliTest, CurateSplitsMaps) {
  fs::create_directories(dir_ / "maps");
  for (int i = 0; i < 6; ++i) {
    GrayImage g(16, 16, 0.5f);
    if (i % 2) {
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) g.at(y, x) = static_cast<float>(x) / 15.0f;
    }
    save_gray(dir_ / "maps" / ("m" + std::to_string(i) + ".png"), g, BitDepth::sixteen);
  }
  auto r = run_cli("curate --input " + quote(dir_ / "maps") + " --output " + quote(dir_ / "out"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("total=6 accepted=3 rejected=3"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "accepted" / "m1.png"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "rejected" / "m0.png"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "scores.tsv"));

  // Constant maps score exactly zero, so even a zero threshold rejects them.
  r = run_cli("curate --input " + quote(dir_ / "maps") + " --output " + quote(dir_ / "out0") +
              " --curation-threshold 0");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("accepted=3 rejected=3"), std::string::npos) << r.out;

  r = run_cli("curate --input " + quote(dir_ / "maps") + " --output " + quote(dir_ / "outx") +
              " --curation-threshold 1000");
  EXPECT_NE(r.out.find("accepted=0 rejected=6"), std::string::npos) << r.out;

  EXPECT_EQ(run_cli("curate --input " + quote(dir_ / "maps") + " --output " + quote(dir_ / "o") +
                    " --curation-threshold -1")
                .exit_code,
            2);
}

void save_mask(const fs::path& p, const BoolMask& m) {
  GrayImage g(m.height, m.width);
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = m.data[i];
  save_gray(p, g);
}

TEST_F(CliTest, EvalReportsDiceAndIou) {
  fs::create_directories(dir_ / "pred");
  fs::create_directories(dir_ / "gt");
  // Per-image Dice 1, 0.5, 0 and IoU 1, 1/3, 0.
  BoolMask a(2, 4), b(2, 4), empty(2, 4);
  a.data = {1, 1, 1, 1, 0, 0, 0, 0};
  b.data = {0, 0, 1, 1, 1, 1, 0, 0};
  save_mask(dir_ / "pred" / "0.png", a);
  save_mask(dir_ / "gt" / "0.png", a);
  save_mask(dir_ / "pred" / "1.png", a);
  save_mask(dir_ / "gt" / "1.png", b);
  save_mask(dir_ / "pred" / "2.png", a);
  save_mask(dir_ / "gt" / "2.png", empty);
  const auto r = run_cli("eval --pred " + quote(dir_ / "pred") + " --gt " + quote(dir_ / "gt") + " --output " +
                         quote(dir_ / "table.tsv"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const std::string table = testing::slurp(dir_ / "table.tsv");
  EXPECT_NE(table.find("1.png\t0.500000\t0.333333"), std::string::npos) << table;
  EXPECT_NE(table.find("2.png\t0.000000\t0.000000"), std::string::npos) << table;
  const double std_dice = std::sqrt(((0.5 * 0.5) + 0 + (0.5 * 0.5)) / 3.0);
  char expected[64];
  std::snprintf(expected, sizeof expected, "mean\t0.500000 ± %.6f", std_dice);
  EXPECT_NE(table.find(expected), std::string::npos) << table;
}

TEST_F(CliTest, ValidateModel) {
  auto r = run_cli("validate-model " + quote(golden_));
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("38691"), std::string::npos) << r.out;

  auto bytes = io::read_file(golden_);
  bytes.pop_back();
  std::ofstream(dir_ / "t.ncaw", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  EXPECT_EQ(run_cli("validate-model --model " + quote(dir_ / "t.ncaw")).exit_code, 3);

  io::save_model(dir_ / "big.ncaw", ModelSpec::zeros(TaskTag::segmentation, 32, 256), std::nullopt);
  r = run_cli("validate-model " + quote(dir_ / "big.ncaw"));
  EXPECT_EQ(r.exit_code, 3) << r.out;
  EXPECT_NE(r.out.find("error: size-budget"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli("validate-model " + quote(dir_ / "big.ncaw") + " --max-bytes 1000000").exit_code, 0);
}

TEST_F(CliTest, SynthThenBenchAndVerifyBundle) {
  auto r = run_cli("synth --output " + quote(dir_ / "s") + " --frames 3 --size 16");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  r = run_cli("bench --model " + quote(dir_ / "s" / "seg_model.ncaw") + " --input " + quote(dir_ / "s" / "frames") +
              " --output " + quote(dir_ / "bench.jsonl") + " --kernel-reps 3");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "bench.jsonl"));
}

}  // namespace
}  // namespace nca
