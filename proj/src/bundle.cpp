#include "nca/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <json.hpp>

#include "nca/error.hpp"
#include "nca/fs_util.hpp"
#include "nca/model_io.hpp"
#include "nca/pipeline.hpp"
#include "nca/state.hpp"

namespace nca {

using nlohmann::json;

std::vector<std::uint8_t> encode_f32_le(const std::vector<float>& values) {
  std::vector<std::uint8_t> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

std::vector<float> decode_f32_le(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0) throw FormatError(FormatErrc::truncated, "float32 payload length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_bundle(const std::filesystem::path& dir, const ModelSpec& spec, const RgbImage& image,
                  const StepConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create bundle directory: " + ec.message());

  // Run on the stored 8-bit input so the recorded outputs are reproducible from the file.
  save_rgb(dir / "input.png", image);
  const InferenceResult result = infer_image(load_image(dir / "input.png"), spec, config);
  io::save_model(dir / "model.ncaw", spec, std::nullopt);
  write_file_atomic(dir / "output.f32", encode_f32_le(output_channel(result.grid).data));

  json j;
  j["format"] = "nca-reference-bundle";
  j["version"] = 1;
  j["model"] = "model.ncaw";
  j["input"] = "input.png";
  j["output"] = "output.f32";
  j["seed"] = config.seed;
  j["max_steps"] = config.max_steps;
  if (config.early_stop) {
    j["early_stop"] = {{"min_steps", config.early_stop->min_steps},
                       {"delta_threshold", config.early_stop->delta_threshold},
                       {"cooldown", config.early_stop->cooldown_init}};
  } else {
    j["early_stop"] = nullptr;
  }
  j["height"] = image.height;
  j["width"] = image.width;
  json deltas = json::array();
  for (const auto& s : result.trace.steps) deltas.push_back(s.hidden_delta);
  j["hidden_deltas"] = deltas;
  write_file_atomic(dir / "bundle.json", j.dump(2) + "\n");
}

BundleCheck verify_bundle(const std::filesystem::path& dir, KernelPath kernel) {
  const auto raw = io::read_file(dir / "bundle.json");
  StepConfig config;
  std::filesystem::path model_file;
  std::filesystem::path input_file;
  std::filesystem::path output_file;
  std::vector<float> deltas;
  int height = 0;
  int width = 0;
  try {
    const json j = json::parse(raw.begin(), raw.end());
    if (j.at("format").get<std::string>() != "nca-reference-bundle" || j.at("version").get<int>() != 1) {
      throw FormatError(FormatErrc::bad_version, "unsupported bundle format");
    }
    model_file = dir / j.at("model").get<std::string>();
    input_file = dir / j.at("input").get<std::string>();
    output_file = dir / j.at("output").get<std::string>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.max_steps = j.at("max_steps").get<int>();
    if (!j.at("early_stop").is_null()) {
      const auto& es = j.at("early_stop");
      config.early_stop = EarlyStopParams{es.at("min_steps").get<int>(), es.at("delta_threshold").get<float>(),
                                          es.at("cooldown").get<int>()};
    }
    height = j.at("height").get<int>();
    width = j.at("width").get<int>();
    deltas = j.at("hidden_deltas").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw FormatError(FormatErrc::bad_header, std::string("bundle.json: ") + e.what());
  }
  config.kernel = kernel;

  const ModelSpec spec = io::load_model(model_file);
  const RgbImage image = load_image(input_file);
  if (image.height != height || image.width != width) {
    throw FormatError(FormatErrc::bad_header, "bundle input size does not match bundle.json");
  }
  const std::vector<float> expected = decode_f32_le(io::read_file(output_file));
  if (expected.size() != static_cast<std::size_t>(height) * width) {
    throw FormatError(FormatErrc::truncated, "bundle output does not hold H*W values");
  }

  const InferenceResult result = infer_image(image, spec, config);
  const GrayImage actual = output_channel(result.grid);
  BundleCheck check;
  check.steps_expected = static_cast<int>(deltas.size());
  check.steps_actual = result.trace.total_steps;
  double sum = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double d = std::fabs(static_cast<double>(actual.data[i]) - expected[i]);
    sum += d;
    check.output_max_abs_diff = std::max(check.output_max_abs_diff, d);
  }
  check.output_mean_abs_diff = sum / static_cast<double>(expected.size());
  const std::size_t common = std::min(deltas.size(), result.trace.steps.size());
  for (std::size_t i = 0; i < common; ++i) {
    check.max_delta_diff =
        std::max(check.max_delta_diff, std::fabs(static_cast<double>(deltas[i]) - result.trace.steps[i].hidden_delta));
  }
  return check;
}

}  // namespace nca
