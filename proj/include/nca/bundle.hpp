#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nca/engine.hpp"
#include "nca/image.hpp"
#include "nca/model_spec.hpp"

namespace nca {

// Reference bundle: a directory produced by the training side so the engine can be
// checked against it. Layout (see docs/reference_bundle.md):
//   bundle.json   {"format": "nca-reference-bundle", "version": 1, "model": ..., "input": ...,
//                  "seed": ..., "max_steps": ..., "early_stop": null | {...},
//                  "height": H, "width": W, "hidden_deltas": [...], "output": ...}
//   model file    WeightFile
//   input image   8-bit PNG or PPM
//   output file   H*W little-endian float32, raw last channel after the run

struct BundleCheck {
  int steps_expected = 0;
  int steps_actual = 0;
  double output_mean_abs_diff = 0.0;
  double output_max_abs_diff = 0.0;
  double max_delta_diff = 0.0;

  bool passed(double tolerance = 1e-4) const noexcept {
    return steps_expected == steps_actual && output_mean_abs_diff <= tolerance && max_delta_diff <= tolerance;
  }
};

/// Writes a bundle from the engine's own run (used for fixtures and self-checks).
void write_bundle(const std::filesystem::path& dir, const ModelSpec& spec, const RgbImage& image,
                  const StepConfig& config);

/// Re-runs the bundle's inference and compares against its recorded outputs.
/// Throws FormatError for a malformed bundle.json, IoError for missing files.
BundleCheck verify_bundle(const std::filesystem::path& dir, KernelPath kernel = KernelPath::vector);

std::vector<std::uint8_t> encode_f32_le(const std::vector<float>& values);
std::vector<float> decode_f32_le(const std::vector<std::uint8_t>& bytes);

}  // namespace nca
