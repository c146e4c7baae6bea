#pragma once

#include "nca/engine.hpp"
#include "nca/image.hpp"
#include "nca/model_spec.hpp"

namespace nca {

struct InferenceResult {
  ChannelGrid grid;
  StepTrace trace;
};

/// Seeds a grid from `image` and runs the engine on it. `config.seed` is the user seed:
/// the noise initialization draws from derive_seed(seed, kNoiseStream) and the fire
/// masks from derive_seed(seed, kMaskStream).
InferenceResult infer_image(const RgbImage& image, const ModelSpec& spec, const StepConfig& config);

}  // namespace nca
