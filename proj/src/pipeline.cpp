#include "nca/pipeline.hpp"

#include "nca/rng.hpp"
#include "nca/state.hpp"

namespace nca {

InferenceResult infer_image(const RgbImage& image, const ModelSpec& spec, const StepConfig& config) {
  config.validate();
  Rng noise(derive_seed(config.seed, kNoiseStream));
  InferenceResult result{seed_state(image, spec, noise), {}};
  StepConfig engine_config = config;
  engine_config.seed = derive_seed(config.seed, kMaskStream);
  result.trace = run(result.grid, spec, engine_config);
  return result;
}

}  // namespace nca
