#pragma once

#include <cstdint>
#include <vector>

#include "nca/image.hpp"
#include "nca/model_spec.hpp"

namespace nca::demo {

struct ContractingParams {
  float rate = 0.5f;  // fraction of the remaining error removed per fired update
  float gain = 4.0f;  // output target = gain * (feature - bias)
  float bias = 0.45f;
};

/// Hand-built model whose fired updates pull every hidden channel geometrically towards
/// zero and the output channel towards a fixed function of the blurred input:
/// "redness" R - (G + B) / 2 for segmentation, mean brightness for depth.
/// Needs mlp_hidden >= 2C - 4.
ModelSpec make_contracting_model(TaskTag task, int channels, int mlp_hidden = kDefaultMlpHidden,
                                 const ContractingParams& params = {});

/// The contracting model in the default configuration for `task`.
ModelSpec default_contracting_model(TaskTag task);

/// Uniform random weights in [-scale, scale]; the output layer uses scale * out_scale.
ModelSpec make_random_model(TaskTag task, int channels, int mlp_hidden, std::uint64_t seed, float scale = 0.25f,
                            float out_scale = 0.2f, float fire_rate = kDefaultFireRate);

struct SyntheticFrame {
  RgbImage image;
  BoolMask mask;    // blob pixels
  GrayImage depth;  // analytic radial falloff in [0, 1]
};

/// Capsule-style sequence: red blobs drifting over textured pink tissue.
std::vector<SyntheticFrame> synthetic_sequence(int frames, int height, int width, std::uint64_t seed);

}  // namespace nca::demo
