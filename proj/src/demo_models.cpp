#include "nca/demo_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "nca/error.hpp"
#include "nca/grid.hpp"
#include "nca/rng.hpp"

namespace nca::demo {

ModelSpec make_contracting_model(TaskTag task, int channels, int mlp_hidden, const ContractingParams& params) {
  if (mlp_hidden < 2 * channels - 4) {
    throw ConfigError("contracting model needs mlp_hidden >= " + std::to_string(2 * channels - 4));
  }
  ModelSpec spec = ModelSpec::zeros(task, channels, mlp_hidden);
  const int c_total = channels;
  const int h_total = mlp_hidden;
  auto w1 = [&](int in, int unit) -> float& { return spec.mlp_w1[static_cast<std::size_t>(in) * h_total + unit]; };
  auto w2 = [&](int unit, int out) -> float& { return spec.mlp_w2[static_cast<std::size_t>(unit) * c_total + out]; };

  // Bank A blurs the RGB channels.
  for (int c = 0; c < kRgbChannels; ++c) {
    std::fill_n(spec.bank_a.begin() + c * kFilterTaps, kFilterTaps, 1.0f / 9.0f);
  }

  // relu(s) and relu(-s) per non-RGB channel reconstruct s; feeding back -rate * s decays it.
  int unit = 0;
  for (int c = kRgbChannels; c < channels; ++c, unit += 2) {
    w1(c, unit) = 1.0f;
    w1(c, unit + 1) = -1.0f;
    w2(unit, c) = -params.rate;
    w2(unit + 1, c) = params.rate;
  }

  // Target feature from the blurred RGB (perception block C..C+2), split into two relus.
  const std::array<float, 3> weights = task == TaskTag::segmentation ? std::array<float, 3>{1.0f, -0.5f, -0.5f}
                                                                     : std::array<float, 3>{1.0f / 3, 1.0f / 3, 1.0f / 3};
  const float bias = task == TaskTag::segmentation ? params.bias : 0.0f;
  const float gain = task == TaskTag::segmentation ? params.gain : 1.0f;
  for (int c = 0; c < kRgbChannels; ++c) {
    w1(channels + c, unit) = weights[c];
    w1(channels + c, unit + 1) = -weights[c];
  }
  spec.mlp_b1[unit] = -bias;
  spec.mlp_b1[unit + 1] = bias;
  w2(unit, channels - 1) += params.rate * gain;
  w2(unit + 1, channels - 1) -= params.rate * gain;
  return spec;
}

ModelSpec default_contracting_model(TaskTag task) {
  return make_contracting_model(task, task == TaskTag::depth ? kDepthChannels : kSegmentationChannels);
}

ModelSpec make_random_model(TaskTag task, int channels, int mlp_hidden, std::uint64_t seed, float scale,
                            float out_scale, float fire_rate) {
  ModelSpec spec = ModelSpec::zeros(task, channels, mlp_hidden, fire_rate);
  Rng rng(seed);
  auto fill = [&](std::vector<float>& t, float s) {
    for (float& v : t) v = (2.0f * rng.uniform() - 1.0f) * s;
  };
  fill(spec.bank_a, scale);
  fill(spec.bank_b, scale);
  fill(spec.mlp_w1, scale);
  fill(spec.mlp_b1, scale);
  fill(spec.mlp_w2, scale * out_scale);
  return spec;
}

std::vector<SyntheticFrame> synthetic_sequence(int frames, int height, int width, std::uint64_t seed) {
  if (frames < 0 || height < 1 || width < 1) throw ConfigError("invalid synthetic sequence dimensions");
  Rng rng(seed);
  struct Blob {
    double cy, cx, vy, vx, radius;
  };
  std::vector<Blob> blobs(1 + (rng.next_u64() % 3));
  for (auto& b : blobs) {
    b.cy = rng.uniform() * height;
    b.cx = rng.uniform() * width;
    b.vy = (rng.uniform() - 0.5) * 1.5;
    b.vx = (rng.uniform() - 0.5) * 1.5;
    b.radius = (0.08 + 0.1 * rng.uniform()) * std::min(height, width);
  }
  const double phase = rng.uniform() * 2.0 * std::numbers::pi;

  std::vector<SyntheticFrame> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    SyntheticFrame frame{RgbImage(height, width), BoolMask(height, width), GrayImage(height, width)};
    const double cy0 = 0.5 * height + 0.1 * height * std::sin(0.07 * f + phase);
    const double cx0 = 0.5 * width + 0.1 * width * std::cos(0.05 * f + phase);
    const double rmax = std::hypot(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double texture = 0.05 * std::sin(0.4 * x + 0.3 * y + phase + 0.1 * f) + 0.03 * (rng.uniform() - 0.5);
        double r = 0.62 + texture;
        double g = 0.40 + 0.8 * texture;
        double b = 0.35 + 0.6 * texture;
        bool inside = false;
        for (const auto& blob : blobs) {
          // Blobs wrap around so every frame keeps its lesions.
          const double by = std::fmod(std::fmod(blob.cy + blob.vy * f, height) + height, height);
          const double bx = std::fmod(std::fmod(blob.cx + blob.vx * f, width) + width, width);
          if (std::hypot(y - by, x - bx) <= blob.radius) inside = true;
        }
        if (inside) {
          r = 0.85 + 0.5 * texture;
          g = 0.15 + 0.3 * texture;
          b = 0.15 + 0.3 * texture;
        }
        frame.image.at(y, x, 0) = static_cast<float>(std::clamp(r, 0.0, 1.0));
        frame.image.at(y, x, 1) = static_cast<float>(std::clamp(g, 0.0, 1.0));
        frame.image.at(y, x, 2) = static_cast<float>(std::clamp(b, 0.0, 1.0));
        frame.mask.set(y, x, inside);
        frame.depth.at(y, x) = static_cast<float>(std::clamp(1.0 - std::hypot(y - cy0, x - cx0) / (0.6 * rmax), 0.0, 1.0));
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace nca::demo
