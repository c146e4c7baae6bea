#include "nca/state.hpp"

#include <algorithm>
#include <cmath>

#include "nca/error.hpp"

namespace nca {

BoolMask SegMask::binary(float threshold) const {
  BoolMask mask(soft.height, soft.width);
  for (std::size_t i = 0; i < soft.size(); ++i) mask.data[i] = soft.data[i] > threshold ? 1 : 0;
  return mask;
}

GrayImage normalize_min_max(const GrayImage& image) {
  GrayImage out(image.height, image.width);
  if (image.data.empty()) return out;
  const auto [lo, hi] = std::minmax_element(image.data.begin(), image.data.end());
  const double min = *lo;
  const double range = static_cast<double>(*hi) - min;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < image.size(); ++i) {
    out.data[i] = std::clamp(static_cast<float>((image.data[i] - min) / range), 0.0f, 1.0f);
  }
  return out;
}

GrayImage DepthMap::normalized() const { return normalize_min_max(raw); }

ChannelGrid seed_state(const RgbImage& image, const ModelSpec& spec, Rng& rng) {
  if (spec.channels < kMinChannels) throw ConfigError("model needs at least 5 channels");
  if (image.height < 1 || image.width < 1) throw ConfigError("cannot seed from an empty image");
  ChannelGrid grid(image.height, image.width, spec.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      auto cell = grid.cell(y, x);
      for (int c = 0; c < kRgbChannels; ++c) cell[c] = image.at(y, x, c);
      for (int c = kRgbChannels; c < spec.channels; ++c) cell[c] = rng.uniform();
    }
  }
  return grid;
}

GrayImage output_channel(const ChannelGrid& grid) {
  GrayImage out(grid.height(), grid.width());
  const int last = grid.channels() - 1;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) out.at(y, x) = grid.at(y, x, last);
  }
  return out;
}

SegMask extract_segmentation(const ChannelGrid& grid) {
  SegMask mask{output_channel(grid)};
  for (float& v : mask.soft.data) v = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  return mask;
}

DepthMap extract_depth(const ChannelGrid& grid) { return DepthMap{output_channel(grid)}; }

}  // namespace nca
