#pragma once

#include "nca/grid.hpp"
#include "nca/image.hpp"
#include "nca/model_spec.hpp"
#include "nca/rng.hpp"

namespace nca {

inline constexpr float kSegThreshold = 0.5f;

/// Soft segmentation in [0, 1]; `binary()` is soft > 0.5.
struct SegMask {
  GrayImage soft;

  BoolMask binary(float threshold = kSegThreshold) const;
};

/// Raw depth output plus its per-image min-max normalization.
struct DepthMap {
  GrayImage raw;

  /// (d - min) / (max - min); all zeros when max == min.
  GrayImage normalized() const;
};

/// Channels 0..2 take the image, channels 3..C-1 uniform noise in [0, 1) drawn row-major
/// (cell by cell, channel by channel) from `rng`.
ChannelGrid seed_state(const RgbImage& image, const ModelSpec& spec, Rng& rng);

/// Logistic of the last channel.
SegMask extract_segmentation(const ChannelGrid& grid);
DepthMap extract_depth(const ChannelGrid& grid);

/// The raw last channel as an image.
GrayImage output_channel(const ChannelGrid& grid);

GrayImage normalize_min_max(const GrayImage& image);

}  // namespace nca
