#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nca/image.hpp"
#include "nca/state.hpp"

namespace nca {

/// 2|A∩B| / (|A| + |B|); 1.0 when both masks are empty. Throws ContractViolation on
/// shape mismatch.
double dice(const BoolMask& pred, const BoolMask& gt);

/// |A∩B| / |A∪B|; 1.0 when both masks are empty.
double iou(const BoolMask& pred, const BoolMask& gt);

struct SsimParams {
  int window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over every fully contained window position (uniform window, population
/// statistics). Images smaller than the window use a window of min(H, W).
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {});

/// Mean over pixels of |grad(255 * normalized)| with central differences
/// ((v[i+1] - v[i-1]) / 2) and clamp-to-edge borders.
double gradient_magnitude_score(const DepthMap& map);

inline constexpr double kCurationThreshold = 1.1;

struct CurationResult {
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> rejected;
  std::vector<double> scores;  // one per input, in input order
};

/// Accepts map i iff its gradient score is strictly above `threshold`.
CurationResult curate(std::span<const DepthMap> maps, double threshold = kCurationThreshold);

}  // namespace nca
