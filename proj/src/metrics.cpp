#include "nca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nca/error.hpp"

namespace nca {

namespace {

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ContractViolation(std::string(what) + ": shape mismatch " + std::to_string(a.height) + "x" +
                            std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                            std::to_string(b.width));
  }
}

struct Overlap {
  std::size_t pred = 0;
  std::size_t gt = 0;
  std::size_t both = 0;
};

Overlap overlap(const BoolMask& pred, const BoolMask& gt, const char* what) {
  require_same_shape(pred, gt, what);
  Overlap o;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    o.pred += p;
    o.gt += g;
    o.both += p && g;
  }
  return o;
}

// Summed-area table with a zero first row/column: (H+1) x (W+1).
class Integral {
 public:
  template <typename F>
  Integral(int h, int w, F value) : w_(w + 1), sums_(static_cast<std::size_t>(h + 1) * (w + 1), 0.0) {
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += value(y, x);
        at(y + 1, x + 1) = at(y, x + 1) + row;
      }
    }
  }

  double box(int y0, int x0, int k) const {
    return at(y0 + k, x0 + k) - at(y0, x0 + k) - at(y0 + k, x0) + at(y0, x0);
  }

 private:
  double& at(int y, int x) { return sums_[static_cast<std::size_t>(y) * w_ + x]; }
  double at(int y, int x) const { return sums_[static_cast<std::size_t>(y) * w_ + x]; }

  int w_;
  std::vector<double> sums_;
};

}  // namespace

double dice(const BoolMask& pred, const BoolMask& gt) {
  const Overlap o = overlap(pred, gt, "dice");
  if (o.pred + o.gt == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.pred + o.gt);
}

double iou(const BoolMask& pred, const BoolMask& gt) {
  const Overlap o = overlap(pred, gt, "iou");
  const std::size_t uni = o.pred + o.gt - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  if (a.height < 1 || a.width < 1) throw ContractViolation("ssim: empty image");
  if (params.window < 1) throw ConfigError("ssim window must be >= 1");
  const int k = std::min({params.window, a.height, a.width});
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);

  auto av = [&](int y, int x) { return static_cast<double>(a.at(y, x)); };
  auto bv = [&](int y, int x) { return static_cast<double>(b.at(y, x)); };
  const Integral sa(a.height, a.width, av);
  const Integral sb(a.height, a.width, bv);
  const Integral saa(a.height, a.width, [&](int y, int x) { return av(y, x) * av(y, x); });
  const Integral sbb(a.height, a.width, [&](int y, int x) { return bv(y, x) * bv(y, x); });
  const Integral sab(a.height, a.width, [&](int y, int x) { return av(y, x) * bv(y, x); });

  const double n = static_cast<double>(k) * k;
  double total = 0.0;
  std::size_t windows = 0;
  for (int y = 0; y + k <= a.height; ++y) {
    for (int x = 0; x + k <= a.width; ++x) {
      const double mu_a = sa.box(y, x, k) / n;
      const double mu_b = sb.box(y, x, k) / n;
      const double var_a = saa.box(y, x, k) / n - mu_a * mu_a;
      const double var_b = sbb.box(y, x, k) / n - mu_b * mu_b;
      const double cov = sab.box(y, x, k) / n - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double gradient_magnitude_score(const DepthMap& map) {
  const GrayImage norm = map.normalized();
  const int h = norm.height;
  const int w = norm.width;
  if (h == 0 || w == 0) return 0.0;
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      const double gx = 255.0 * (static_cast<double>(norm.at(y, xp)) - norm.at(y, xm)) / 2.0;
      const double gy = 255.0 * (static_cast<double>(norm.at(yp, x)) - norm.at(ym, x)) / 2.0;
      total += std::sqrt(gx * gx + gy * gy);
    }
  }
  return total / (static_cast<double>(h) * w);
}

CurationResult curate(std::span<const DepthMap> maps, double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("curation threshold must be a non-negative finite number");
  }
  CurationResult result;
  result.scores.reserve(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const double score = gradient_magnitude_score(maps[i]);
    result.scores.push_back(score);
    (score > threshold ? result.accepted : result.rejected).push_back(i);
  }
  return result;
}

}  // namespace nca
