#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nca {

/// H x W x 3, interleaved, values in [0, 1].
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0.0f) {}

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Single-channel float image.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int h, int w, float fill = 0.0f) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct BoolMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BoolMask() = default;
  BoolMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

  std::size_t size() const noexcept { return data.size(); }
  bool at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const noexcept;

  bool operator==(const BoolMask&) const = default;
};

enum class BitDepth { eight = 8, sixteen = 16 };

// Raster I/O. Files are sniffed by content on load (PNG signature, or P5/P6 PNM);
// on save the extension picks the format: .pgm/.ppm write binary PNM, anything else PNG.
// 8-bit data round-trips exactly; 16-bit gray keeps full precision.

/// Loads any gray/RGB/RGBA/palette PNG or P5/P6 PNM as RGB in [0, 1]. Throws IoError.
RgbImage load_image(const std::filesystem::path& path);
/// Loads as a single channel; colour inputs are reduced to their mean. Throws IoError.
GrayImage load_gray(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and rounded to the nearest code. Throws IoError.
void save_gray(const std::filesystem::path& path, const GrayImage& image, BitDepth depth = BitDepth::eight);
void save_rgb(const std::filesystem::path& path, const RgbImage& image);

/// Bilinear resampling with half-pixel centres and clamped borders.
RgbImage resize_bilinear(const RgbImage& image, int out_height, int out_width);
GrayImage resize_bilinear(const GrayImage& image, int out_height, int out_width);

/// Run-length text form: "H W\n" followed by alternating run lengths starting with a
/// run of zeros (possibly empty), row-major, space separated, trailing newline.
std::string to_rle(const BoolMask& mask);
BoolMask from_rle(std::string_view text);

}  // namespace nca
