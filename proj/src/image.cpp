#include "nca/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <sstream>

#include "nca/error.hpp"
#include "nca/fs_util.hpp"
#include "nca/model_io.hpp"

namespace nca {

std::size_t BoolMask::count() const noexcept {
  std::size_t n = 0;
  for (auto v : data) n += v != 0;
  return n;
}

namespace {

// Decoded raster before conversion: interleaved samples normalized to [0, 1].
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3
  std::vector<float> samples;
};

// ---- PNG -------------------------------------------------------------------

struct MemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

struct PngErrorState {
  char message[256];
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  if (state) {
    std::strncpy(state->message, msg ? msg : "libpng error", sizeof(state->message) - 1);
    state->message[sizeof(state->message) - 1] = '\0';
  }
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (src->pos + len > src->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->data + src->pos, len);
  src->pos += len;
}

bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// Locals that must survive a longjmp are declared before setjmp.
bool decode_png(std::span<const std::uint8_t> bytes, Raster& out, std::string& error) {
  PngErrorState err{};
  MemoryReader reader{bytes.data(), bytes.size(), 0};
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) {
    error = "cannot create PNG reader";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    error = "cannot create PNG info";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = err.message;
    return false;
  }
  png_set_read_fn(png, &reader, png_read_fn);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  const int channels = (color & PNG_COLOR_MASK_COLOR) ? 3 : 1;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.height = static_cast<int>(height);
  out.width = static_cast<int>(width);
  out.channels = channels;
  out.samples.resize(static_cast<std::size_t>(width) * height * channels);
  const std::size_t n = out.samples.size();
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<float>((pixels[2 * i] << 8) | pixels[2 * i + 1]) / 65535.0f;
    }
  } else {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i) {
        out.samples[y * width * channels + i] = static_cast<float>(pixels[y * rowbytes + i]) / 255.0f;
      }
    }
  }
  return true;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* sink = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  sink->insert(sink->end(), data, data + len);
}

void png_flush_fn(png_structp) {}

// `samples` holds already-quantized big-endian (16-bit) or plain (8-bit) rows.
bool encode_png(const std::vector<std::uint8_t>& samples, int height, int width, int channels, int depth,
                std::vector<std::uint8_t>& out, std::string& error) {
  PngErrorState err{};
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (depth / 8);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(samples.data() + y * rowbytes);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) {
    error = "cannot create PNG writer";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    error = "cannot create PNG info";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    error = err.message;
    return false;
  }
  png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

// ---- PNM -------------------------------------------------------------------

bool is_pnm(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6');
}

bool decode_pnm(std::span<const std::uint8_t> bytes, Raster& out, std::string& error) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](long& value) {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) return false;
    value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000) return false;
      ++pos;
    }
    return true;
  };
  long width = 0;
  long height = 0;
  long maxval = 0;
  if (!read_uint(width) || !read_uint(height) || !read_uint(maxval) || width < 1 || height < 1 || maxval < 1 ||
      maxval > 65535) {
    error = "malformed PNM header";
    return false;
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    error = "malformed PNM header";
    return false;
  }
  ++pos;
  const int channels = bytes[1] == '6' ? 3 : 1;
  const int sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - pos < n * sample_bytes) {
    error = "PNM pixel data truncated";
    return false;
  }
  out.height = static_cast<int>(height);
  out.width = static_cast<int>(width);
  out.channels = channels;
  out.samples.resize(n);
  const auto scale = static_cast<float>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = sample_bytes == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    out.samples[i] = std::min(static_cast<float>(v) / scale, 1.0f);
  }
  return true;
}

std::vector<std::uint8_t> encode_pnm(const std::vector<std::uint8_t>& samples, int height, int width, int channels,
                                     int depth) {
  const std::string header = std::string(channels == 3 ? "P6" : "P5") + "\n" + std::to_string(width) + " " +
                             std::to_string(height) + "\n" + (depth == 16 ? "65535" : "255") + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), samples.begin(), samples.end());
  return out;
}

// ---- shared ----------------------------------------------------------------

Raster decode_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = io::read_file(path);
  Raster raster;
  std::string error;
  bool ok = false;
  if (is_png(bytes)) {
    ok = decode_png(bytes, raster, error);
  } else if (is_pnm(bytes)) {
    ok = decode_pnm(bytes, raster, error);
  } else {
    error = "unsupported image format (expected PNG or binary PGM/PPM)";
  }
  if (!ok) throw IoError(path, error);
  for (float& v : raster.samples) v = std::clamp(v, 0.0f, 1.0f);
  return raster;
}

bool wants_pnm(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<std::uint8_t> quantize(const std::vector<float>& values, int depth) {
  std::vector<std::uint8_t> out;
  if (depth == 16) {
    out.resize(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float v = std::isfinite(values[i]) ? std::clamp(values[i], 0.0f, 1.0f) : 0.0f;
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0f));
      out[2 * i] = static_cast<std::uint8_t>(q >> 8);
      out[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
    }
  } else {
    out.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float v = std::isfinite(values[i]) ? std::clamp(values[i], 0.0f, 1.0f) : 0.0f;
      out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

void write_raster(const std::filesystem::path& path, const std::vector<float>& values, int height, int width,
                  int channels, int depth) {
  if (height < 1 || width < 1) throw IoError(path, "refusing to write an empty image");
  const auto samples = quantize(values, depth);
  if (wants_pnm(path)) {
    if (channels == 3 && depth != 8) throw IoError(path, "PPM output is 8-bit only");
    write_file_atomic(path, encode_pnm(samples, height, width, channels, depth));
    return;
  }
  std::vector<std::uint8_t> png;
  std::string error;
  if (!encode_png(samples, height, width, channels, depth, png, error)) throw IoError(path, error);
  write_file_atomic(path, png);
}

template <typename Image, int Channels>
Image resize_impl(const Image& in, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ConfigError("resize target must be at least 1x1");
  if (in.height < 1 || in.width < 1) throw ConfigError("cannot resize an empty image");
  Image out(out_h, out_w);
  const double sy_scale = static_cast<double>(in.height) / out_h;
  const double sx_scale = static_cast<double>(in.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(in.height - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, in.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(in.width - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, in.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < Channels; ++c) {
        auto px = [&](int yy, int xx) {
          return static_cast<double>(in.data[(static_cast<std::size_t>(yy) * in.width + xx) * Channels + c]);
        };
        const double top = px(y0, x0) * (1.0 - fx) + px(y0, x1) * fx;
        const double bottom = px(y1, x0) * (1.0 - fx) + px(y1, x1) * fx;
        out.data[(static_cast<std::size_t>(y) * out_w + x) * Channels + c] =
            static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

}  // namespace

RgbImage load_image(const std::filesystem::path& path) {
  const Raster r = decode_file(path);
  RgbImage img(r.height, r.width);
  const std::size_t cells = static_cast<std::size_t>(r.height) * r.width;
  for (std::size_t i = 0; i < cells; ++i) {
    for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = r.samples[i * r.channels + (r.channels == 3 ? c : 0)];
  }
  return img;
}

GrayImage load_gray(const std::filesystem::path& path) {
  const Raster r = decode_file(path);
  GrayImage img(r.height, r.width);
  const std::size_t cells = static_cast<std::size_t>(r.height) * r.width;
  for (std::size_t i = 0; i < cells; ++i) {
    if (r.channels == 1) {
      img.data[i] = r.samples[i];
    } else {
      img.data[i] = (r.samples[i * 3] + r.samples[i * 3 + 1] + r.samples[i * 3 + 2]) / 3.0f;
    }
  }
  return img;
}

void save_gray(const std::filesystem::path& path, const GrayImage& image, BitDepth depth) {
  write_raster(path, image.data, image.height, image.width, 1, static_cast<int>(depth));
}

void save_rgb(const std::filesystem::path& path, const RgbImage& image) {
  write_raster(path, image.data, image.height, image.width, 3, 8);
}

RgbImage resize_bilinear(const RgbImage& image, int out_height, int out_width) {
  return resize_impl<RgbImage, 3>(image, out_height, out_width);
}

GrayImage resize_bilinear(const GrayImage& image, int out_height, int out_width) {
  return resize_impl<GrayImage, 1>(image, out_height, out_width);
}

std::string to_rle(const BoolMask& mask) {
  std::ostringstream out;
  out << mask.height << ' ' << mask.width << '\n';
  std::uint8_t current = 0;
  std::size_t run = 0;
  bool first = true;
  auto emit = [&] {
    out << (first ? "" : " ") << run;
    first = false;
  };
  for (auto v : mask.data) {
    const std::uint8_t bit = v != 0;
    if (bit != current) {
      emit();
      current = bit;
      run = 0;
    }
    ++run;
  }
  emit();
  out << '\n';
  return out.str();
}

BoolMask from_rle(std::string_view text) {
  std::istringstream in{std::string(text)};
  long h = 0;
  long w = 0;
  if (!(in >> h >> w) || h < 0 || w < 0 || h * w > (1L << 31)) {
    throw FormatError(FormatErrc::bad_image, "malformed RLE header");
  }
  BoolMask mask(static_cast<int>(h), static_cast<int>(w));
  std::size_t pos = 0;
  std::uint8_t bit = 0;
  long run = 0;
  while (in >> run) {
    if (run < 0 || pos + static_cast<std::size_t>(run) > mask.size()) {
      throw FormatError(FormatErrc::bad_image, "RLE runs exceed mask size");
    }
    std::fill_n(mask.data.begin() + static_cast<std::ptrdiff_t>(pos), run, bit);
    pos += static_cast<std::size_t>(run);
    bit ^= 1;
  }
  if (!in.eof() || pos != mask.size()) throw FormatError(FormatErrc::bad_image, "RLE runs do not cover the mask");
  return mask;
}

}  // namespace nca
