#include "nca/model_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nca/error.hpp"
#include "nca/fs_util.hpp"
#include "nca/grid.hpp"

namespace nca::io {

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    bytes_.push_back(static_cast<std::uint8_t>(v & 0xFF));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void floats(const std::vector<float>& values) {
    for (float v : values) f32(v);
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return bytes_[pos_++]; }
  std::uint16_t u16() {
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  void floats(std::vector<float>& out, std::size_t n, const char* section) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = f32();
      if (!std::isfinite(out[i])) {
        throw FormatError(FormatErrc::non_finite_weight,
                          std::string(section) + "[" + std::to_string(i) + "] is not finite");
      }
    }
  }

  void seek(std::size_t pos) { pos_ = pos; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::pair<std::string, std::size_t>> SizeReport::sections() const {
  return {{"header", header}, {"bank_a", bank_a}, {"bank_b", bank_b}, {"mlp_w1", mlp_w1},
          {"mlp_b1", mlp_b1}, {"mlp_w2", mlp_w2}, {"crc", crc}};
}

namespace {

SizeReport layout(std::size_t channels, std::size_t hidden) {
  SizeReport r;
  r.header = kHeaderBytes;
  r.bank_a = 4 * channels * kFilterTaps;
  r.bank_b = 4 * channels * kFilterTaps;
  r.mlp_w1 = 4 * 3 * channels * hidden;
  r.mlp_b1 = 4 * hidden;
  r.mlp_w2 = 4 * hidden * channels;
  r.crc = kCrcBytes;
  r.total = r.header + r.bank_a + r.bank_b + r.mlp_w1 + r.mlp_b1 + r.mlp_w2 + r.crc;
  return r;
}

}  // namespace

std::size_t serialized_size(int channels, int mlp_hidden) {
  if (channels < 0 || mlp_hidden < 0) throw ConfigError("dimensions must be non-negative");
  return layout(static_cast<std::size_t>(channels), static_cast<std::size_t>(mlp_hidden)).total;
}

SizeReport size_report(const ModelSpec& spec) {
  return layout(static_cast<std::size_t>(std::max(spec.channels, 0)),
                static_cast<std::size_t>(std::max(spec.mlp_hidden, 0)));
}

std::vector<std::uint8_t> serialize(const ModelSpec& spec, std::optional<std::size_t> budget) {
  spec.validate();
  if (spec.channels > 0xFFFF || spec.mlp_hidden > 0xFFFF) {
    throw ConfigError("dimensions do not fit the 16-bit header fields");
  }
  const std::size_t total = serialized_size(spec.channels, spec.mlp_hidden);
  if (budget && total > *budget) throw SizeBudgetError(total, *budget);

  Writer w(total);
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u16(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(spec.task));
  w.u16(static_cast<std::uint16_t>(spec.channels));
  w.u16(static_cast<std::uint16_t>(spec.mlp_hidden));
  w.f32(spec.fire_rate);
  w.floats(spec.bank_a);
  w.floats(spec.bank_b);
  w.floats(spec.mlp_w1);
  w.floats(spec.mlp_b1);
  w.floats(spec.mlp_w2);
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

Header read_header(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min(bytes.size(), kMagic.size());
  for (std::size_t i = 0; i < magic_len; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) throw FormatError(FormatErrc::bad_magic, "not an NCAW file");
  }
  if (bytes.size() < kHeaderBytes) {
    throw FormatError(FormatErrc::truncated, "file has " + std::to_string(bytes.size()) +
                                                 " bytes, header needs " + std::to_string(kHeaderBytes));
  }
  Reader r(bytes);
  r.seek(kMagic.size());
  Header h;
  h.version = r.u16();
  if (h.version != kFormatVersion) {
    throw FormatError(FormatErrc::bad_version, "unsupported format version " + std::to_string(h.version));
  }
  const std::uint8_t tag = r.u8();
  if (tag > 1) throw FormatError(FormatErrc::bad_header, "unknown task tag " + std::to_string(tag));
  h.task = static_cast<TaskTag>(tag);
  h.channels = r.u16();
  h.mlp_hidden = r.u16();
  h.fire_rate = r.f32();
  if (h.channels < kMinChannels) {
    throw FormatError(FormatErrc::bad_header, "channel count " + std::to_string(h.channels) + " is below 5");
  }
  if (h.mlp_hidden < 1) throw FormatError(FormatErrc::bad_header, "mlp_hidden is zero");
  if (!(h.fire_rate > 0.0f && h.fire_rate <= 1.0f)) {
    throw FormatError(FormatErrc::bad_header, "fire rate outside (0, 1]");
  }
  return h;
}

ModelSpec deserialize(std::span<const std::uint8_t> bytes) {
  const Header h = read_header(bytes);
  const std::size_t expected = serialized_size(h.channels, h.mlp_hidden);
  if (bytes.size() < expected) {
    throw FormatError(FormatErrc::truncated, "file has " + std::to_string(bytes.size()) + " bytes, header implies " +
                                                 std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw FormatError(FormatErrc::trailing_bytes, "file has " + std::to_string(bytes.size()) +
                                                      " bytes, header implies " + std::to_string(expected));
  }
  const std::size_t body = expected - kCrcBytes;
  Reader tail(bytes);
  tail.seek(body);
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc32(bytes.first(body));
  if (stored != actual) throw FormatError(FormatErrc::crc_mismatch, "checksum does not match contents");

  ModelSpec spec;
  spec.task = h.task;
  spec.channels = h.channels;
  spec.mlp_hidden = h.mlp_hidden;
  spec.fire_rate = h.fire_rate;
  const auto c = static_cast<std::size_t>(h.channels);
  const auto hid = static_cast<std::size_t>(h.mlp_hidden);
  Reader r(bytes);
  r.seek(kHeaderBytes);
  r.floats(spec.bank_a, c * kFilterTaps, "bank_a");
  r.floats(spec.bank_b, c * kFilterTaps, "bank_b");
  r.floats(spec.mlp_w1, 3 * c * hid, "mlp_w1");
  r.floats(spec.mlp_b1, hid, "mlp_b1");
  r.floats(spec.mlp_w2, hid * c, "mlp_w2");
  return spec;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path, "read failed");
  return bytes;
}

ModelSpec load_model(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void save_model(const std::filesystem::path& path, const ModelSpec& spec, std::optional<std::size_t> budget) {
  write_file_atomic(path, serialize(spec, budget));
}

}  // namespace nca::io
