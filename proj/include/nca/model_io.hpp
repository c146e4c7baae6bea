#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nca/model_spec.hpp"

namespace nca::io {

// WeightFile layout (all multi-byte fields little-endian):
//   0  magic "NCAW"          4 bytes
//   4  format version u16    (= 1)
//   6  task tag u8           (0 = segmentation, 1 = depth)
//   7  channels u16
//   9  mlp_hidden u16
//  11  fire_rate f32
//  15  bank A  f32[C*9]      channel-major
//      bank B  f32[C*9]
//      mlp_w1  f32[3C*H]     row-major
//      mlp_b1  f32[H]
//      mlp_w2  f32[H*C]      row-major
//  end CRC32 (IEEE) u32 over every preceding byte
inline constexpr std::array<char, 4> kMagic = {'N', 'C', 'A', 'W'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 15;
inline constexpr std::size_t kCrcBytes = 4;
inline constexpr std::size_t kDefaultSizeBudget = 65536;

struct Header {
  std::uint16_t version = kFormatVersion;
  TaskTag task = TaskTag::segmentation;
  int channels = 0;
  int mlp_hidden = 0;
  float fire_rate = 0.0f;
};

struct SizeReport {
  std::size_t header = 0;
  std::size_t bank_a = 0;
  std::size_t bank_b = 0;
  std::size_t mlp_w1 = 0;
  std::size_t mlp_b1 = 0;
  std::size_t mlp_w2 = 0;
  std::size_t crc = 0;
  std::size_t total = 0;

  std::vector<std::pair<std::string, std::size_t>> sections() const;
};

/// Exact file length for the given dimensions.
std::size_t serialized_size(int channels, int mlp_hidden);

SizeReport size_report(const ModelSpec& spec);

/// Encodes `spec`. Throws ConfigError for an invalid spec and SizeBudgetError when the
/// encoded size exceeds `budget` (pass std::nullopt for no limit).
std::vector<std::uint8_t> serialize(const ModelSpec& spec,
                                    std::optional<std::size_t> budget = kDefaultSizeBudget);

/// Parses only the fixed header. Throws FormatError.
Header read_header(std::span<const std::uint8_t> bytes);

/// Decodes and validates a full file. Throws FormatError with a distinct code for each
/// failure class; never reads out of bounds.
ModelSpec deserialize(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
ModelSpec load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelSpec& spec,
                std::optional<std::size_t> budget = kDefaultSizeBudget);

}  // namespace nca::io
