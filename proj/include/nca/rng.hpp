#pragma once

#include <cstdint>

namespace nca {

/// SplitMix64 finalizer. Used to expand user seeds into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed for a named stream (noise init, fire masks, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0xA5A5A5A5ULL));
}

/// xorshift64* generator.
///
/// State is initialized as splitmix64(seed); a zero state is replaced by a fixed
/// nonzero constant. Each draw applies the shift triple (12, 25, 27) and returns
/// state * 0x2545F4914F6CDD1D. `uniform()` takes the top 24 bits of the output and
/// scales by 2^-24, so every value is an exact float in [0, 1). All arithmetic is on
/// unsigned 64-bit integers until that last conversion, so sequences are identical on
/// every platform.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x853C49E6748FEA9BULL;
  }

  constexpr std::uint64_t next_u64() noexcept {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  constexpr float uniform() noexcept {
    return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Stream identifiers used by the CLI and bench when expanding one user seed.
inline constexpr std::uint64_t kNoiseStream = 1;
inline constexpr std::uint64_t kMaskStream = 2;

}  // namespace nca
