#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nca {

inline constexpr int kRgbChannels = 3;
inline constexpr int kMinChannels = 5;  // RGB + one hidden + output

/// Heap block sized for a whole H*W*C state tensor. Every construction and copy bumps a
/// per-thread counter so tests can check how many state-sized buffers an inference uses.
class StateBuffer {
 public:
  StateBuffer() = default;
  explicit StateBuffer(std::size_t size);
  StateBuffer(const StateBuffer& other);
  StateBuffer& operator=(const StateBuffer& other);
  StateBuffer(StateBuffer&&) noexcept = default;
  StateBuffer& operator=(StateBuffer&&) noexcept = default;

  std::size_t size() const noexcept { return data_.size(); }
  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Number of state buffers allocated on the calling thread since the last reset.
  static std::size_t allocations() noexcept;
  static void reset_allocations() noexcept;

 private:
  std::vector<float> data_;
};

/// H x W x C float state, row-major with the channel index fastest.
/// Channels 0..2 hold RGB, the last channel is the model output, the rest are hidden.
class ChannelGrid {
 public:
  ChannelGrid(int height, int width, int channels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return buffer_.size(); }

  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  float& at(int y, int x, int c) noexcept { return buffer_[index(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return buffer_[index(y, x, c)]; }

  std::span<float> cell(int y, int x) noexcept { return buffer_.span().subspan(index(y, x, 0), channels_); }
  std::span<const float> cell(int y, int x) const noexcept {
    return buffer_.span().subspan(index(y, x, 0), channels_);
  }

  std::span<float> data() noexcept { return buffer_.span(); }
  std::span<const float> data() const noexcept { return buffer_.span(); }

  bool all_finite() const noexcept;

 private:
  int height_;
  int width_;
  int channels_;
  StateBuffer buffer_;
};

}  // namespace nca
