#include "nca/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nca/error.hpp"

namespace nca {

namespace {
thread_local std::size_t g_state_buffer_allocations = 0;
}  // namespace

StateBuffer::StateBuffer(std::size_t size) : data_(size, 0.0f) { ++g_state_buffer_allocations; }

StateBuffer::StateBuffer(const StateBuffer& other) : data_(other.data_) {
  if (!data_.empty()) ++g_state_buffer_allocations;
}

StateBuffer& StateBuffer::operator=(const StateBuffer& other) {
  if (this != &other) {
    if (data_.size() != other.data_.size()) ++g_state_buffer_allocations;
    data_ = other.data_;
  }
  return *this;
}

std::size_t StateBuffer::allocations() noexcept { return g_state_buffer_allocations; }
void StateBuffer::reset_allocations() noexcept { g_state_buffer_allocations = 0; }

ChannelGrid::ChannelGrid(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1) {
    throw ConfigError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  }
  if (channels < kMinChannels) {
    throw ConfigError("grid needs at least " + std::to_string(kMinChannels) + " channels, got " +
                      std::to_string(channels));
  }
  buffer_ = StateBuffer(static_cast<std::size_t>(height) * width * channels);
}

bool ChannelGrid::all_finite() const noexcept {
  const auto d = data();
  return std::all_of(d.begin(), d.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace nca
