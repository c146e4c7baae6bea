#pragma once

#include <span>
#include <string_view>

namespace nca {

enum class KernelPath { scalar, vector };

std::string_view to_string(KernelPath path) noexcept;
/// Parses "scalar" or "vector"; throws UsageError otherwise.
KernelPath parse_kernel_path(std::string_view name);

/// Row-major (rows x cols) matrix view.
struct MatrixView {
  std::span<const float> data;
  int rows = 0;
  int cols = 0;

  float operator()(int r, int c) const noexcept {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

// All matvec variants compute y = M^T x: x has M.rows entries, y has M.cols entries,
// y[j] = sum_i x[i] * M(i, j). That is the layout of the MLP weight matrices, which are
// stored (inputs x outputs). With a non-empty `bias` each output starts from bias[j]
// instead of zero and the products are added in row order, so both paths round the same
// way for a given output.

/// Reference path: one output at a time, strided column walk.
void matvec_scalar(MatrixView m, std::span<const float> x, std::span<float> y, std::span<const float> bias = {});

/// Fast path: streams matrix rows and accumulates 8-wide lane blocks of outputs.
void matvec_vector(MatrixView m, std::span<const float> x, std::span<float> y, std::span<const float> bias = {});

void matvec(KernelPath path, MatrixView m, std::span<const float> x, std::span<float> y,
            std::span<const float> bias = {});

}  // namespace nca
