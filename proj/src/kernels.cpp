#include "nca/kernels.hpp"

#include <cstring>
#include <string>

#include "nca/error.hpp"

#if defined(__clang__)
#define NCA_NO_AUTOVECTORIZE
#define NCA_SCALAR_LOOP _Pragma("clang loop vectorize(disable) interleave(disable)")
#elif defined(__GNUC__)
#define NCA_NO_AUTOVECTORIZE __attribute__((optimize("no-tree-vectorize")))
#define NCA_SCALAR_LOOP
#else
#define NCA_NO_AUTOVECTORIZE
#define NCA_SCALAR_LOOP
#endif

namespace nca {

std::string_view to_string(KernelPath path) noexcept {
  return path == KernelPath::scalar ? "scalar" : "vector";
}

KernelPath parse_kernel_path(std::string_view name) {
  if (name == "scalar") return KernelPath::scalar;
  if (name == "vector") return KernelPath::vector;
  throw UsageError("unknown kernel path '" + std::string(name) + "', expected scalar or vector");
}

namespace {

void check_dims(MatrixView m, std::span<const float> x, std::span<float> y, std::span<const float> bias) {
  if (m.rows < 0 || m.cols < 0 ||
      m.data.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols)) {
    throw ConfigError("matrix storage does not match " + std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
  if (x.size() != static_cast<std::size_t>(m.rows) || y.size() != static_cast<std::size_t>(m.cols)) {
    throw ConfigError("matvec dimension mismatch: matrix " + std::to_string(m.rows) + "x" +
                      std::to_string(m.cols) + ", x " + std::to_string(x.size()) + ", y " +
                      std::to_string(y.size()));
  }
  if (!bias.empty() && bias.size() != y.size()) throw ConfigError("matvec bias does not match output size");
}

inline float start(const float* bias, int j) { return bias ? bias[j] : 0.0f; }

NCA_NO_AUTOVECTORIZE void scalar_kernel(const float* m, int rows, int cols, const float* x, const float* bias, float* y) {
  NCA_SCALAR_LOOP
  for (int j = 0; j < cols; ++j) {
    float acc = start(bias, j);
    NCA_SCALAR_LOOP
    for (int i = 0; i < rows; ++i) acc += x[i] * m[static_cast<std::size_t>(i) * cols + j];
    y[j] = acc;
  }
}

#if defined(__GNUC__) || defined(__clang__)

typedef float Lanes8 __attribute__((vector_size(32)));

inline Lanes8 load8(const float* p) {
  Lanes8 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store8(float* p, Lanes8 v) { std::memcpy(p, &v, sizeof(v)); }

inline Lanes8 init8(const float* bias, int j) { return bias ? load8(bias + j) : Lanes8{}; }

void vector_kernel(const float* m, int rows, int cols, const float* x, const float* bias, float* y) {
  int j = 0;
  // 32 outputs per pass keeps four independent accumulators in flight.
  for (; j + 32 <= cols; j += 32) {
    Lanes8 a0 = init8(bias, j), a1 = init8(bias, j + 8), a2 = init8(bias, j + 16), a3 = init8(bias, j + 24);
    for (int i = 0; i < rows; ++i) {
      const float* row = m + static_cast<std::size_t>(i) * cols + j;
      const float xi = x[i];
      a0 += xi * load8(row);
      a1 += xi * load8(row + 8);
      a2 += xi * load8(row + 16);
      a3 += xi * load8(row + 24);
    }
    store8(y + j, a0);
    store8(y + j + 8, a1);
    store8(y + j + 16, a2);
    store8(y + j + 24, a3);
  }
  for (; j + 8 <= cols; j += 8) {
    Lanes8 a = init8(bias, j);
    for (int i = 0; i < rows; ++i) a += x[i] * load8(m + static_cast<std::size_t>(i) * cols + j);
    store8(y + j, a);
  }
  for (; j < cols; ++j) {
    float acc = start(bias, j);
    for (int i = 0; i < rows; ++i) acc += x[i] * m[static_cast<std::size_t>(i) * cols + j];
    y[j] = acc;
  }
}

#else

// Portable fallback: row-streaming accumulation into y, which compilers vectorize well.
void vector_kernel(const float* m, int rows, int cols, const float* x, const float* bias, float* y) {
  for (int j = 0; j < cols; ++j) y[j] = start(bias, j);
  for (int i = 0; i < rows; ++i) {
    const float* row = m + static_cast<std::size_t>(i) * cols;
    const float xi = x[i];
    for (int j = 0; j < cols; ++j) y[j] += xi * row[j];
  }
}

#endif

}  // namespace

void matvec_scalar(MatrixView m, std::span<const float> x, std::span<float> y, std::span<const float> bias) {
  check_dims(m, x, y, bias);
  scalar_kernel(m.data.data(), m.rows, m.cols, x.data(), bias.empty() ? nullptr : bias.data(), y.data());
}

void matvec_vector(MatrixView m, std::span<const float> x, std::span<float> y, std::span<const float> bias) {
  check_dims(m, x, y, bias);
  vector_kernel(m.data.data(), m.rows, m.cols, x.data(), bias.empty() ? nullptr : bias.data(), y.data());
}

void matvec(KernelPath path, MatrixView m, std::span<const float> x, std::span<float> y,
            std::span<const float> bias) {
  if (path == KernelPath::scalar) {
    matvec_scalar(m, x, y, bias);
  } else {
    matvec_vector(m, x, y, bias);
  }
}

}  // namespace nca
