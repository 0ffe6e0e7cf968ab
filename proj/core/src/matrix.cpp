#include "melmix/matrix.hpp"

#include <cmath>
#include <cstring>
#include <utility>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define MELMIX_HAVE_AVX2 1
#endif

namespace melmix {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length does not match rows*cols");
  }
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, float value) {
  Matrix m(rows, cols);
  m.fill(value);
  return m;
}

void Matrix::fill(float value) {
  std::fill(data_.begin(), data_.end(), value);
}

bool Matrix::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

#ifdef MELMIX_HAVE_AVX2

// 4x32 register-blocked kernel. Each output element accumulates over k in
// ascending order, independent of the row block it lands in, so results for
// a given row do not depend on the total row count or thread partitioning.
void matmul_block(const float* a, const float* b, float* c, std::size_t i_begin,
                  std::size_t i_end, std::size_t K, std::size_t N) {
  std::size_t j0 = 0;
  for (; j0 + 32 <= N; j0 += 32) {
    std::size_t i = i_begin;
    for (; i + 4 <= i_end; i += 4) {
      __m256 acc[4][4];
      for (int r = 0; r < 4; ++r)
        for (int v = 0; v < 4; ++v) acc[r][v] = _mm256_setzero_ps();
      for (std::size_t k = 0; k < K; ++k) {
        const float* brow = b + k * N + j0;
        const __m256 b0 = _mm256_loadu_ps(brow);
        const __m256 b1 = _mm256_loadu_ps(brow + 8);
        const __m256 b2 = _mm256_loadu_ps(brow + 16);
        const __m256 b3 = _mm256_loadu_ps(brow + 24);
        for (int r = 0; r < 4; ++r) {
          const __m256 av = _mm256_set1_ps(a[(i + r) * K + k]);
          acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
          acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
          acc[r][2] = _mm256_fmadd_ps(av, b2, acc[r][2]);
          acc[r][3] = _mm256_fmadd_ps(av, b3, acc[r][3]);
        }
      }
      for (int r = 0; r < 4; ++r)
        for (int v = 0; v < 4; ++v)
          _mm256_storeu_ps(c + (i + r) * N + j0 + v * 8, acc[r][v]);
    }
    for (; i < i_end; ++i) {
      for (int v = 0; v < 4; ++v) {
        __m256 acc = _mm256_setzero_ps();
        for (std::size_t k = 0; k < K; ++k)
          acc = _mm256_fmadd_ps(_mm256_set1_ps(a[i * K + k]),
                                _mm256_loadu_ps(b + k * N + j0 + v * 8), acc);
        _mm256_storeu_ps(c + i * N + j0 + v * 8, acc);
      }
    }
  }
  for (; j0 + 8 <= N; j0 += 8) {
    for (std::size_t i = i_begin; i < i_end; ++i) {
      __m256 acc = _mm256_setzero_ps();
      for (std::size_t k = 0; k < K; ++k)
        acc = _mm256_fmadd_ps(_mm256_set1_ps(a[i * K + k]),
                              _mm256_loadu_ps(b + k * N + j0), acc);
      _mm256_storeu_ps(c + i * N + j0, acc);
    }
  }
  if (j0 < N) {
    const std::size_t tail = N - j0;
    for (std::size_t i = i_begin; i < i_end; ++i) {
      float cbuf[8];
      __m256 acc = _mm256_setzero_ps();
      for (std::size_t k = 0; k < K; ++k) {
        float bbuf[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        std::memcpy(bbuf, b + k * N + j0, tail * sizeof(float));
        acc = _mm256_fmadd_ps(_mm256_set1_ps(a[i * K + k]),
                              _mm256_loadu_ps(bbuf), acc);
      }
      _mm256_storeu_ps(cbuf, acc);
      std::memcpy(c + i * N + j0, cbuf, tail * sizeof(float));
    }
  }
}

#else

void matmul_block(const float* a, const float* b, float* c, std::size_t i_begin,
                  std::size_t i_end, std::size_t K, std::size_t N) {
  for (std::size_t i = i_begin; i < i_end; ++i) {
    float* crow = c + i * N;
    std::memset(crow, 0, N * sizeof(float));
    for (std::size_t k = 0; k < K; ++k) {
      const float av = a[i * K + k];
      const float* brow = b + k * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
    }
  }
}

#endif

}  // namespace

void matmul_rows(const Matrix& a, const Matrix& b, Matrix& out,
                 std::size_t row_begin, std::size_t row_end) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ");
  }
  if (out.rows() != a.rows() || out.cols() != b.cols()) {
    throw DimensionError("matmul_rows: output shape mismatch");
  }
  if (row_end > a.rows() || row_begin > row_end) {
    throw DimensionError("matmul_rows: bad row range");
  }
  matmul_block(a.data(), b.data(), out.data(), row_begin, row_end, a.cols(),
               b.cols());
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ");
  }
  if (out.rows() != a.rows() || out.cols() != b.cols()) {
    out = Matrix(a.rows(), b.cols());
  }
  matmul_block(a.data(), b.data(), out.data(), 0, a.rows(), a.cols(), b.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  matmul_into(a, b, out);
  return out;
}

void transpose_into(const Matrix& m, Matrix& out) {
  if (out.rows() != m.cols() || out.cols() != m.rows()) {
    out = Matrix(m.cols(), m.rows());
  }
  const std::size_t R = m.rows(), C = m.cols();
  for (std::size_t i = 0; i < R; ++i) {
    const float* src = m.data() + i * C;
    for (std::size_t j = 0; j < C; ++j) out.data()[j * R + i] = src[j];
  }
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  transpose_into(m, out);
  return out;
}

void add_inplace(Matrix& c, const Matrix& a) {
  if (!c.same_shape(a)) throw DimensionError("add: shape mismatch");
  float* dst = c.data();
  const float* src = a.data();
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace melmix
