#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "melmix/error.hpp"

namespace melmix {

// Dense row-major float32 matrix. Vectors are stored as 1xN matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Matrix filled(std::size_t rows, std::size_t cols, float value);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(float value);
  void set_zero() { fill(0.0f); }

  // True iff every entry is finite.
  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// out = a * b. Shapes checked; out is resized. Accumulation order over the
// inner dimension is fixed per output element, so results are reproducible
// and independent of how rows are partitioned across threads.
void matmul_into(const Matrix& a, const Matrix& b, Matrix& out);
Matrix matmul(const Matrix& a, const Matrix& b);

// Row-range matmul: computes rows [row_begin, row_end) of a*b into the
// corresponding rows of out (out must already have the full shape).
void matmul_rows(const Matrix& a, const Matrix& b, Matrix& out,
                 std::size_t row_begin, std::size_t row_end);

Matrix transpose(const Matrix& m);
void transpose_into(const Matrix& m, Matrix& out);

// c += a (elementwise, shapes must match).
void add_inplace(Matrix& c, const Matrix& a);

}  // namespace melmix
