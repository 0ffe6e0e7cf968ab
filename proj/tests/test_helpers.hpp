#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "melmix/matrix.hpp"
#include "melmix/rng.hpp"

namespace melmix::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols,
                            std::uint64_t seed, float lo = -1.0f,
                            float hi = 1.0f) {
  Matrix m(rows, cols);
  const RngStream rng{seed, 0x74657374ull};
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.uniform(i, lo, hi);
  }
  return m;
}

// Independent triple-loop product in double; the oracle for matmul.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        s += double(a(i, k)) * double(b(k, j));
      }
      out(i, j) = static_cast<float>(s);
    }
  }
  return out;
}

// O(N^2) DFT magnitudes of one already-windowed frame, in double.
inline std::vector<double> naive_dft_magnitudes(const std::vector<double>& frame,
                                                std::size_t n_bins) {
  const std::size_t n = frame.size();
  std::vector<double> mags(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * 3.14159265358979323846 * k * t / n;
      re += frame[t] * std::cos(angle);
      im += frame[t] * std::sin(angle);
    }
    mags[k] = std::sqrt(re * re + im * im);
  }
  return mags;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(double(a.data()[i]) - double(b.data()[i])));
  }
  return m;
}

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

// Scratch directory for file-backed tests; recreated per call.
inline std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("melmix_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace melmix::test
