#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "melmix/matrix.hpp"
#include "melmix/rng.hpp"

namespace melmix {

// A learnable tensor with its gradient buffer.
struct Param {
  Matrix value;
  Matrix grad;
  std::string name;

  Param() = default;
  Param(std::string name_, std::size_t rows, std::size_t cols)
      : value(rows, cols), grad(rows, cols), name(std::move(name_)) {}

  void zero_grad() { grad.set_zero(); }
};

// First/second moment estimates for one Param.
struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const Param& p)
      : m(p.value.rows(), p.value.cols()), v(p.value.rows(), p.value.cols()) {}
};

enum class Mode { kTrain, kEval };

// y = 0.5*x*(1+erf(x/sqrt(2))), elementwise, exact erf form.
Matrix gelu(const Matrix& x);
void gelu_into(const Matrix& x, Matrix& y);

// dx for y = gelu(x) given upstream dy.
Matrix gelu_backward(const Matrix& x, const Matrix& dy);
void gelu_backward_into(const Matrix& x, const Matrix& dy, Matrix& dx);

// Per-row normalization over the column (channel) axis, then affine.
// gamma/beta are 1xC. eps must be > 0.
Matrix layernorm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                 float eps);
void layernorm_into(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                    float eps, Matrix& y);

// Gradients for layernorm. dgamma/dbeta are accumulated (+=) so a caller can
// sum contributions over a batch; dx is overwritten.
void layernorm_backward(const Matrix& x, const Matrix& gamma, float eps,
                        const Matrix& dy, Matrix& dx, Matrix& dgamma,
                        Matrix& dbeta);

// Inverted dropout. Train mode zeroes entries with probability p and scales
// the survivors by 1/(1-p); eval mode is the identity. The mask for entry i
// is a pure function of (rng, i), so it is reproducible and order-free.
Matrix dropout(const Matrix& x, float p, Mode mode, const RngStream& rng);
void dropout_into(const Matrix& x, float p, Mode mode, const RngStream& rng,
                  Matrix& y);
// Applies the same mask to the upstream gradient.
void dropout_backward_into(const Matrix& dy, float p, Mode mode,
                           const RngStream& rng, Matrix& dx);

// Mean absolute difference over unmasked entries. mask, when present, holds
// one flag per row; rows with flag 0 are excluded. Accumulated in double.
float l1_loss(const Matrix& pred, const Matrix& target,
              const std::vector<std::uint8_t>* row_mask = nullptr);
// d(loss)/d(pred): sign(pred-target)/n_unmasked_entries, 0 on masked rows.
Matrix l1_loss_backward(const Matrix& pred, const Matrix& target,
                        const std::vector<std::uint8_t>* row_mask = nullptr);

// Bias-corrected Adam update, in place. Increments state.step.
void adam_step(Param& param, AdamState& state, float lr, float beta1,
               float beta2, float eps);

// y = x*w + b where b is 1xN broadcast over rows.
void affine_into(const Matrix& x, const Matrix& w, const Matrix& b, Matrix& y);
// Row-range variant used by threaded forwards.
void affine_rows(const Matrix& x, const Matrix& w, const Matrix& b, Matrix& y,
                 std::size_t row_begin, std::size_t row_end);

// Gradients for y = x*w + b. dw/db are accumulated (+=), dx overwritten.
void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                     Matrix& dx, Matrix& dw, Matrix& db);
// Weight/bias gradients only (when dx is not needed, e.g. the first layer).
void affine_backward_params(const Matrix& x, const Matrix& dy, Matrix& dw,
                            Matrix& db);

}  // namespace melmix
