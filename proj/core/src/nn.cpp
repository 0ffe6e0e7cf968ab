#include "melmix/nn.hpp"

#include <cmath>
#include <cstring>

#include "melmix/simd_math.hpp"

namespace melmix {

namespace {
constexpr float kInvSqrt2 = 0.7071067811865476f;
constexpr float kInvSqrt2Pi = 0.3989422804014327f;
}  // namespace

void gelu_into(const Matrix& x, Matrix& y) {
  if (!y.same_shape(x)) y = Matrix(x.rows(), x.cols());
  const std::size_t n = x.size();
  const float* xd = x.data();
  float* yd = y.data();
  for (std::size_t i = 0; i < n; ++i) yd[i] = xd[i] * kInvSqrt2;
  erf_f32(yd, yd, n);
  for (std::size_t i = 0; i < n; ++i) yd[i] = 0.5f * xd[i] * (1.0f + yd[i]);
}

Matrix gelu(const Matrix& x) {
  Matrix y;
  gelu_into(x, y);
  return y;
}

void gelu_backward_into(const Matrix& x, const Matrix& dy, Matrix& dx) {
  if (!x.same_shape(dy)) throw DimensionError("gelu_backward: shape mismatch");
  if (!dx.same_shape(x)) dx = Matrix(x.rows(), x.cols());
  const std::size_t n = x.size();
  const float* xd = x.data();
  const float* dyd = dy.data();
  float* dxd = dx.data();
  std::vector<float> cdf(n), pdf(n);
  for (std::size_t i = 0; i < n; ++i) cdf[i] = xd[i] * kInvSqrt2;
  erf_f32(cdf.data(), cdf.data(), n);
  for (std::size_t i = 0; i < n; ++i) pdf[i] = -0.5f * xd[i] * xd[i];
  exp_f32(pdf.data(), pdf.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    const float phi = kInvSqrt2Pi * pdf[i];
    const float Phi = 0.5f * (1.0f + cdf[i]);
    dxd[i] = dyd[i] * (Phi + xd[i] * phi);
  }
}

Matrix gelu_backward(const Matrix& x, const Matrix& dy) {
  Matrix dx;
  gelu_backward_into(x, dy, dx);
  return dx;
}

void layernorm_into(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                    float eps, Matrix& y) {
  const std::size_t C = x.cols();
  if (gamma.size() != C || beta.size() != C) {
    throw DimensionError("layernorm: gamma/beta length must equal columns");
  }
  if (eps <= 0.0f) throw ParameterError("layernorm: eps must be > 0");
  if (!y.same_shape(x)) y = Matrix(x.rows(), x.cols());
  const float* g = gamma.data();
  const float* b = beta.data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const float* xr = x.data() + r * C;
    float* yr = y.data() + r * C;
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += xr[c];
    const double mean = sum / static_cast<double>(C);
    double sq = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = xr[c] - mean;
      sq += d * d;
    }
    const double var = sq / static_cast<double>(C);
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps));
    const float mu = static_cast<float>(mean);
    for (std::size_t c = 0; c < C; ++c) {
      yr[c] = (xr[c] - mu) * inv * g[c] + b[c];
    }
  }
}

Matrix layernorm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                 float eps) {
  Matrix y;
  layernorm_into(x, gamma, beta, eps, y);
  return y;
}

void layernorm_backward(const Matrix& x, const Matrix& gamma, float eps,
                        const Matrix& dy, Matrix& dx, Matrix& dgamma,
                        Matrix& dbeta) {
  const std::size_t C = x.cols();
  if (!x.same_shape(dy)) throw DimensionError("layernorm_backward: shape mismatch");
  if (!dx.same_shape(x)) dx = Matrix(x.rows(), x.cols());
  const float* g = gamma.data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const float* xr = x.data() + r * C;
    const float* dyr = dy.data() + r * C;
    float* dxr = dx.data() + r * C;
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += xr[c];
    const double mean = sum / static_cast<double>(C);
    double sq = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = xr[c] - mean;
      sq += d * d;
    }
    const double var = sq / static_cast<double>(C);
    const double inv = 1.0 / std::sqrt(var + eps);
    double s1 = 0.0;  // sum(dy*gamma)
    double s2 = 0.0;  // sum(dy*gamma*xhat)
    for (std::size_t c = 0; c < C; ++c) {
      const double xhat = (xr[c] - mean) * inv;
      const double dg = static_cast<double>(dyr[c]) * g[c];
      dbeta.data()[c] += dyr[c];
      dgamma.data()[c] += static_cast<float>(dyr[c] * xhat);
      s1 += dg;
      s2 += dg * xhat;
    }
    const double invC = inv / static_cast<double>(C);
    for (std::size_t c = 0; c < C; ++c) {
      const double xhat = (xr[c] - mean) * inv;
      const double dg = static_cast<double>(dyr[c]) * g[c];
      dxr[c] = static_cast<float>(invC * (static_cast<double>(C) * dg - s1 - xhat * s2));
    }
  }
}

namespace {

void dropout_apply(const float* x, float* y, std::size_t n, float p, Mode mode,
                   const RngStream& rng, bool backward_unused) {
  (void)backward_unused;
  if (p < 0.0f || p >= 1.0f) {
    throw ParameterError("dropout: p must satisfy 0 <= p < 1");
  }
  if (mode == Mode::kEval || p == 0.0f) {
    if (y != x) std::memcpy(y, x, n * sizeof(float));
    return;
  }
  const float scale = 1.0f / (1.0f - p);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.uniform(i) >= p ? x[i] * scale : 0.0f;
  }
}

}  // namespace

void dropout_into(const Matrix& x, float p, Mode mode, const RngStream& rng,
                  Matrix& y) {
  if (!y.same_shape(x)) y = Matrix(x.rows(), x.cols());
  dropout_apply(x.data(), y.data(), x.size(), p, mode, rng, false);
}

Matrix dropout(const Matrix& x, float p, Mode mode, const RngStream& rng) {
  Matrix y;
  dropout_into(x, p, mode, rng, y);
  return y;
}

void dropout_backward_into(const Matrix& dy, float p, Mode mode,
                           const RngStream& rng, Matrix& dx) {
  if (!dx.same_shape(dy)) dx = Matrix(dy.rows(), dy.cols());
  dropout_apply(dy.data(), dx.data(), dy.size(), p, mode, rng, true);
}

float l1_loss(const Matrix& pred, const Matrix& target,
              const std::vector<std::uint8_t>* row_mask) {
  if (!pred.same_shape(target)) throw DimensionError("l1_loss: shape mismatch");
  if (row_mask && row_mask->size() != pred.rows()) {
    throw DimensionError("l1_loss: mask length must equal rows");
  }
  const std::size_t C = pred.cols();
  double sum = 0.0;
  std::size_t live_rows = 0;
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    if (row_mask && !(*row_mask)[r]) continue;
    ++live_rows;
    const float* pr = pred.data() + r * C;
    const float* tr = target.data() + r * C;
    for (std::size_t c = 0; c < C; ++c) sum += std::fabs(double(pr[c]) - double(tr[c]));
  }
  if (live_rows == 0 || C == 0) {
    throw DegenerateInputError("l1_loss: every frame is masked out");
  }
  return static_cast<float>(sum / (static_cast<double>(live_rows) * C));
}

Matrix l1_loss_backward(const Matrix& pred, const Matrix& target,
                        const std::vector<std::uint8_t>* row_mask) {
  if (!pred.same_shape(target)) throw DimensionError("l1_loss: shape mismatch");
  if (row_mask && row_mask->size() != pred.rows()) {
    throw DimensionError("l1_loss: mask length must equal rows");
  }
  const std::size_t C = pred.cols();
  std::size_t live_rows = 0;
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    if (!row_mask || (*row_mask)[r]) ++live_rows;
  }
  if (live_rows == 0 || C == 0) {
    throw DegenerateInputError("l1_loss: every frame is masked out");
  }
  const float w = 1.0f / (static_cast<float>(live_rows) * C);
  Matrix d(pred.rows(), C);
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    if (row_mask && !(*row_mask)[r]) continue;
    const float* pr = pred.data() + r * C;
    const float* tr = target.data() + r * C;
    float* dr = d.data() + r * C;
    for (std::size_t c = 0; c < C; ++c) {
      const float diff = pr[c] - tr[c];
      dr[c] = diff > 0.0f ? w : (diff < 0.0f ? -w : 0.0f);
    }
  }
  return d;
}

void adam_step(Param& param, AdamState& state, float lr, float beta1,
               float beta2, float eps) {
  if (!state.m.same_shape(param.value) || !state.v.same_shape(param.value)) {
    throw DimensionError("adam_step: state shape mismatch");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(double(beta1), t)));
  const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(double(beta2), t)));
  float* p = param.value.data();
  const float* g = param.grad.data();
  float* m = state.m.data();
  float* v = state.v.data();
  const std::size_t n = param.value.size();
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    const float mhat = m[i] * c1;
    const float vhat = v[i] * c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void affine_rows(const Matrix& x, const Matrix& w, const Matrix& b, Matrix& y,
                 std::size_t row_begin, std::size_t row_end) {
  if (b.size() != w.cols()) throw DimensionError("affine: bias length mismatch");
  matmul_rows(x, w, y, row_begin, row_end);
  const std::size_t N = w.cols();
  const float* bd = b.data();
  for (std::size_t r = row_begin; r < row_end; ++r) {
    float* yr = y.data() + r * N;
    for (std::size_t j = 0; j < N; ++j) yr[j] += bd[j];
  }
}

void affine_into(const Matrix& x, const Matrix& w, const Matrix& b, Matrix& y) {
  if (y.rows() != x.rows() || y.cols() != w.cols()) {
    y = Matrix(x.rows(), w.cols());
  }
  affine_rows(x, w, b, y, 0, x.rows());
}

void affine_backward_params(const Matrix& x, const Matrix& dy, Matrix& dw,
                            Matrix& db) {
  Matrix xt = transpose(x);
  Matrix dw_new = matmul(xt, dy);
  add_inplace(dw, dw_new);
  const std::size_t N = dy.cols();
  for (std::size_t j = 0; j < N; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < dy.rows(); ++r) s += dy.data()[r * N + j];
    db.data()[j] += static_cast<float>(s);
  }
}

void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                     Matrix& dx, Matrix& dw, Matrix& db) {
  affine_backward_params(x, dy, dw, db);
  Matrix wt = transpose(w);
  matmul_into(dy, wt, dx);
}

}  // namespace melmix
