#include <doctest.h>

#include <cmath>

#include "melmix/gradcheck.hpp"
#include "melmix/matrix.hpp"
#include "melmix/nn.hpp"
#include "melmix/simd_math.hpp"
#include "test_helpers.hpp"

using namespace melmix;
using namespace melmix::test;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("matmul identity returns the operand bitwise") {
  Matrix m = random_matrix(3, 4, 11);
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0f;
  const Matrix prod = matmul(eye, m);
  CHECK(bitwise_equal(prod, m));

  // (A*I)*B = A*B for the same evaluation order.
  Matrix a = random_matrix(5, 5, 12);
  Matrix b = random_matrix(5, 6, 13);
  Matrix eye5(5, 5);
  for (int i = 0; i < 5; ++i) eye5(i, i) = 1.0f;
  CHECK(bitwise_equal(matmul(matmul(a, eye5), b), matmul(a, b)));
}

TEST_CASE("matmul hand example") {
  Matrix a(2, 2, {1, 2, 3, 4});
  Matrix b(2, 1, {1, 1});
  const Matrix c = matmul(a, b);
  CHECK(c(0, 0) == doctest::Approx(3.0));
  CHECK(c(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul matches the naive triple-loop oracle") {
  const Matrix a = random_matrix(7, 5, 21);
  const Matrix b = random_matrix(5, 3, 22);
  CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-6);

  // Larger odd shapes cover the kernel's remainder paths.
  const Matrix c = random_matrix(9, 33, 23);
  const Matrix d = random_matrix(33, 41, 24);
  CHECK(max_abs_diff(matmul(c, d), naive_matmul(c, d)) < 1e-4);
}

TEST_CASE("matmul rejects shape mismatches") {
  Matrix a(2, 3), b(2, 2);
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("matmul row range equals full product") {
  const Matrix a = random_matrix(10, 6, 31);
  const Matrix b = random_matrix(6, 8, 32);
  const Matrix full = matmul(a, b);
  Matrix partial(10, 8);
  matmul_rows(a, b, partial, 0, 4);
  matmul_rows(a, b, partial, 4, 10);
  CHECK(bitwise_equal(full, partial));
}

TEST_CASE("erf approximation matches the standard library") {
  for (double x = -6.0; x <= 6.0; x += 0.0137) {
    CHECK(std::fabs(erf_f32(static_cast<float>(x)) - std::erf(x)) < 3e-7);
  }
}

TEST_CASE("gelu pinned values") {
  Matrix x(1, 3, {0.0f, 10.0f, 1.0f});
  const Matrix y = gelu(x);
  CHECK(y(0, 0) == 0.0f);
  CHECK(y(0, 1) == doctest::Approx(10.0).epsilon(1e-7));
  // Oracle: 0.5*(1+erf(1/sqrt(2))) in double.
  const double expected = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
  CHECK(std::fabs(double(y(0, 2)) - expected) < 1e-6);
  CHECK(std::fabs(double(y(0, 2)) - 0.841345) < 1e-6);
}

TEST_CASE("gelu is a valley: decreasing then increasing over [-5, 5]") {
  // The exact erf form dips to about -0.17 at x ~ -0.7518; monotone rise
  // only holds right of the minimum.
  float prev = 0.0f;
  bool first = true;
  for (double xv = -5.0; xv <= 5.0; xv += 0.01) {
    Matrix x(1, 1, {static_cast<float>(xv)});
    const float y = gelu(x)(0, 0);
    if (!first) {
      if (xv <= -0.76) {
        CHECK(y <= prev + 1e-6f);
      } else if (xv >= -0.74) {
        CHECK(y >= prev - 1e-6f);
      }
    }
    prev = y;
    first = false;
  }
}

TEST_CASE("gelu backward matches finite differences") {
  Param x("x", 2, 5);
  x.value = random_matrix(2, 5, 41, -2.0f, 2.0f);
  const Matrix dy = Matrix::filled(2, 5, 1.0f);
  const auto loss = [&]() {
    const Matrix y = gelu(x.value);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i];
    return s;
  };
  const auto grads = [&]() { x.grad = gelu_backward(x.value, dy); };
  Param* params[] = {&x};
  GradCheckOptions opt;
  opt.h = 1e-3;
  CHECK(gradient_check(loss, grads, params, opt) < 1e-3);
}

TEST_CASE("layernorm pinned examples") {
  Matrix gamma = Matrix::filled(1, 3, 1.0f);
  Matrix beta(1, 3);

  Matrix constant(1, 3, {5, 5, 5});
  const Matrix y0 = layernorm(constant, gamma, beta, 1e-5f);
  for (int c = 0; c < 3; ++c) CHECK(y0(0, c) == doctest::Approx(0.0));

  Matrix ramp(1, 3, {1, 2, 3});
  const Matrix y1 = layernorm(ramp, gamma, beta, 1e-10f);
  CHECK(y1(0, 0) == doctest::Approx(-1.22474).epsilon(1e-4));
  CHECK(y1(0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(y1(0, 2) == doctest::Approx(1.22474).epsilon(1e-4));

  Matrix b2(1, 3, {7, 8, 9});
  const Matrix y2 = layernorm(Matrix(2, 3), gamma, b2, 1e-5f);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(y2(r, c) == doctest::Approx(b2(0, c)));
  }
}

TEST_CASE("layernorm normalizes rows before the affine") {
  const Matrix x = random_matrix(20, 64, 51, -3.0f, 5.0f);
  Matrix gamma = Matrix::filled(1, 64, 1.0f);
  Matrix beta(1, 64);
  const Matrix y = layernorm(x, gamma, beta, 1e-5f);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < 64; ++c) mean += y(r, c);
    mean /= 64.0;
    for (std::size_t c = 0; c < 64; ++c) {
      var += (y(r, c) - mean) * (y(r, c) - mean);
    }
    var /= 64.0;
    CHECK(std::fabs(mean) < 1e-5);
    CHECK(std::fabs(var - 1.0) < 1e-3);
  }
}

TEST_CASE("layernorm rejects bad shapes and eps") {
  Matrix x(2, 3);
  Matrix gamma = Matrix::filled(1, 4, 1.0f);
  Matrix beta(1, 4);
  CHECK_THROWS_AS(layernorm(x, gamma, beta, 1e-5f), DimensionError);
  Matrix g3 = Matrix::filled(1, 3, 1.0f);
  Matrix b3(1, 3);
  CHECK_THROWS_AS(layernorm(x, g3, b3, 0.0f), ParameterError);
}

TEST_CASE("layernorm backward matches finite differences") {
  const std::size_t R = 3, C = 8;
  Param x("x", R, C);
  x.value = random_matrix(R, C, 61, -2.0f, 2.0f);
  Param gamma("g", 1, C);
  gamma.value = random_matrix(1, C, 62, 0.5f, 1.5f);
  Param beta("b", 1, C);
  beta.value = random_matrix(1, C, 63, -0.5f, 0.5f);
  const Matrix dy = random_matrix(R, C, 64);

  const auto loss = [&]() {
    const Matrix y = layernorm(x.value, gamma.value, beta.value, 1e-5f);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      s += double(y.data()[i]) * dy.data()[i];
    }
    return s;
  };
  const auto grads = [&]() {
    x.zero_grad();
    gamma.zero_grad();
    beta.zero_grad();
    layernorm_backward(x.value, gamma.value, 1e-5f, dy, x.grad, gamma.grad,
                       beta.grad);
  };
  Param* params[] = {&x, &gamma, &beta};
  GradCheckOptions opt;
  opt.h = 1e-3;
  CHECK(gradient_check(loss, grads, params, opt) < 1e-3);
}

TEST_CASE("dropout identity cases") {
  const Matrix x = random_matrix(4, 9, 71);
  const RngStream rng{123, 7};
  CHECK(bitwise_equal(dropout(x, 0.0f, Mode::kTrain, rng), x));
  CHECK(bitwise_equal(dropout(x, 0.5f, Mode::kEval, rng), x));
}

TEST_CASE("dropout rejects p outside [0, 1)") {
  const Matrix x(2, 2);
  const RngStream rng{1, 1};
  CHECK_THROWS_AS(dropout(x, 1.0f, Mode::kTrain, rng), ParameterError);
  CHECK_THROWS_AS(dropout(x, -0.1f, Mode::kTrain, rng), ParameterError);
}

TEST_CASE("train dropout preserves the mean within 5%") {
  const Matrix x = Matrix::filled(200, 200, 1.0f);
  double grand = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix y = dropout(x, 0.5f, Mode::kTrain, RngStream{seed, 9});
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i];
    grand += s / y.size();
  }
  CHECK(std::fabs(grand / 5.0 - 1.0) < 0.05);
}

TEST_CASE("dropout masks are reproducible and order-free") {
  const Matrix x = random_matrix(8, 8, 81);
  const RngStream rng{42, 3};
  const Matrix y1 = dropout(x, 0.5f, Mode::kTrain, rng);
  const Matrix y2 = dropout(x, 0.5f, Mode::kTrain, rng);
  CHECK(bitwise_equal(y1, y2));
  const Matrix y3 = dropout(x, 0.5f, Mode::kTrain, rng.fork(1));
  CHECK(!bitwise_equal(y1, y3));

  // Backward uses the same mask: zero entries in y correspond to zero
  // gradient, survivors are scaled.
  Matrix dy = Matrix::filled(8, 8, 1.0f);
  Matrix dx;
  dropout_backward_into(dy, 0.5f, Mode::kTrain, rng, dx);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y1.data()[i] == 0.0f && x.data()[i] != 0.0f) {
      CHECK(dx.data()[i] == 0.0f);
    } else if (x.data()[i] != 0.0f) {
      CHECK(dx.data()[i] == doctest::Approx(2.0));
    }
  }
}

TEST_CASE("l1 loss pinned examples") {
  Matrix a(1, 2, {0, 1});
  Matrix b(1, 2, {1, 1});
  CHECK(l1_loss(a, a) == 0.0f);
  CHECK(l1_loss(a, b) == doctest::Approx(0.5));
}

TEST_CASE("masked l1 equals the loss on the sliced submatrix") {
  const Matrix pred = random_matrix(6, 10, 91);
  const Matrix target = random_matrix(6, 10, 92);
  std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 1};
  const float masked = l1_loss(pred, target, &mask);

  Matrix pred_slice(4, 10), target_slice(4, 10);
  std::size_t out = 0;
  for (std::size_t r = 0; r < 6; ++r) {
    if (!mask[r]) continue;
    for (std::size_t c = 0; c < 10; ++c) {
      pred_slice(out, c) = pred(r, c);
      target_slice(out, c) = target(r, c);
    }
    ++out;
  }
  CHECK(masked == doctest::Approx(l1_loss(pred_slice, target_slice)).epsilon(1e-7));
}

TEST_CASE("l1 with every frame masked is a degenerate input") {
  Matrix a(2, 2), b(2, 2);
  std::vector<std::uint8_t> mask = {0, 0};
  CHECK_THROWS_AS(l1_loss(a, b, &mask), DegenerateInputError);
}

TEST_CASE("l1 backward matches finite differences") {
  Param pred("p", 3, 4);
  pred.value = random_matrix(3, 4, 95);
  const Matrix target = random_matrix(3, 4, 96);
  std::vector<std::uint8_t> mask = {1, 0, 1};
  const auto loss = [&]() { return double(l1_loss(pred.value, target, &mask)); };
  const auto grads = [&]() { pred.grad = l1_loss_backward(pred.value, target, &mask); };
  Param* params[] = {&pred};
  GradCheckOptions opt;
  opt.h = 1e-3;
  CHECK(gradient_check(loss, grads, params, opt) < 1e-3);
}

TEST_CASE("adam with zero gradient leaves the value unchanged") {
  Param p("p", 2, 2);
  p.value = random_matrix(2, 2, 101);
  const Matrix before = p.value;
  AdamState st(p);
  adam_step(p, st, 1e-3f, 0.9f, 0.999f, 1e-8f);
  CHECK(bitwise_equal(p.value, before));
  CHECK(st.step == 1);
}

TEST_CASE("adam first step moves by about -lr on a positive gradient") {
  Param p("p", 1, 1);
  p.grad(0, 0) = 0.5f;
  AdamState st(p);
  adam_step(p, st, 1e-3f, 0.9f, 0.999f, 1e-8f);
  CHECK(p.value(0, 0) == doctest::Approx(-1e-3).epsilon(1e-4));
}

TEST_CASE("adam trace matches a scalar oracle over two steps") {
  // Independent scalar Adam, double precision.
  const double lr = 2e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.3;
  double m = 0.0, v = 0.0, val = 0.25;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    val -= lr * mh / (std::sqrt(vh) + eps);
  }

  Param p("p", 1, 1);
  p.value(0, 0) = 0.25f;
  AdamState st(p);
  for (int t = 0; t < 2; ++t) {
    p.grad(0, 0) = 0.3f;
    adam_step(p, st, 2e-3f, 0.9f, 0.999f, 1e-8f);
  }
  CHECK(p.value(0, 0) == doctest::Approx(val).epsilon(1e-5));
}

TEST_CASE("adam rejects mismatched state shapes") {
  Param p("p", 2, 2);
  AdamState st;
  st.m = Matrix(1, 1);
  st.v = Matrix(1, 1);
  CHECK_THROWS_AS(adam_step(p, st, 1e-3f, 0.9f, 0.999f, 1e-8f), DimensionError);
}

TEST_CASE("gradient check: linear layer with l1 loss") {
  Param w("w", 4, 4);
  w.value = random_matrix(4, 4, 111);
  Param b("b", 1, 4);
  b.value = random_matrix(1, 4, 112);
  const Matrix x = random_matrix(4, 4, 113);
  const Matrix target = random_matrix(4, 4, 114);

  const auto loss = [&]() {
    Matrix y;
    affine_into(x, w.value, b.value, y);
    return double(l1_loss(y, target));
  };
  const auto grads = [&]() {
    w.zero_grad();
    b.zero_grad();
    Matrix y;
    affine_into(x, w.value, b.value, y);
    const Matrix dy = l1_loss_backward(y, target);
    affine_backward_params(x, dy, w.grad, b.grad);
  };
  Param* params[] = {&w, &b};
  GradCheckOptions opt;
  opt.h = 1e-3;
  CHECK(gradient_check(loss, grads, params, opt) < 1e-3);
}

TEST_CASE("gradient check reports zero in a flat-zero region") {
  Param w("w", 2, 2);
  const Matrix x(2, 2);  // zeros
  const auto loss = [&]() {
    const Matrix y = matmul(x, w.value);
    return double(l1_loss(y, Matrix(2, 2)));
  };
  const auto grads = [&]() { w.zero_grad(); };
  Param* params[] = {&w};
  CHECK(gradient_check(loss, grads, params) == 0.0);
}

TEST_CASE("gradient check validates h") {
  Param w("w", 1, 1);
  const auto loss = [&]() { return 0.0; };
  const auto grads = [&]() {};
  Param* params[] = {&w};
  GradCheckOptions opt;
  opt.h = 1e-6;
  CHECK_THROWS_AS(gradient_check(loss, grads, params, opt), ParameterError);
}

TEST_CASE("primitives are deterministic for fixed inputs") {
  const Matrix a = random_matrix(17, 23, 121);
  const Matrix b = random_matrix(23, 9, 122);
  CHECK(bitwise_equal(matmul(a, b), matmul(a, b)));
  CHECK(bitwise_equal(gelu(a), gelu(a)));
}

TEST_SUITE_END();
