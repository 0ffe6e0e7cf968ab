#include "melmix/simd_math.hpp"

#include <cstring>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define MELMIX_HAVE_AVX2 1
#endif

namespace melmix {

namespace {

// exp polynomial on [-0.347, 0.347] (Cephes coefficients).
constexpr float kExpC0 = 1.9875691500e-4f;
constexpr float kExpC1 = 1.3981999507e-3f;
constexpr float kExpC2 = 8.3334519073e-3f;
constexpr float kExpC3 = 4.1665795894e-2f;
constexpr float kExpC4 = 1.6666665459e-1f;
constexpr float kExpC5 = 5.0000001201e-1f;
constexpr float kLog2E = 1.44269504088896341f;
constexpr float kLn2Hi = 0.693359375f;
constexpr float kLn2Lo = -2.12194440e-4f;
constexpr float kExpLo = -87.33655f;
constexpr float kExpHi = 88.72283f;

// Rational erf fit, max absolute error below 1.5e-7 in exact arithmetic.
constexpr float kErfP = 0.3275911f;
constexpr float kErfA1 = 0.254829592f;
constexpr float kErfA2 = -0.284496736f;
constexpr float kErfA3 = 1.421413741f;
constexpr float kErfA4 = -1.453152027f;
constexpr float kErfA5 = 1.061405429f;

#ifdef MELMIX_HAVE_AVX2

inline __m256 exp_ps(__m256 x) {
  x = _mm256_min_ps(_mm256_max_ps(x, _mm256_set1_ps(kExpLo)),
                    _mm256_set1_ps(kExpHi));
  const __m256 n = _mm256_round_ps(
      _mm256_mul_ps(x, _mm256_set1_ps(kLog2E)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256 r = _mm256_fnmadd_ps(n, _mm256_set1_ps(kLn2Hi), x);
  r = _mm256_fnmadd_ps(n, _mm256_set1_ps(kLn2Lo), r);
  __m256 y = _mm256_set1_ps(kExpC0);
  y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kExpC1));
  y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kExpC2));
  y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kExpC3));
  y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kExpC4));
  y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kExpC5));
  y = _mm256_fmadd_ps(y, _mm256_mul_ps(r, r), _mm256_add_ps(r, _mm256_set1_ps(1.0f)));
  const __m256i e = _mm256_slli_epi32(
      _mm256_add_epi32(_mm256_cvtps_epi32(n), _mm256_set1_epi32(127)), 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(e));
}

inline __m256 erf_ps(__m256 x) {
  const __m256 sign_mask = _mm256_set1_ps(-0.0f);
  const __m256 sign = _mm256_and_ps(x, sign_mask);
  const __m256 ax = _mm256_andnot_ps(sign_mask, x);
  const __m256 t = _mm256_div_ps(
      _mm256_set1_ps(1.0f),
      _mm256_fmadd_ps(_mm256_set1_ps(kErfP), ax, _mm256_set1_ps(1.0f)));
  __m256 p = _mm256_fmadd_ps(_mm256_set1_ps(kErfA5), t, _mm256_set1_ps(kErfA4));
  p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(kErfA3));
  p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(kErfA2));
  p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(kErfA1));
  p = _mm256_mul_ps(p, t);
  const __m256 e = exp_ps(_mm256_mul_ps(_mm256_sub_ps(_mm256_setzero_ps(), ax), ax));
  const __m256 y = _mm256_fnmadd_ps(p, e, _mm256_set1_ps(1.0f));
  return _mm256_or_ps(y, sign);
}

template <typename Kernel>
void apply_ps(Kernel kernel, const float* x, float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, kernel(_mm256_loadu_ps(x + i)));
  }
  if (i < n) {
    float in[8] = {0};
    float out[8];
    std::memcpy(in, x + i, (n - i) * sizeof(float));
    _mm256_storeu_ps(out, kernel(_mm256_loadu_ps(in)));
    std::memcpy(y + i, out, (n - i) * sizeof(float));
  }
}

#else

inline float exp_scalar(float x) {
  x = x < kExpLo ? kExpLo : (x > kExpHi ? kExpHi : x);
  const float nf = static_cast<float>(static_cast<int>(
      x * kLog2E + (x >= 0.0f ? 0.5f : -0.5f)));
  float r = x - nf * kLn2Hi;
  r -= nf * kLn2Lo;
  float y = kExpC0;
  y = y * r + kExpC1;
  y = y * r + kExpC2;
  y = y * r + kExpC3;
  y = y * r + kExpC4;
  y = y * r + kExpC5;
  y = y * r * r + r + 1.0f;
  union {
    std::uint32_t u;
    float f;
  } scale;
  scale.u = static_cast<std::uint32_t>(static_cast<int>(nf) + 127) << 23;
  return y * scale.f;
}

inline float erf_scalar(float x) {
  const float ax = x < 0.0f ? -x : x;
  const float t = 1.0f / (1.0f + kErfP * ax);
  float p = kErfA5 * t + kErfA4;
  p = p * t + kErfA3;
  p = p * t + kErfA2;
  p = p * t + kErfA1;
  p *= t;
  const float y = 1.0f - p * exp_scalar(-ax * ax);
  return x < 0.0f ? -y : y;
}

#endif

}  // namespace

void exp_f32(const float* x, float* y, std::size_t n) {
#ifdef MELMIX_HAVE_AVX2
  apply_ps([](__m256 v) { return exp_ps(v); }, x, y, n);
#else
  for (std::size_t i = 0; i < n; ++i) y[i] = exp_scalar(x[i]);
#endif
}

void erf_f32(const float* x, float* y, std::size_t n) {
#ifdef MELMIX_HAVE_AVX2
  apply_ps([](__m256 v) { return erf_ps(v); }, x, y, n);
#else
  for (std::size_t i = 0; i < n; ++i) y[i] = erf_scalar(x[i]);
#endif
}

float exp_f32(float x) {
  float y;
  exp_f32(&x, &y, 1);
  return y;
}

float erf_f32(float x) {
  float y;
  erf_f32(&x, &y, 1);
  return y;
}

}  // namespace melmix
