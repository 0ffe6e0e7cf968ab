#pragma once

#include <cstddef>

namespace melmix {

// Elementwise transcendentals used by the activation kernels. Single
// precision, vectorized where the build allows, with identical results for
// the array and scalar entry points within one build.

// erf with absolute error below 3e-7 over the full float range.
float erf_f32(float x);
void erf_f32(const float* x, float* y, std::size_t n);

// exp with relative error around 1 ulp; clamps to the finite float range.
float exp_f32(float x);
void exp_f32(const float* x, float* y, std::size_t n);

}  // namespace melmix
