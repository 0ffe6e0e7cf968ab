#pragma once

#include <functional>
#include <span>

#include "melmix/nn.hpp"

namespace melmix {

struct GradCheckOptions {
  double h = 1e-3;             // central-difference step, in [1e-4, 1e-2]
  std::size_t max_coords = 0;  // per param; 0 = every coordinate
  std::uint64_t seed = 0;      // coordinate sampling seed
  // Absolute agreement floor: |fd - analytic| below this counts as a match.
  // Single-precision forwards put an h-dependent noise floor on fd; a wrong
  // backward shows up as a gradient-scale disagreement far above it.
  double agree_atol = 1e-4;
};

// Compares the analytic gradient in each sampled Param coordinate against a
// central difference of `loss`. `compute_grads` must populate param.grad for
// the current param values; `loss` must evaluate the same scalar without
// touching grads. Returns the maximum of |fd - g| / max(|fd|, |g|) over
// sampled coordinates that disagree by at least agree_atol (0 when every
// coordinate agrees). Throws NumericError if the loss is not finite.
double gradient_check(const std::function<double()>& loss,
                      const std::function<void()>& compute_grads,
                      std::span<Param* const> params,
                      const GradCheckOptions& options = {});

}  // namespace melmix
