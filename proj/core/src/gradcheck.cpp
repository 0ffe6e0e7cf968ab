#include "melmix/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "melmix/error.hpp"
#include "melmix/rng.hpp"

namespace melmix {

double gradient_check(const std::function<double()>& loss,
                      const std::function<void()>& compute_grads,
                      std::span<Param* const> params,
                      const GradCheckOptions& options) {
  if (options.h < 1e-4 || options.h > 1e-2) {
    throw ParameterError("gradient_check: h must be in [1e-4, 1e-2]");
  }
  compute_grads();
  double max_rel = 0.0;
  RngStream pick{options.seed, 0x67726164ull};
  std::uint64_t draw = 0;
  for (Param* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords;
    if (options.max_coords == 0 || options.max_coords >= n) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      coords.reserve(options.max_coords);
      for (std::size_t i = 0; i < options.max_coords; ++i) {
        coords.push_back(pick.bits(draw++) % n);
      }
    }
    for (std::size_t idx : coords) {
      float* slot = p->value.data() + idx;
      const float orig = *slot;
      const float hi = orig + static_cast<float>(options.h);
      const float lo = orig - static_cast<float>(options.h);
      *slot = hi;
      const double f_hi = loss();
      *slot = lo;
      const double f_lo = loss();
      *slot = orig;
      if (!std::isfinite(f_hi) || !std::isfinite(f_lo)) {
        throw NumericError("gradient_check: non-finite loss");
      }
      // The step actually taken is hi - lo after float rounding.
      const double fd = (f_hi - f_lo) / (static_cast<double>(hi) - lo);
      const double an = p->grad.data()[idx];
      if (std::fabs(fd - an) < options.agree_atol) continue;
      const double scale = std::max(std::fabs(fd), std::fabs(an));
      max_rel = std::max(max_rel, std::fabs(fd - an) / scale);
    }
  }
  return max_rel;
}

}  // namespace melmix
