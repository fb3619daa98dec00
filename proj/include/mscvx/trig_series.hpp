// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

namespace mscvx {

// Trigonometric ratios that appear in exponential maps and their
// differentials. Each switches to a Taylor expansion below a threshold
// chosen so that the two branches agree to better than 1e-12 at the
// switch point: the direct form must still be well conditioned there and
// the truncated series already converged.

inline constexpr double kSmallAngle = 1e-4;

// sin(t) / t. The direct quotient has no cancellation, the series just
// avoids the division near zero.
inline double sinc(double t) {
  if (std::abs(t) < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

// (1 - cos(t)) / t^2, limit 1/2. Uses the half-angle identity
// 1 - cos(t) = 2 sin^2(t/2), which is free of cancellation, so the
// switch point can stay small.
inline double one_minus_cos_over_sq(double t) {
  if (std::abs(t) < kSmallAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// (t - sin(t)) / t^3, limit 1/6. The numerator cancels to third order,
// which costs the direct quotient about eps/t^2 in absolute accuracy, so
// the series region extends to 0.02 where the direct form is good to
// roughly 3e-13 and the four-term series to far better.
inline double t_minus_sin_over_cube(double t) {
  if (std::abs(t) < 0.02) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 -
           t2 * t2 * t2 / 362880.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

}  // namespace mscvx
