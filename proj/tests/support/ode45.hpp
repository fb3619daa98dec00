// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Core>

namespace mscvx::testsupport {

// Adaptive Dormand-Prince 5(4) integrator, used as an independent
// oracle against the collocation machinery. Deliberately has nothing in
// common with the solver path: no charts, no retractions, plain ambient
// coordinates.
inline Eigen::VectorXd integrate_ode45(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    Eigen::VectorXd y, double t0, double t1, double rel_tol = 1e-11,
    double abs_tol = 1e-13) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695,
                      e4 = 393.0 / 640, e5 = -92097.0 / 339200,
                      e6 = 187.0 / 2100, e7 = 1.0 / 40;

  const double span = t1 - t0;
  if (span == 0.0) return y;
  double t = t0;
  double h = span / 16.0;
  const double h_min = std::abs(span) * 1e-14;
  int steps = 0;
  while ((span > 0.0) ? t < t1 : t > t1) {
    if (++steps > 1000000) {
      throw std::runtime_error("integrate_ode45: step budget exhausted");
    }
    if ((span > 0.0) ? (t + h > t1) : (t + h < t1)) h = t1 - t;

    const Eigen::VectorXd k1 = f(t, y);
    const Eigen::VectorXd k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Eigen::VectorXd k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 =
        f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 =
        f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 =
        f(t + h,
          y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd y5 =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = f(t + h, y5);
    const Eigen::VectorXd y4 =
        y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double scale =
          abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double r = (y5[i] - y4[i]) / scale;
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0) {
      t += h;
      y = y5;
    }
    const double grow =
        err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(grow, 0.2, 5.0);
    if (std::abs(h) < h_min) {
      throw std::runtime_error("integrate_ode45: step size underflow");
    }
  }
  return y;
}

}  // namespace mscvx::testsupport
