// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/reference.hpp"

#include <cmath>
#include <sstream>

#include "mscvx/errors.hpp"

namespace mscvx {

void ReferenceTrajectory::validate(const HpGrid& grid,
                                   const ManifoldChart& state_chart,
                                   const ManifoldChart& control_chart,
                                   double tol) const {
  const int segments = static_cast<int>(grid.segments);
  const int p = grid.rule.degree;
  if (static_cast<int>(states.size()) != segments ||
      static_cast<int>(controls.size()) != segments) {
    throw ArgumentError("reference trajectory: segment count disagrees "
                        "with the grid");
  }
  if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar)) {
    throw ArgumentError("reference trajectory: sigma must be positive");
  }
  for (int h = 0; h < segments; ++h) {
    if (static_cast<int>(states[h].size()) != p + 1 ||
        static_cast<int>(controls[h].size()) != p) {
      throw ArgumentError("reference trajectory: node count disagrees "
                          "with the collocation degree");
    }
    for (int i = 0; i <= p; ++i) {
      if (states[h][i].size() != state_chart.ambient_dim()) {
        throw ArgumentError("reference trajectory: state dimension "
                            "disagrees with the chart");
      }
      state_chart.check_point(states[h][i], tol);
    }
    for (int i = 1; i <= p; ++i) {
      if (control(h, i).size() != control_chart.ambient_dim()) {
        throw ArgumentError("reference trajectory: control dimension "
                            "disagrees with the chart");
      }
      control_chart.check_point(control(h, i), tol);
    }
  }
  for (int h = 0; h + 1 < segments; ++h) {
    const Eigen::VectorXd& left = states[h][p];
    const Eigen::VectorXd& right = states[h + 1][0];
    if (!(left.array() == right.array()).all()) {
      std::ostringstream os;
      os << "reference trajectory: interface between segments " << h
         << " and " << h + 1 << " is not bitwise continuous";
      throw ArgumentError(os.str());
    }
  }
}

double ReferenceTrajectory::manifold_violation(
    const ManifoldChart& state_chart,
    const ManifoldChart& control_chart) const {
  double worst = 0.0;
  for (const auto& seg : states) {
    for (const auto& x : seg) {
      worst = std::max(worst, state_chart.membership_violation(x));
    }
  }
  for (const auto& seg : controls) {
    for (const auto& u : seg) {
      worst = std::max(worst, control_chart.membership_violation(u));
    }
  }
  return worst;
}

ReferenceTrajectory make_initial_reference(const HpGrid& grid,
                                           const ManifoldChart& state_chart,
                                           const Eigen::VectorXd& x_init,
                                           const Eigen::VectorXd& x_final,
                                           const Eigen::VectorXd& u_nominal) {
  state_chart.check_point(x_init);
  state_chart.check_point(x_final);
  const int segments = static_cast<int>(grid.segments);
  const int p = grid.rule.degree;

  // One retraction line from start to goal, sampled at the node times.
  // Curved blocks follow constant-rate retraction curves, so every
  // sample is on the chart by construction.
  const Eigen::VectorXd line = state_chart.inverse_retract(x_init, x_final);
  const double t0 = grid.t0;
  const double horizon = grid.tf - grid.t0;

  // Interface nodes are computed once and stored into both adjacent
  // segments so the copies start out bitwise identical.
  ReferenceTrajectory ref;
  ref.sigma_bar = grid.sigma();
  ref.states.assign(segments, std::vector<Eigen::VectorXd>(p + 1));
  ref.controls.assign(segments,
                      std::vector<Eigen::VectorXd>(p, u_nominal));
  for (int h = 0; h < segments; ++h) {
    const int first = h == 0 ? 0 : 1;
    for (int i = first; i <= p; ++i) {
      const double s = (grid.node_time(h, i) - t0) / horizon;
      ref.states[h][i] = state_chart.retract(x_init, s * line);
    }
    if (h > 0) ref.states[h][0] = ref.states[h - 1][p];
  }
  return ref;
}

}  // namespace mscvx
