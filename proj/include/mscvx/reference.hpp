// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Core>

#include "mscvx/chart.hpp"
#include "mscvx/collocation.hpp"

namespace mscvx {

// Reference trajectory on the hp grid: one ambient state per node
// (i = 0..p within each segment) and one ambient control per
// collocation node (i = 1..p). The state at a segment interface is
// stored twice, as node p of segment h and node 0 of segment h+1, and
// the two copies must stay bitwise identical; the update step writes
// them from a single retraction to guarantee that.
struct ReferenceTrajectory {
  // states[h][i], i = 0..p
  std::vector<std::vector<Eigen::VectorXd>> states;
  // controls[h][i-1], i = 1..p
  std::vector<std::vector<Eigen::VectorXd>> controls;
  // Half-duration of one segment in physical time.
  double sigma_bar = 1.0;

  const Eigen::VectorXd& state(int h, int i) const { return states[h][i]; }
  const Eigen::VectorXd& control(int h, int i) const {
    return controls[h][i - 1];
  }

  int segment_count() const { return static_cast<int>(states.size()); }
  int degree() const { return static_cast<int>(controls.front().size()); }

  // Shape agreement with the grid, chart membership of every point to
  // tol, bitwise interface agreement, sigma consistent with the grid
  // when the final time is fixed. Throws ArgumentError on violation.
  void validate(const HpGrid& grid, const ManifoldChart& state_chart,
                const ManifoldChart& control_chart, double tol = 1e-9) const;

  // Largest membership violation over all states and controls.
  double manifold_violation(const ManifoldChart& state_chart,
                            const ManifoldChart& control_chart) const;
};

// Reference built from the boundary data: states follow a single
// retraction line from x_init to x_final sampled at the node times,
// controls are constant at u_nominal, sigma matches the grid.
ReferenceTrajectory make_initial_reference(const HpGrid& grid,
                                           const ManifoldChart& state_chart,
                                           const Eigen::VectorXd& x_init,
                                           const Eigen::VectorXd& x_final,
                                           const Eigen::VectorXd& u_nominal);

}  // namespace mscvx
