// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "mscvx/collocation.hpp"
#include "mscvx/problem.hpp"
#include "mscvx/reference.hpp"
#include "mscvx/scvx.hpp"

namespace mscvx {

// Linear-quadratic double integrator on flat R^2. Everything here is
// exactly quadratic, so a single convexification step already solves
// the problem; the Euclidean regression tests lean on that.
struct LqParams {
  Eigen::Matrix2d drift = (Eigen::Matrix2d() << 0.0, 1.0, 0.0, 0.0).finished();
  Eigen::Vector2d input{0.0, 1.0};
  Eigen::Matrix2d state_weight = Eigen::Matrix2d::Identity();
  double control_weight = 1.0;
  Eigen::Vector2d x_initial{1.0, 0.0};
  double t_f = 2.0;
  int segments = 2;
  int degree = 6;
};

// Initial state pinned, final state free; cost x'Qx + R u^2 with exact
// Hessians supplied.
ProblemDefinition lq_problem(const LqParams& params = {});

HpGrid lq_grid(const LqParams& params = {});

// Constant reference at the initial state, zero control.
ReferenceTrajectory lq_initial_reference(const LqParams& params,
                                         const HpGrid& grid);

}  // namespace mscvx
