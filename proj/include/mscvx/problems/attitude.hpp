// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "mscvx/collocation.hpp"
#include "mscvx/problem.hpp"
#include "mscvx/quaternion.hpp"
#include "mscvx/reference.hpp"
#include "mscvx/scvx.hpp"

namespace mscvx {

// Rest-to-rest attitude maneuver: rigid body kinematics on the unit
// quaternions with torque control and minimum control energy. Small
// enough to converge in a handful of iterations, curved enough to
// exercise every quaternion code path.
struct AttitudeToyParams {
  Eigen::Vector3d inertia{1.0, 0.8, 1.2};
  Quat q_initial{1.0, 0.0, 0.0, 0.0};
  // 120 degree rotation about the (1,1,1) diagonal.
  Quat q_final = quat_exp(Eigen::Vector3d::Constant(kTurnCoord));
  Eigen::Vector3d omega_initial = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_final = Eigen::Vector3d::Zero();
  double t_f = 3.0;
  int segments = 3;
  int degree = 8;

  // Half angle of the default turn along each axis: 120 degrees total
  // rotation, so ||phi|| = pi/3 with phi along the unit diagonal.
  static constexpr double kTurnCoord = 1.0471975511965976 / 1.7320508075688772;
};

// State chart (quaternion, body rate), control chart R^3 torque,
// running cost |torque|^2 with its exact Hessian, both endpoints
// pinned.
ProblemDefinition attitude_toy_problem(const AttitudeToyParams& params = {});

HpGrid attitude_toy_grid(const AttitudeToyParams& params = {});

// Geodesic between the endpoint states, zero nominal torque.
ReferenceTrajectory attitude_toy_initial_reference(
    const AttitudeToyParams& params, const HpGrid& grid);

ScvxSettings attitude_toy_settings();

}  // namespace mscvx
