// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>

#include <Eigen/Core>

#include "mscvx/collocation.hpp"
#include "mscvx/problem.hpp"
#include "mscvx/quaternion.hpp"
#include "mscvx/reference.hpp"
#include "mscvx/scvx.hpp"

namespace mscvx {

// Six degree of freedom powered descent. State chart is the product
// (mass, position, velocity, attitude quaternion, body rate); control
// chart is thrust magnitude times a unit direction on the sphere, so
// the solved thrust axis never needs renormalizing.
//
// Dynamics in ambient coordinates, with C the body-to-inertial rotation
// of q and the thrust applied along the body direction u:
//
//   m'     = -alpha T
//   r'     = v
//   v'     = (T / m) C(q) u + g - D / m
//   q'     = (1/2) q (0, omega)
//   omega' = J^{-1} (l_arm x (T u) - omega x J omega)
//
// D is an aerodynamic force, zero under the default drag model.

enum class DragModel {
  Zero,
  // Caller supplies LandingParams::drag; the analytic dynamics Jacobian
  // is dropped and the transcription falls back to finite differences.
  UserSupplied,
};

// Physical constants and constraint bounds. The defaults are a
// self-consistent nondimensional vehicle chosen for this code base, not
// measurements of any real rocket; data/landing_nominal.cfg carries the
// same numbers in file form.
struct LandingParams {
  double alpha = 0.01;                    // mass depletion per unit thrust
  Eigen::Vector3d g_vec{-1.0, 0.0, 0.0};  // gravity, +x is up
  Eigen::Matrix3d j_inertia =
      Eigen::Vector3d(0.01, 0.02, 0.02).asDiagonal();
  Eigen::Vector3d l_arm{-0.25, 0.0, 0.0};  // engine moment arm
  double gamma = 0.7853981633974483;       // glideslope half angle
  double omega_max = 1.0;                  // body rate bound
  double thrust_min = 0.3;
  double thrust_max = 5.0;
  double m_dry = 1.0;
  double delta_max = 0.3490658503988659;  // gimbal half angle, 20 deg
  double phi_max = 1.5707963267948966;    // tilt bound from vertical
  double t_f = 4.0;
  DragModel drag_model = DragModel::Zero;
  // Aerodynamic force as a function of the full ambient state, used
  // only under DragModel::UserSupplied.
  std::function<Eigen::Vector3d(const Eigen::VectorXd&)> drag;

  // Throws ArgumentError when a bound or angle is out of range, the
  // inertia is not symmetric positive definite, or a user-supplied drag
  // model lacks its callback.
  void validate() const;
};

// Endpoint data. The final mass is left free (it is the objective); all
// other blocks are pinned at both ends.
struct LandingBoundary {
  double m_wet = 2.0;
  Eigen::Vector3d r_initial{4.0, 1.0, 1.0};
  Eigen::Vector3d v_initial{-1.0, -0.2, -0.2};
  Quat q_initial{0.7428, -0.04278, 0.03559, 0.6672};
  Eigen::Vector3d omega_initial = Eigen::Vector3d::Zero();
  Eigen::Vector3d r_final = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_final = Eigen::Vector3d::Zero();
  Quat q_final{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d omega_final = Eigen::Vector3d::Zero();
};

struct LandingConfig {
  LandingParams params;
  LandingBoundary boundary;
};

// Assembles the problem: dynamics with analytic Jacobians (unless drag
// is user supplied), terminal cost -m(t_f), slack-relaxed gimbal and
// tilt constraints, and keep-convex glideslope, body rate, thrust bound
// and dry mass rows. Quaternion endpoints are normalized here; a norm
// off by more than 1e-3 is treated as a typo and rejected.
ProblemDefinition landing_problem(const LandingConfig& config = {});

HpGrid landing_grid(const LandingParams& params, int segments = 5,
                    int degree = 10);

// Straight-line interpolant between the endpoints with the mass run
// down at the nominal thrust, which is also the constant initial
// control guess.
ReferenceTrajectory landing_initial_reference(const LandingConfig& config,
                                              const HpGrid& grid);

ScvxSettings landing_settings();

// Stacked path-constraint residuals at one point, nonpositive when
// feasible. Order: glideslope, body rate, thrust lower, thrust upper,
// gimbal, tilt, dry mass.
Eigen::VectorXd landing_constraint_residuals(const LandingParams& params,
                                             const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& u);

// Flat key=value form of a config, e.g. "gravity" -> "-1 0 0". Vector
// values are space separated; the inertia appears as nine numbers in
// row-major order. Unknown keys throw ParseError; missing keys keep
// their defaults. The drag callback does not round-trip, files always
// describe the zero model.
LandingConfig landing_config_from_map(
    const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> landing_config_to_map(
    const LandingConfig& config);

}  // namespace mscvx
