// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/problems/attitude.hpp"

#include <Eigen/Geometry>

namespace mscvx {

ProblemDefinition attitude_toy_problem(const AttitudeToyParams& params) {
  ProblemDefinition problem(
      ManifoldChart::product(
          {ManifoldChart::unit_quaternion(), ManifoldChart::euclidean(3)}),
      ManifoldChart::euclidean(3));
  problem.name = "attitude-toy";

  const Eigen::Vector3d inertia = params.inertia;
  const Eigen::Vector3d inv_inertia = inertia.cwiseInverse();

  problem.dynamics = [inertia, inv_inertia](const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& u) {
    const Quat q = x.head<4>();
    const Eigen::Vector3d w = x.tail<3>();
    Eigen::VectorXd f(7);
    f.head<4>() = 0.5 * quat_mul(q, Quat(0.0, w[0], w[1], w[2]));
    const Eigen::Vector3d coriolis = w.cross(inertia.cwiseProduct(w));
    f.tail<3>() = inv_inertia.cwiseProduct(u - coriolis);
    return f;
  };

  problem.dynamics_jacobian = [inertia, inv_inertia](
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd&, Eigen::MatrixXd& jx,
                                  Eigen::MatrixXd& ju) {
    const Quat q = x.head<4>();
    const Eigen::Vector3d w = x.tail<3>();
    jx = Eigen::MatrixXd::Zero(7, 7);
    jx.topLeftCorner<4, 4>() =
        0.5 * right_mult_matrix(Quat(0.0, w[0], w[1], w[2]));
    jx.topRightCorner<4, 3>() = 0.5 * quat_tangent_frame(q);
    const Eigen::Matrix3d dcor =
        skew(w) * inertia.asDiagonal() - skew(inertia.cwiseProduct(w));
    jx.bottomRightCorner<3, 3>() = (-inv_inertia).asDiagonal() * dcor;
    ju = Eigen::MatrixXd::Zero(7, 3);
    ju.bottomRows<3>() = inv_inertia.asDiagonal();
  };

  problem.running_cost = [](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return u.squaredNorm();
  };
  problem.running_cost_gradient =
      [](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
         Eigen::VectorXd& gx, Eigen::VectorXd& gu) {
        gx = Eigen::VectorXd::Zero(x.size());
        gu = 2.0 * u;
      };
  problem.running_cost_hessian =
      [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& hxx,
         Eigen::MatrixXd& huu) {
        hxx = Eigen::MatrixXd::Zero(6, 6);
        huu = 2.0 * Eigen::MatrixXd::Identity(3, 3);
      };

  problem.initial_conditions.push_back({0, params.q_initial});
  problem.initial_conditions.push_back({1, params.omega_initial});
  problem.final_conditions.push_back({0, params.q_final});
  problem.final_conditions.push_back({1, params.omega_final});
  return problem;
}

HpGrid attitude_toy_grid(const AttitudeToyParams& params) {
  return make_grid(0.0, params.t_f, params.segments, params.degree);
}

ReferenceTrajectory attitude_toy_initial_reference(
    const AttitudeToyParams& params, const HpGrid& grid) {
  const ProblemDefinition problem = attitude_toy_problem(params);
  Eigen::VectorXd x0(7), xf(7);
  x0 << params.q_initial, params.omega_initial;
  xf << params.q_final, params.omega_final;
  return make_initial_reference(grid, problem.state_chart, x0, xf,
                                Eigen::Vector3d::Zero());
}

ScvxSettings attitude_toy_settings() {
  ScvxSettings settings;
  settings.epsilon = 1e-6;
  settings.max_iters = 30;
  return settings;
}

}  // namespace mscvx
