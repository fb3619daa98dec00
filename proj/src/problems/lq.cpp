// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/problems/lq.hpp"

namespace mscvx {

ProblemDefinition lq_problem(const LqParams& params) {
  ProblemDefinition problem(ManifoldChart::euclidean(2),
                            ManifoldChart::euclidean(1));
  problem.name = "lq-euclidean";

  const Eigen::Matrix2d A = params.drift;
  const Eigen::Vector2d B = params.input;
  const Eigen::Matrix2d Q = params.state_weight;
  const double R = params.control_weight;

  problem.dynamics = [A, B](const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u) {
    return Eigen::VectorXd(A * x + B * u[0]);
  };
  problem.dynamics_jacobian = [A, B](const Eigen::VectorXd&,
                                     const Eigen::VectorXd&,
                                     Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) {
    jx = A;
    ju = B;
  };

  problem.running_cost = [Q, R](const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
    return x.dot(Q * x) + R * u[0] * u[0];
  };
  problem.running_cost_gradient = [Q, R](const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u,
                                         Eigen::VectorXd& gx,
                                         Eigen::VectorXd& gu) {
    gx = 2.0 * (Q * x);
    gu = Eigen::VectorXd::Constant(1, 2.0 * R * u[0]);
  };
  problem.running_cost_hessian = [Q, R](const Eigen::VectorXd&,
                                        const Eigen::VectorXd&,
                                        Eigen::MatrixXd& hxx,
                                        Eigen::MatrixXd& huu) {
    hxx = 2.0 * Q;
    huu = Eigen::MatrixXd::Constant(1, 1, 2.0 * R);
  };

  problem.initial_conditions.push_back({0, params.x_initial});
  return problem;
}

HpGrid lq_grid(const LqParams& params) {
  return make_grid(0.0, params.t_f, params.segments, params.degree);
}

ReferenceTrajectory lq_initial_reference(const LqParams& params,
                                         const HpGrid& grid) {
  const ProblemDefinition problem = lq_problem(params);
  return make_initial_reference(grid, problem.state_chart, params.x_initial,
                                params.x_initial,
                                Eigen::VectorXd::Zero(1));
}

}  // namespace mscvx
