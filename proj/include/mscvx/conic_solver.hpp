// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>

#include <Eigen/Core>

#include "mscvx/conic_program.hpp"

namespace mscvx {

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  MaxIterations,
  NumericalFailure,
};
const char* to_string(SolveStatus s);

struct ConicSolverSettings {
  int max_iterations = 100;
  // Feasibility and gap tolerances on the scaled homogeneous embedding.
  // Callers that read primal coordinates along curvature-carrying
  // directions (epigraph-encoded quadratics) see errors on the order of
  // the square root of the gap and should request tighter values; the
  // stall handling below makes that safe.
  double feas_tol = 1e-9;
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  // Iterations without a measurable decrease of the barrier parameter
  // before the solver settles for its best iterate.
  int stall_patience = 12;
  // Accepted at the iteration limit with a note in the message.
  double feas_tol_reduced = 1e-5;
  double abs_tol_reduced = 5e-6;
  double rel_tol_reduced = 5e-6;
  // Static regularization added to the quasidefinite KKT matrix; its
  // effect is removed again by iterative refinement.
  double static_reg = 1e-8;
  int refinement_steps = 6;
  double refinement_accuracy = 1e-15;
  // Fraction of the distance to the cone boundary taken per step.
  double step_scale = 0.99;
  double step_min = 1e-7;
  double step_max = 0.9999;
  double sigma_min = 1e-4;
  double sigma_max = 1.0;
  // Ruiz equilibration sweeps applied to the problem data.
  int equilibrate_iters = 3;
  // Independent post-solve check on the returned primal point, against
  // the original unscaled data. An optimal status is downgraded to
  // NumericalFailure when these residuals are exceeded.
  double certify_eq_tol = 1e-8;
  double certify_cone_tol = 1e-8;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd primal;     // z
  Eigen::VectorXd eq_dual;    // multipliers for A z = b
  Eigen::VectorXd cone_dual;  // multipliers for h - G z in K
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double eq_residual = 0.0;
  double cone_violation = 0.0;
  double gap = 0.0;
  std::string message;
};

// Interface for interchangeable subproblem solvers. The built-in backend
// is a sparse primal-dual interior point method on the homogeneous
// self-dual embedding, with Nesterov-Todd scalings and a Mehrotra
// predictor-corrector step. It is fully deterministic: identical inputs
// and settings produce identical iterates.
class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string name() const = 0;
  virtual ConicSolution solve(const ConicProgram& p,
                              const ConicSolverSettings& s) const = 0;
};

const ConicBackend& builtin_backend();

ConicSolution solve_conic(const ConicProgram& p,
                          const ConicSolverSettings& s = {},
                          const ConicBackend* backend = nullptr);

}  // namespace mscvx
