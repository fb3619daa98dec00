// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mscvx/chart.hpp"
#include "mscvx/conic_program.hpp"

namespace mscvx {

// A continuous-time optimal control problem posed on manifold charts:
//
//   minimize    phi(x(t_f)) + integral of L(x, u)
//   subject to  dx/dt = f(x, u),   x on the state chart, u on the
//               control chart, g(x, u) <= 0, boundary conditions below.
//
// Everything the user supplies works in ambient coordinates; the
// transcription converts to intrinsic frame coordinates internally.

// f(x, u) -> time derivative of the ambient state coordinates. The
// result must be tangent to the chart at x (for a quaternion block,
// orthogonal to q).
using DynamicsFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Ambient Jacobians df/dx (na x na) and df/du (na x mu). Optional; when
// absent the transcription falls back to central finite differences
// taken through the retractions.
using DynamicsJacobianFn = std::function<void(
    const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd&,
    Eigen::MatrixXd&)>;

// Scalar path constraint g(x, u) <= 0, linearized about the reference
// and relaxed with a per-node slack. Use keep-convex emitters instead
// for constraints that are already conic in the flat coordinates.
struct PathConstraint {
  std::string name;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> value;
  // Ambient gradients dg/dx, dg/du. Optional, same fallback as above.
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::VectorXd&, Eigen::VectorXd&)>
      gradient;
};

// Pins one state-chart block to a target point at the initial or final
// node. The transcription emits the exact row eta = log_xbar(target) in
// frame coordinates, so a curved block converges to the target without
// ever leaving the chart.
struct BoundaryCondition {
  int block = 0;
  Eigen::VectorXd target;
};

// View of one transcription node handed to keep-convex emitters. Flat
// (Euclidean) coordinates are exposed as affine expressions in the
// subproblem variables; curved coordinates have no affine form and must
// go through PathConstraint instead.
class ConvexNodeContext {
 public:
  ConvexNodeContext(ConicProgramBuilder& builder, const ManifoldChart& state,
                    const ManifoldChart& control,
                    const Eigen::VectorXd& state_ref,
                    const Eigen::VectorXd& control_ref, int eta_offset,
                    int xi_offset, int segment, int node, bool final_node)
      : builder_(builder),
        state_chart_(state),
        control_chart_(control),
        state_ref_(state_ref),
        control_ref_(control_ref),
        eta_offset_(eta_offset),
        xi_offset_(xi_offset),
        segment_(segment),
        node_(node),
        final_node_(final_node) {}

  // Affine expression for one ambient state coordinate, reference value
  // plus the matching eta variable. Throws ArgumentError for non
  // Euclidean blocks.
  AffineExpr state(int block, int component) const;
  // Same for a control coordinate. Controls only exist at collocation
  // nodes; check has_control() first.
  AffineExpr control(int block, int component) const;

  const Eigen::VectorXd& state_ref() const { return state_ref_; }
  const Eigen::VectorXd& control_ref() const { return control_ref_; }
  bool has_control() const { return xi_offset_ >= 0; }
  int segment() const { return segment_; }
  int node() const { return node_; }
  bool is_final_node() const { return final_node_; }
  bool is_initial_node() const { return segment_ == 0 && node_ == 0; }

  ConicProgramBuilder& builder() { return builder_; }

 private:
  ConicProgramBuilder& builder_;
  const ManifoldChart& state_chart_;
  const ManifoldChart& control_chart_;
  const Eigen::VectorXd& state_ref_;
  const Eigen::VectorXd& control_ref_;
  int eta_offset_;
  int xi_offset_;
  int segment_;
  int node_;
  bool final_node_;
};

// Called once per distinct node when the subproblem is assembled.
// Emitters add rows (and auxiliary variables if needed) directly to the
// builder; rows must be convex as written since they bypass the slack
// relaxation.
using ConvexConstraintEmitter = std::function<void(ConvexNodeContext&)>;

// Optional exact curvature of the running cost in frame coordinates at
// the reference, d2L/deta2 and d2L/dxi2 (positive semidefinite). Cross
// terms are not supported. Problems with genuinely quadratic costs
// supply this so one convexification step reproduces the full Newton
// subproblem.
using RunningCostHessianFn = std::function<void(
    const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd&,
    Eigen::MatrixXd&)>;

struct ProblemDefinition {
  ProblemDefinition(ManifoldChart state, ManifoldChart control)
      : state_chart(std::move(state)), control_chart(std::move(control)) {}

  std::string name;
  ManifoldChart state_chart;
  ManifoldChart control_chart;

  DynamicsFn dynamics;
  DynamicsJacobianFn dynamics_jacobian;  // optional

  // Running cost L(x, u) with optional ambient gradients and optional
  // frame-coordinate Hessian. All optional; an absent running cost
  // means L = 0.
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      running_cost;
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::VectorXd&, Eigen::VectorXd&)>
      running_cost_gradient;
  RunningCostHessianFn running_cost_hessian;

  // Terminal cost phi(x) with optional ambient gradient, linearized
  // about the reference.
  std::function<double(const Eigen::VectorXd&)> terminal_cost;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)>
      terminal_cost_gradient;

  std::vector<PathConstraint> path_constraints;
  std::vector<ConvexConstraintEmitter> convex_constraints;

  std::vector<BoundaryCondition> initial_conditions;
  std::vector<BoundaryCondition> final_conditions;

  bool free_final_time = false;
  // Bounds on the segment half-duration sigma when the final time is
  // free.
  std::optional<std::pair<double, double>> sigma_bounds;

  // Largest tangency residual |E_perp' f| of the dynamics over a point
  // sample, used by validation tests.
  double tangency_residual(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) const;
};

}  // namespace mscvx
