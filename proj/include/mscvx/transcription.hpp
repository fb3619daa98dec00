// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Core>

#include "mscvx/collocation.hpp"
#include "mscvx/problem.hpp"
#include "mscvx/reference.hpp"

namespace mscvx {

// Intrinsic linearization of the collocated dynamics about a reference
// trajectory. All quantities are frame coordinates: states have
// dimension state_chart.intrinsic_dim() (n below), controls
// control_chart.intrinsic_dim() (m).
//
// The collocation row for node i of a segment reads
//
//   sum_k D_{i-1,k} [T]_ik eta_k
//     = sigma (rho + A eta_i + B xi_i) + rho dsigma + nu_i
//
// where [T]_ik transports coordinates at node k into the tangent space
// at node i, rho is the defect between the vector field and the
// interpolant velocity, and A collects the field Jacobian together with
// the curvature corrections induced by the retraction (for a quaternion
// block: plus skew of the defect, minus skew of the body rate).

struct LinearizedNode {
  Eigen::MatrixXd A_tilde;  // n x n
  Eigen::MatrixXd B;        // n x m
  Eigen::VectorXd rho_hat;  // n
  // Path constraint linearization, one row per scalar constraint.
  Eigen::VectorXd g_ref;
  Eigen::MatrixXd Gx;  // rows x n
  Eigen::MatrixXd Gu;  // rows x m
  // Transport matrices into this node, index k = 0..p.
  std::vector<Eigen::MatrixXd> T_blocks;
  // Running cost value and frame-coordinate gradients at the reference;
  // Hessians are empty unless the problem supplies exact curvature.
  double L = 0.0;
  Eigen::VectorXd Lx, Lu;
  Eigen::MatrixXd Hxx, Huu;
};

// (1/sigma) sum_k D_{i-1,k} log_{x_i}(x_k) in the frame at node i; the
// collocation estimate of the reference velocity. i is a collocation
// index, 1 <= i <= p.
Eigen::VectorXd reference_velocity(const ProblemDefinition& problem,
                                   const ReferenceTrajectory& ref,
                                   const HpGrid& grid, int h, int i);

// f(x_i, u_i) minus the estimate above, in the same frame. Zero exactly
// when the reference satisfies the discrete dynamics.
Eigen::VectorXd compute_defect(const ProblemDefinition& problem,
                               const ReferenceTrajectory& ref,
                               const HpGrid& grid, int h, int i);

// Transport matrices [T]_ik, k = 0..p, for collocation node i. The
// block for k == i is the exact identity.
std::vector<Eigen::MatrixXd> transport_blocks(const ProblemDefinition& problem,
                                              const ReferenceTrajectory& ref,
                                              const HpGrid& grid, int h,
                                              int i);

// Full linearization at collocation node i of segment h. Uses the
// problem's analytic Jacobians when present, otherwise central finite
// differences through the retractions with step 1e-6 scaled by the
// reference magnitude. State charts may mix Euclidean and quaternion
// blocks; sphere blocks are supported on the control side only.
LinearizedNode linearize_node(const ProblemDefinition& problem,
                              const ReferenceTrajectory& ref,
                              const HpGrid& grid, int h, int i);

// Dense equality block for one segment: p * n rows over the unknowns
// [eta_0 .. eta_p | xi_1 .. xi_p | dsigma], the last column only when
// the final time is free. Virtual controls are not included; callers
// append one identity column block per row group. coeffs * z = rhs
// holds at the linearized optimum with zero virtual control.
struct SegmentRows {
  Eigen::MatrixXd coeffs;
  Eigen::VectorXd rhs;
};
SegmentRows assemble_collocation_rows(const std::vector<LinearizedNode>& nodes,
                                      const HpGrid& grid, double sigma_bar,
                                      bool free_final_time);

// Segment interfaces whose perturbations must match: eta at node p of
// left_segment equals eta at node 0 of left_segment + 1. Valid because
// the frames at the shared reference point coincide.
struct LinkingRow {
  int left_segment = 0;
};
std::vector<LinkingRow> linking_rows(const HpGrid& grid);

// Reference state between nodes: Lagrange interpolation of the
// inverse-retraction coordinates in the tangent space of the nearest
// node, pushed back through the retraction. Exact at the nodes; between
// them this is the natural chart-respecting interpolant, without a
// formal accuracy guarantee on curved blocks.
Eigen::VectorXd dense_state(const ProblemDefinition& problem,
                            const ReferenceTrajectory& ref, const HpGrid& grid,
                            int h, double tau);

}  // namespace mscvx
