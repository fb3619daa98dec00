// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace mscvx {

// Radau collocation data for one segment, on the reference interval
// [-1, 1]. The rule is the "flipped" Legendre-Gauss-Radau family: the p
// collocation nodes are the roots of P_p - P_{p-1}, which lie in (-1, 1]
// and include the right endpoint. The left endpoint tau = -1 carries the
// segment's initial state but is not collocated.
//
// nodes holds all p+1 support points, nodes[0] = -1 followed by the
// collocation nodes in ascending order, nodes[p] = +1 exactly. weights
// holds the p quadrature weights for the collocation nodes; they are
// positive, sum to 2 and integrate polynomials of degree 2p-2 exactly.
// diff is the p x (p+1) differentiation matrix: row i-1 evaluates the
// derivative of the degree-p interpolant through all p+1 support values
// at collocation node i.
struct RadauSegment {
  int degree = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  Eigen::MatrixXd diff;
};

// Builds the rule for 1 <= degree <= 64. Nodes come from the eigenvalues
// of the Radau-modified Jacobi matrix of the Legendre weight, then one
// Newton polish on P_p - P_{p-1}; the endpoint is pinned to +1 exactly.
RadauSegment radau_segment(int degree);

// Value of the interpolating polynomial through (nodes[j], values.col(j))
// at tau, one barycentric evaluation per row of values. Returns the
// stored column when tau coincides with a node.
Eigen::VectorXd lagrange_eval(const Eigen::VectorXd& nodes,
                              const Eigen::MatrixXd& values, double tau);

// Weighted sum of samples at the collocation nodes: values is
// (dim x degree), column i-1 sampled at nodes[i]. Approximates the
// integral over [-1, 1]; scale by the half segment length for integrals
// in physical time.
Eigen::VectorXd quadrature(const RadauSegment& seg,
                           const Eigen::MatrixXd& values);

// Uniform hp grid: `segments` equal segments covering [t0, tf], all with
// the same Radau rule.
struct HpGrid {
  double t0 = 0.0;
  double tf = 1.0;
  int segments = 1;
  RadauSegment rule;

  // Half length of one segment; the time scaling between the reference
  // interval and physical time.
  double sigma() const { return (tf - t0) / (2.0 * segments); }
  double segment_start(int h) const {
    return t0 + (tf - t0) * static_cast<double>(h) / segments;
  }
  double node_time(int h, int i) const {
    return segment_start(h) + (rule.nodes[i] + 1.0) * sigma();
  }
};

HpGrid make_grid(double t0, double tf, int segments, int degree);

}  // namespace mscvx
