// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace mscvx {

// A chart describes one of the state or control spaces the optimizer
// works on: a Euclidean block, the unit quaternion group, the unit
// sphere in R^3, or an ordered product of those three primitives.
//
// Points live in ambient coordinates (R^n with the embedding implied by
// the kind). Tangent vectors are handled in intrinsic coordinates with
// respect to a deterministic orthonormal frame attached to each point:
//
//   Euclidean       ambient dim d, intrinsic dim d, frame = identity
//   UnitQuaternion  ambient dim 4, intrinsic dim 3, frame column i is
//                   q * (0, e_i), coordinates are half angles
//   Sphere2         ambient dim 3, intrinsic dim 2, frame built by
//                   Gram-Schmidt from the two coordinate axes least
//                   aligned with the point (ties broken by lower index)
//
// The frame at a point depends only on the point, never on history, so
// repeated evaluations are bitwise identical. All maps below take and
// return intrinsic coordinates; use frame() to convert from ambient.
//
// Retractions follow the arc construction: for the quaternion group
// R_q(v) = q * quat_exp(v), for the sphere R_s(w) moves along the great
// circle with initial velocity w through angle |w|. inverse_retract is
// the exact local inverse and throws DomainError outside the injectivity
// region (at or numerically near the cut locus). transport carries a
// tangent vector from one point to another as the differential of the
// retraction, evaluated at the connecting tangent.

enum class ChartKind { Euclidean, UnitQuaternion, Sphere2, Product };

class ManifoldChart {
 public:
  static ManifoldChart euclidean(int dim);
  static ManifoldChart unit_quaternion();
  static ManifoldChart sphere2();
  // Components must be primitive charts; products do not nest.
  static ManifoldChart product(std::vector<ManifoldChart> components);

  ChartKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_dim_; }
  int intrinsic_dim() const { return intrinsic_dim_; }

  // Block addressing. Non-product charts expose themselves as a single
  // block, so callers can treat every chart uniformly.
  struct Block {
    ChartKind kind;
    int ambient_offset;
    int ambient_dim;
    int intrinsic_offset;
    int intrinsic_dim;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

  // Largest embedding-constraint violation over blocks, |norm - 1| for
  // quaternion and sphere blocks, zero for Euclidean ones.
  double membership_violation(const Eigen::VectorXd& point) const;
  // Throws DomainError when membership_violation exceeds tol.
  void check_point(const Eigen::VectorXd& point, double tol = 1e-9) const;

  Eigen::VectorXd retract(const Eigen::VectorXd& base,
                          const Eigen::VectorXd& tangent) const;
  Eigen::VectorXd inverse_retract(const Eigen::VectorXd& base,
                                  const Eigen::VectorXd& target) const;
  // Ambient frame matrix, ambient_dim x intrinsic_dim, orthonormal columns.
  Eigen::MatrixXd frame(const Eigen::VectorXd& base) const;
  // Matrix of the transport map in the frames at from and to. Returns the
  // exact identity when from and to are the same point.
  Eigen::MatrixXd transport_matrix(const Eigen::VectorXd& from,
                                   const Eigen::VectorXd& to) const;
  Eigen::VectorXd transport(const Eigen::VectorXd& from,
                            const Eigen::VectorXd& to,
                            const Eigen::VectorXd& tangent) const;

  // Compact text form used in file headers, e.g. "E1,E3,Q,S2".
  std::string spec_string() const;
  static ManifoldChart from_spec_string(const std::string& spec);

 private:
  ManifoldChart() = default;
  void rebuild_blocks();

  ChartKind kind_ = ChartKind::Euclidean;
  int ambient_dim_ = 0;
  int intrinsic_dim_ = 0;
  std::vector<ManifoldChart> components_;
  std::vector<Block> blocks_;
};

// Tangent coordinates bundled with the base point they refer to. The free
// functions below check the base before delegating to the chart, which
// catches accidental mixing of tangent spaces.
struct TangentCoords {
  Eigen::VectorXd base;
  Eigen::VectorXd coords;
};

Eigen::VectorXd retract(const ManifoldChart& chart, const Eigen::VectorXd& base,
                        const TangentCoords& v);
TangentCoords inverse_retract(const ManifoldChart& chart,
                              const Eigen::VectorXd& base,
                              const Eigen::VectorXd& target);
TangentCoords transport(const ManifoldChart& chart, const Eigen::VectorXd& from,
                        const Eigen::VectorXd& to, const TangentCoords& v);

}  // namespace mscvx
