// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace mscvx {

// Unit quaternions are stored scalar-first, q = (w, x, y, z), with the
// Hamilton product convention. A quaternion q rotates body coordinates
// into inertial coordinates through rotation_matrix(q).
//
// Tangent vectors on the unit quaternion group are expressed in the
// "half angle" convention used throughout this library: the exponential
// chart is quat_exp(phi) = (cos|phi|, sinc|phi| * phi), so a rotation by
// angle theta about axis n corresponds to phi = (theta/2) * n.

using Quat = Eigen::Vector4d;

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

inline Quat quat_conjugate(const Quat& q) {
  return Quat(q[0], -q[1], -q[2], -q[3]);
}

Quat quat_mul(const Quat& a, const Quat& b);

// Matrix L(q) with q * p == L(q) p, and R(q) with p * q == R(q) p.
Eigen::Matrix4d left_mult_matrix(const Quat& q);
Eigen::Matrix4d right_mult_matrix(const Quat& q);

// Exponential at identity in half-angle coordinates.
Quat quat_exp(const Eigen::Vector3d& phi);

// Principal logarithm: the unique phi with quat_exp(phi) == q and
// |phi| < pi. Throws DomainError when q is numerically at the antipode
// (scalar part <= -1 + 1e-9), where the direction is not defined.
Eigen::Vector3d quat_log_principal(const Quat& q);

// Logarithm of the rotation represented by q: flips the sign of q first
// when the scalar part is negative, so both lifts of a rotation map to
// the same phi with |phi| <= pi/2.
Eigen::Vector3d quat_log(const Quat& q);

// Direction cosine matrix taking body coordinates to inertial ones.
Eigen::Matrix3d rotation_matrix(const Quat& q);

// Jacobian of rotation_matrix(q) * a with respect to the four quaternion
// components (3 x 4), treating q as a free vector in R^4.
Eigen::Matrix<double, 3, 4> rotated_vector_jacobian(const Quat& q,
                                                    const Eigen::Vector3d& a);

// Orthonormal basis of the tangent space at q: columns are q * (0, e_i).
// Coordinates in this frame are the half-angle coordinates above.
Eigen::Matrix<double, 4, 3> quat_tangent_frame(const Quat& q);

// Right Jacobian of the SO(3) exponential in half-angle coordinates:
// quat_exp(phi + d) == quat_exp(phi) * quat_exp(J_r(phi) d) + O(|d|^2).
Eigen::Matrix3d right_jacobian(const Eigen::Vector3d& phi);

// Correction matrices entering the linearized collocation dynamics on a
// quaternion state block: C is the sensitivity of the base-point motion
// term, S the sensitivity of the retraction differential carrying the
// defect rho, and E the rate of the node transport along a reference
// curve with tangent-coordinate velocity omega_ref. All three are
// independent of the base quaternion, so C = 0, S = skew(rho), and
// E = skew(omega_ref) hold exactly; the geometry tests check each
// against a finite-difference probe of the corresponding map. The state
// matrix of a quaternion block assembles as
//   A = D_x f (moving frame) + S - E,
// where the linearization routines pass the physical body rate for
// omega_ref so that the moving-frame part of D_x f cancels down to the
// derivative of the retraction-pulled dynamics.
struct QuatAuxTerms {
  Eigen::Matrix3d C;  // base-point motion sensitivity, identically zero
  Eigen::Matrix3d S;  // retraction differential rate, skew of the defect
  Eigen::Matrix3d E;  // transport rate, skew of the reference velocity
};
QuatAuxTerms quat_aux_terms(const Quat& q_ref, const Eigen::Vector3d& omega_ref,
                            const Eigen::Vector3d& rho);

}  // namespace mscvx
