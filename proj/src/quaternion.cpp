// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/quaternion.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "mscvx/errors.hpp"
#include "mscvx/trig_series.hpp"

namespace mscvx {

Quat quat_mul(const Quat& a, const Quat& b) {
  const double aw = a[0];
  const Eigen::Vector3d av = a.tail<3>();
  const double bw = b[0];
  const Eigen::Vector3d bv = b.tail<3>();
  Quat out;
  out[0] = aw * bw - av.dot(bv);
  out.tail<3>() = aw * bv + bw * av + av.cross(bv);
  return out;
}

Eigen::Matrix4d left_mult_matrix(const Quat& q) {
  const double w = q[0];
  const Eigen::Vector3d v = q.tail<3>();
  Eigen::Matrix4d m;
  m(0, 0) = w;
  m.block<1, 3>(0, 1) = -v.transpose();
  m.block<3, 1>(1, 0) = v;
  m.block<3, 3>(1, 1) = w * Eigen::Matrix3d::Identity() + skew(v);
  return m;
}

Eigen::Matrix4d right_mult_matrix(const Quat& q) {
  const double w = q[0];
  const Eigen::Vector3d v = q.tail<3>();
  Eigen::Matrix4d m;
  m(0, 0) = w;
  m.block<1, 3>(0, 1) = -v.transpose();
  m.block<3, 1>(1, 0) = v;
  m.block<3, 3>(1, 1) = w * Eigen::Matrix3d::Identity() - skew(v);
  return m;
}

Quat quat_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  Quat q;
  q[0] = std::cos(theta);
  q.tail<3>() = sinc(theta) * phi;
  return q;
}

Eigen::Vector3d quat_log_principal(const Quat& q) {
  const double w = q[0];
  const double vn = q.tail<3>().norm();
  if (w <= -1.0 + 1e-9) {
    throw DomainError(
        "quaternion logarithm: point is numerically at the antipode, "
        "the principal log direction is undefined");
  }
  // atan2 keeps full accuracy for both small and near-pi/2 half angles.
  const double theta = std::atan2(vn, w);
  if (vn < 1e-300) {
    return Eigen::Vector3d::Zero();
  }
  return (theta / vn) * q.tail<3>();
}

Eigen::Vector3d quat_log(const Quat& q) {
  if (q[0] < 0.0) {
    return quat_log_principal(Quat(-q));
  }
  return quat_log_principal(q);
}

Eigen::Matrix3d rotation_matrix(const Quat& q) {
  const double w = q[0];
  const Eigen::Vector3d v = q.tail<3>();
  return (w * w - v.squaredNorm()) * Eigen::Matrix3d::Identity() +
         2.0 * v * v.transpose() + 2.0 * w * skew(v);
}

Eigen::Matrix<double, 3, 4> rotated_vector_jacobian(const Quat& q,
                                                    const Eigen::Vector3d& a) {
  const double w = q[0];
  const Eigen::Vector3d v = q.tail<3>();
  Eigen::Matrix<double, 3, 4> j;
  j.col(0) = 2.0 * (w * a + v.cross(a));
  j.block<3, 3>(0, 1) =
      2.0 * (v.dot(a) * Eigen::Matrix3d::Identity() + v * a.transpose() -
             a * v.transpose() - w * skew(a));
  return j;
}

Eigen::Matrix<double, 4, 3> quat_tangent_frame(const Quat& q) {
  return left_mult_matrix(q).rightCols<3>();
}

Eigen::Matrix3d right_jacobian(const Eigen::Vector3d& phi) {
  // Half-angle coordinates carry twice the rotation vector rate, so the
  // classical rotation-vector right Jacobian is evaluated at 2 phi and the
  // factor of two cancels between the two conventions.
  const Eigen::Vector3d r = 2.0 * phi;
  const double theta = r.norm();
  const Eigen::Matrix3d rx = skew(r);
  return Eigen::Matrix3d::Identity() - one_minus_cos_over_sq(theta) * rx +
         t_minus_sin_over_cube(theta) * rx * rx;
}

QuatAuxTerms quat_aux_terms(const Quat&, const Eigen::Vector3d& omega_ref,
                            const Eigen::Vector3d& rho) {
  QuatAuxTerms t;
  t.C = Eigen::Matrix3d::Zero();
  t.S = skew(rho);
  t.E = skew(omega_ref);
  return t;
}

}  // namespace mscvx
