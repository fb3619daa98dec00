// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/chart.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "mscvx/errors.hpp"
#include "mscvx/quaternion.hpp"
#include "mscvx/trig_series.hpp"

namespace mscvx {

namespace {

// Antipodal guard shared by the quaternion and sphere inverse maps: the
// relative angle must stay away from pi for the log direction to be
// well conditioned.
constexpr double kAntipodeTol = 1e-9;

Eigen::Matrix<double, 3, 2> sphere_frame(const Eigen::Vector3d& s) {
  // Pick the two coordinate axes least aligned with s, lower index first
  // on ties, then orthonormalize against s. The selection is a pure
  // function of s, so the frame is reproducible bit for bit.
  std::array<int, 3> idx = {0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&s](int a, int b) {
    const double fa = std::abs(s[a]);
    const double fb = std::abs(s[b]);
    if (fa != fb) return fa < fb;
    return a < b;
  });
  Eigen::Vector3d f1 = Eigen::Vector3d::Unit(idx[0]) - s[idx[0]] * s;
  f1.normalize();
  Eigen::Vector3d e2 = Eigen::Vector3d::Unit(idx[1]);
  Eigen::Vector3d f2 = e2 - s.dot(e2) * s - f1.dot(e2) * f1;
  f2.normalize();
  Eigen::Matrix<double, 3, 2> f;
  f.col(0) = f1;
  f.col(1) = f2;
  return f;
}

Eigen::Vector3d sphere_inverse_retract(const Eigen::Vector3d& s,
                                       const Eigen::Vector3d& y,
                                       double* angle_out) {
  const double c = std::clamp(s.dot(y), -1.0, 1.0);
  if (c <= -1.0 + kAntipodeTol) {
    throw DomainError(
        "sphere inverse retraction: target is numerically antipodal to "
        "the base point");
  }
  const Eigen::Vector3d perp = y - c * s;
  const double pn = perp.norm();
  const double theta = std::atan2(pn, c);
  if (angle_out != nullptr) *angle_out = theta;
  if (pn < 1e-300) {
    return Eigen::Vector3d::Zero();
  }
  return (theta / pn) * perp;
}

}  // namespace

ManifoldChart ManifoldChart::euclidean(int dim) {
  if (dim < 1) {
    throw ArgumentError("euclidean chart requires dim >= 1");
  }
  ManifoldChart c;
  c.kind_ = ChartKind::Euclidean;
  c.ambient_dim_ = dim;
  c.intrinsic_dim_ = dim;
  c.rebuild_blocks();
  return c;
}

ManifoldChart ManifoldChart::unit_quaternion() {
  ManifoldChart c;
  c.kind_ = ChartKind::UnitQuaternion;
  c.ambient_dim_ = 4;
  c.intrinsic_dim_ = 3;
  c.rebuild_blocks();
  return c;
}

ManifoldChart ManifoldChart::sphere2() {
  ManifoldChart c;
  c.kind_ = ChartKind::Sphere2;
  c.ambient_dim_ = 3;
  c.intrinsic_dim_ = 2;
  c.rebuild_blocks();
  return c;
}

ManifoldChart ManifoldChart::product(std::vector<ManifoldChart> components) {
  if (components.empty()) {
    throw ArgumentError("product chart requires at least one component");
  }
  ManifoldChart c;
  c.kind_ = ChartKind::Product;
  c.ambient_dim_ = 0;
  c.intrinsic_dim_ = 0;
  for (const auto& comp : components) {
    if (comp.kind() == ChartKind::Product) {
      throw ArgumentError("product charts do not nest");
    }
    c.ambient_dim_ += comp.ambient_dim();
    c.intrinsic_dim_ += comp.intrinsic_dim();
  }
  c.components_ = std::move(components);
  c.rebuild_blocks();
  return c;
}

void ManifoldChart::rebuild_blocks() {
  blocks_.clear();
  if (kind_ != ChartKind::Product) {
    blocks_.push_back(Block{kind_, 0, ambient_dim_, 0, intrinsic_dim_});
    return;
  }
  int aoff = 0;
  int ioff = 0;
  for (const auto& comp : components_) {
    blocks_.push_back(Block{comp.kind(), aoff, comp.ambient_dim(), ioff,
                            comp.intrinsic_dim()});
    aoff += comp.ambient_dim();
    ioff += comp.intrinsic_dim();
  }
}

double ManifoldChart::membership_violation(const Eigen::VectorXd& point) const {
  if (point.size() != ambient_dim_) {
    throw ArgumentError("membership_violation: point has wrong dimension");
  }
  double worst = 0.0;
  for (const auto& b : blocks_) {
    if (b.kind == ChartKind::Euclidean) continue;
    const double n = point.segment(b.ambient_offset, b.ambient_dim).norm();
    worst = std::max(worst, std::abs(n - 1.0));
  }
  return worst;
}

void ManifoldChart::check_point(const Eigen::VectorXd& point, double tol) const {
  const double v = membership_violation(point);
  if (v > tol) {
    std::ostringstream os;
    os << "point fails manifold membership check: violation " << v
       << " exceeds tolerance " << tol;
    throw DomainError(os.str());
  }
}

Eigen::VectorXd ManifoldChart::retract(const Eigen::VectorXd& base,
                                       const Eigen::VectorXd& tangent) const {
  if (base.size() != ambient_dim_ || tangent.size() != intrinsic_dim_) {
    throw ArgumentError("retract: dimension mismatch");
  }
  Eigen::VectorXd out(ambient_dim_);
  for (const auto& b : blocks_) {
    const auto xb = base.segment(b.ambient_offset, b.ambient_dim);
    const auto vb = tangent.segment(b.intrinsic_offset, b.intrinsic_dim);
    switch (b.kind) {
      case ChartKind::Euclidean:
        out.segment(b.ambient_offset, b.ambient_dim) = xb + vb;
        break;
      case ChartKind::UnitQuaternion:
        out.segment<4>(b.ambient_offset) =
            quat_mul(Quat(xb), quat_exp(Eigen::Vector3d(vb)));
        break;
      case ChartKind::Sphere2: {
        const Eigen::Vector3d s = xb;
        const Eigen::Vector3d w = sphere_frame(s) * vb;
        const double theta = w.norm();
        out.segment<3>(b.ambient_offset) =
            std::cos(theta) * s + sinc(theta) * w;
        break;
      }
      case ChartKind::Product:
        throw ArgumentError("nested product block");
    }
  }
  return out;
}

Eigen::VectorXd ManifoldChart::inverse_retract(
    const Eigen::VectorXd& base, const Eigen::VectorXd& target) const {
  if (base.size() != ambient_dim_ || target.size() != ambient_dim_) {
    throw ArgumentError("inverse_retract: dimension mismatch");
  }
  Eigen::VectorXd out(intrinsic_dim_);
  for (const auto& b : blocks_) {
    const auto xb = base.segment(b.ambient_offset, b.ambient_dim);
    const auto yb = target.segment(b.ambient_offset, b.ambient_dim);
    switch (b.kind) {
      case ChartKind::Euclidean:
        out.segment(b.intrinsic_offset, b.intrinsic_dim) = yb - xb;
        break;
      case ChartKind::UnitQuaternion: {
        // Principal log of the relative rotation. No sign flip here: the
        // inverse retraction must invert the retraction on the group
        // itself, not on the quotient by the double cover.
        const Quat rel = quat_mul(quat_conjugate(Quat(xb)), Quat(yb));
        out.segment<3>(b.intrinsic_offset) = quat_log_principal(rel);
        break;
      }
      case ChartKind::Sphere2: {
        const Eigen::Vector3d s = xb;
        const Eigen::Vector3d w_amb = sphere_inverse_retract(s, yb, nullptr);
        out.segment<2>(b.intrinsic_offset) =
            sphere_frame(s).transpose() * w_amb;
        break;
      }
      case ChartKind::Product:
        throw ArgumentError("nested product block");
    }
  }
  return out;
}

Eigen::MatrixXd ManifoldChart::frame(const Eigen::VectorXd& base) const {
  if (base.size() != ambient_dim_) {
    throw ArgumentError("frame: base has wrong dimension");
  }
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ambient_dim_, intrinsic_dim_);
  for (const auto& b : blocks_) {
    const auto xb = base.segment(b.ambient_offset, b.ambient_dim);
    switch (b.kind) {
      case ChartKind::Euclidean:
        f.block(b.ambient_offset, b.intrinsic_offset, b.ambient_dim,
                b.intrinsic_dim)
            .setIdentity();
        break;
      case ChartKind::UnitQuaternion:
        f.block<4, 3>(b.ambient_offset, b.intrinsic_offset) =
            quat_tangent_frame(Quat(xb));
        break;
      case ChartKind::Sphere2:
        f.block<3, 2>(b.ambient_offset, b.intrinsic_offset) =
            sphere_frame(Eigen::Vector3d(xb));
        break;
      case ChartKind::Product:
        throw ArgumentError("nested product block");
    }
  }
  return f;
}

Eigen::MatrixXd ManifoldChart::transport_matrix(
    const Eigen::VectorXd& from, const Eigen::VectorXd& to) const {
  if (from.size() != ambient_dim_ || to.size() != ambient_dim_) {
    throw ArgumentError("transport_matrix: dimension mismatch");
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(intrinsic_dim_, intrinsic_dim_);
  for (const auto& b : blocks_) {
    const auto xb = from.segment(b.ambient_offset, b.ambient_dim);
    const auto yb = to.segment(b.ambient_offset, b.ambient_dim);
    auto tb = t.block(b.intrinsic_offset, b.intrinsic_offset, b.intrinsic_dim,
                      b.intrinsic_dim);
    // Transport over a zero displacement is the identity map. Returning
    // the exact identity here keeps the diagonal collocation blocks free
    // of rounding noise.
    if (xb == yb) {
      tb.setIdentity();
      continue;
    }
    switch (b.kind) {
      case ChartKind::Euclidean:
        tb.setIdentity();
        break;
      case ChartKind::UnitQuaternion: {
        const Quat rel = quat_mul(quat_conjugate(Quat(xb)), Quat(yb));
        tb = right_jacobian(quat_log_principal(rel));
        break;
      }
      case ChartKind::Sphere2: {
        const Eigen::Vector3d s = xb;
        const Eigen::Vector3d w = sphere_inverse_retract(s, yb, nullptr);
        const double theta = w.norm();
        // Differential of the great-circle retraction at the connecting
        // tangent w, written on ambient vectors and then expressed in the
        // frames of the two endpoints.
        const double sc = sinc(theta);
        const double k2 =
            t_minus_sin_over_cube(theta) - one_minus_cos_over_sq(theta);
        const Eigen::Matrix3d d_amb = sc * Eigen::Matrix3d::Identity() +
                                      k2 * w * w.transpose() -
                                      sc * s * w.transpose();
        tb = sphere_frame(Eigen::Vector3d(yb)).transpose() * d_amb *
             sphere_frame(s);
        break;
      }
      case ChartKind::Product:
        throw ArgumentError("nested product block");
    }
  }
  return t;
}

Eigen::VectorXd ManifoldChart::transport(const Eigen::VectorXd& from,
                                         const Eigen::VectorXd& to,
                                         const Eigen::VectorXd& tangent) const {
  if (tangent.size() != intrinsic_dim_) {
    throw ArgumentError("transport: tangent has wrong dimension");
  }
  return transport_matrix(from, to) * tangent;
}

std::string ManifoldChart::spec_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& b : blocks_) {
    if (!first) os << ",";
    first = false;
    switch (b.kind) {
      case ChartKind::Euclidean:
        os << "E" << b.ambient_dim;
        break;
      case ChartKind::UnitQuaternion:
        os << "Q";
        break;
      case ChartKind::Sphere2:
        os << "S2";
        break;
      case ChartKind::Product:
        break;
    }
  }
  return os.str();
}

ManifoldChart ManifoldChart::from_spec_string(const std::string& spec) {
  std::vector<ManifoldChart> comps;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    // Trim surrounding whitespace.
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) {
      throw ParseError("chart spec: empty component in '" + spec + "'");
    }
    tok = tok.substr(b, e - b + 1);
    if (tok == "Q") {
      comps.push_back(unit_quaternion());
    } else if (tok == "S2") {
      comps.push_back(sphere2());
    } else if (tok.size() >= 2 && tok[0] == 'E') {
      int dim = 0;
      try {
        dim = std::stoi(tok.substr(1));
      } catch (const std::exception&) {
        throw ParseError("chart spec: bad component '" + tok + "'");
      }
      comps.push_back(euclidean(dim));
    } else {
      throw ParseError("chart spec: bad component '" + tok + "'");
    }
  }
  if (comps.empty()) {
    throw ParseError("chart spec: no components in '" + spec + "'");
  }
  if (comps.size() == 1) return comps.front();
  return product(std::move(comps));
}

namespace {
void check_base(const TangentCoords& v, const Eigen::VectorXd& base,
                const char* op) {
  if (v.base.size() != base.size() || !(v.base.array() == base.array()).all()) {
    throw ArgumentError(std::string(op) +
                        ": tangent coordinates belong to a different base "
                        "point, transport them first");
  }
}
}  // namespace

Eigen::VectorXd retract(const ManifoldChart& chart, const Eigen::VectorXd& base,
                        const TangentCoords& v) {
  check_base(v, base, "retract");
  return chart.retract(base, v.coords);
}

TangentCoords inverse_retract(const ManifoldChart& chart,
                              const Eigen::VectorXd& base,
                              const Eigen::VectorXd& target) {
  return TangentCoords{base, chart.inverse_retract(base, target)};
}

TangentCoords transport(const ManifoldChart& chart, const Eigen::VectorXd& from,
                        const Eigen::VectorXd& to, const TangentCoords& v) {
  check_base(v, from, "transport");
  return TangentCoords{to, chart.transport(from, to, v.coords)};
}

}  // namespace mscvx
