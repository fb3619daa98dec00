// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/problems/landing.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "mscvx/errors.hpp"

namespace mscvx {
namespace {

constexpr double kHalfPi = 1.5707963267948966;

// State block order: mass, position, velocity, attitude, body rate.
constexpr int kMass = 0;
constexpr int kPos = 1;
constexpr int kVel = 2;
constexpr int kAtt = 3;
constexpr int kRate = 4;

AffineExpr scaled(AffineExpr e, double a) {
  e.constant *= a;
  for (auto& term : e.terms) term.coeff *= a;
  return e;
}

void require_angle(double value, const char* name) {
  if (!(value > 0.0 && value <= kHalfPi)) {
    throw ArgumentError(std::string("landing params: ") + name +
                        " must lie in (0, pi/2]");
  }
}

Quat normalized_quat(const Quat& q, const char* label) {
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3) {
    throw ArgumentError(std::string("landing boundary: ") + label +
                        " is far from unit norm; check the entries");
  }
  return q / norm;
}

Eigen::VectorXd parse_numbers(const std::string& key, const std::string& text,
                              int count) {
  std::istringstream in(text);
  Eigen::VectorXd out(count);
  for (int i = 0; i < count; ++i) {
    if (!(in >> out[i])) {
      throw ParseError("landing config: value of '" + key + "' must hold " +
                       std::to_string(count) + " numbers, got '" + text + "'");
    }
  }
  std::string rest;
  if (in >> rest) {
    throw ParseError("landing config: trailing data '" + rest + "' in '" +
                     key + "'");
  }
  return out;
}

std::string format_numbers(const Eigen::VectorXd& values) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (int i = 0; i < values.size(); ++i) {
    if (i > 0) out << ' ';
    out << values[i];
  }
  return out.str();
}

}  // namespace

void LandingParams::validate() const {
  if (!(alpha >= 0.0)) {
    throw ArgumentError("landing params: alpha must be nonnegative");
  }
  if (!(thrust_min >= 0.0) || !(thrust_min <= thrust_max)) {
    throw ArgumentError(
        "landing params: thrust bounds must satisfy 0 <= min <= max");
  }
  if (!(m_dry > 0.0)) {
    throw ArgumentError("landing params: dry mass must be positive");
  }
  require_angle(gamma, "glideslope angle");
  require_angle(delta_max, "gimbal angle");
  require_angle(phi_max, "tilt bound");
  if (!(omega_max > 0.0)) {
    throw ArgumentError("landing params: omega_max must be positive");
  }
  if (!(t_f > 0.0)) {
    throw ArgumentError("landing params: final time must be positive");
  }
  if (!j_inertia.isApprox(j_inertia.transpose(), 1e-12)) {
    throw ArgumentError("landing params: inertia must be symmetric");
  }
  Eigen::LLT<Eigen::Matrix3d> llt(j_inertia);
  if (llt.info() != Eigen::Success) {
    throw ArgumentError("landing params: inertia must be positive definite");
  }
  if (drag_model == DragModel::UserSupplied && !drag) {
    throw ArgumentError(
        "landing params: user-supplied drag model needs a drag callback");
  }
}

ProblemDefinition landing_problem(const LandingConfig& config) {
  const LandingParams& params = config.params;
  params.validate();

  ProblemDefinition problem(
      ManifoldChart::product(
          {ManifoldChart::euclidean(1), ManifoldChart::euclidean(3),
           ManifoldChart::euclidean(3), ManifoldChart::unit_quaternion(),
           ManifoldChart::euclidean(3)}),
      ManifoldChart::product(
          {ManifoldChart::euclidean(1), ManifoldChart::sphere2()}));
  problem.name = "landing";

  const double alpha = params.alpha;
  const Eigen::Vector3d g_vec = params.g_vec;
  const Eigen::Matrix3d inertia = params.j_inertia;
  const Eigen::Matrix3d inertia_inv = params.j_inertia.inverse();
  const Eigen::Vector3d l_arm = params.l_arm;
  const bool user_drag = params.drag_model == DragModel::UserSupplied;
  const auto drag = params.drag;

  problem.dynamics = [alpha, g_vec, inertia, inertia_inv, l_arm, user_drag,
                      drag](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const double m = x[0];
    if (!(m > 0.0)) {
      throw DomainError("landing dynamics: mass must be positive");
    }
    const Eigen::Vector3d v = x.segment<3>(4);
    const Quat q = x.segment<4>(7);
    const Eigen::Vector3d w = x.segment<3>(11);
    const double thrust = u[0];
    const Eigen::Vector3d dir = u.segment<3>(1);

    Eigen::VectorXd f(14);
    f[0] = -alpha * thrust;
    f.segment<3>(1) = v;
    Eigen::Vector3d accel =
        (thrust / m) * (rotation_matrix(q) * dir) + g_vec;
    if (user_drag) accel -= drag(x) / m;
    f.segment<3>(4) = accel;
    f.segment<4>(7) = 0.5 * quat_mul(q, Quat(0.0, w[0], w[1], w[2]));
    f.segment<3>(11) =
        inertia_inv * (l_arm.cross(thrust * dir) - w.cross(inertia * w));
    return f;
  };

  if (!user_drag) {
    problem.dynamics_jacobian = [alpha, inertia, inertia_inv, l_arm](
                                    const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u,
                                    Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) {
      const double m = x[0];
      if (!(m > 0.0)) {
        throw DomainError("landing dynamics: mass must be positive");
      }
      const Quat q = x.segment<4>(7);
      const Eigen::Vector3d w = x.segment<3>(11);
      const double thrust = u[0];
      const Eigen::Vector3d dir = u.segment<3>(1);
      const Eigen::Matrix3d rot = rotation_matrix(q);
      const Eigen::Vector3d thrust_dir_inertial = rot * dir;

      jx = Eigen::MatrixXd::Zero(14, 14);
      ju = Eigen::MatrixXd::Zero(14, 4);

      ju(0, 0) = -alpha;
      jx.block<3, 3>(1, 4).setIdentity();

      jx.block<3, 1>(4, 0) = -(thrust / (m * m)) * thrust_dir_inertial;
      jx.block<3, 4>(4, 7) = (thrust / m) * rotated_vector_jacobian(q, dir);
      ju.block<3, 1>(4, 0) = thrust_dir_inertial / m;
      ju.block<3, 3>(4, 1) = (thrust / m) * rot;

      jx.block<4, 4>(7, 7) =
          0.5 * right_mult_matrix(Quat(0.0, w[0], w[1], w[2]));
      jx.block<4, 3>(7, 11) = 0.5 * quat_tangent_frame(q);

      jx.block<3, 3>(11, 11) =
          inertia_inv * (skew(inertia * w) - skew(w) * inertia);
      ju.block<3, 1>(11, 0) = inertia_inv * l_arm.cross(dir);
      ju.block<3, 3>(11, 1) = thrust * inertia_inv * skew(l_arm);
    };
  }

  problem.terminal_cost = [](const Eigen::VectorXd& x) { return -x[0]; };
  problem.terminal_cost_gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    g[0] = -1.0;
    return g;
  };

  // Constraints that touch a curved coordinate go through the slack
  // relaxed linearization path.
  const double cos_delta = std::cos(params.delta_max);
  problem.path_constraints.push_back(
      {"gimbal",
       [cos_delta](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
         return cos_delta - u[1];
       },
       [](const Eigen::VectorXd& x, const Eigen::VectorXd&,
          Eigen::VectorXd& gx, Eigen::VectorXd& gu) {
         gx = Eigen::VectorXd::Zero(x.size());
         gu = Eigen::VectorXd::Zero(4);
         gu[1] = -1.0;
       }});
  const double sin_half_sq = std::pow(std::sin(0.5 * params.phi_max), 2);
  problem.path_constraints.push_back(
      {"tilt",
       [sin_half_sq](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
         return x[9] * x[9] + x[10] * x[10] - sin_half_sq;
       },
       [](const Eigen::VectorXd& x, const Eigen::VectorXd&,
          Eigen::VectorXd& gx, Eigen::VectorXd& gu) {
         gx = Eigen::VectorXd::Zero(x.size());
         gx[9] = 2.0 * x[9];
         gx[10] = 2.0 * x[10];
         gu = Eigen::VectorXd::Zero(4);
       }});

  // Euclidean convex constraints pass into the subproblem unchanged.
  const double cot_gamma = std::cos(params.gamma) / std::sin(params.gamma);
  problem.convex_constraints.push_back([cot_gamma](ConvexNodeContext& ctx) {
    ctx.builder().add_second_order({scaled(ctx.state(kPos, 0), cot_gamma),
                                    ctx.state(kPos, 1), ctx.state(kPos, 2)});
  });
  const double omega_max = params.omega_max;
  problem.convex_constraints.push_back([omega_max](ConvexNodeContext& ctx) {
    ctx.builder().add_second_order(
        {AffineExpr::constant_of(omega_max), ctx.state(kRate, 0),
         ctx.state(kRate, 1), ctx.state(kRate, 2)});
  });
  const double thrust_min = params.thrust_min;
  const double thrust_max = params.thrust_max;
  problem.convex_constraints.push_back(
      [thrust_min, thrust_max](ConvexNodeContext& ctx) {
        if (!ctx.has_control()) return;
        ctx.builder().add_nonnegative(ctx.control(0, 0).offset(-thrust_min));
        ctx.builder().add_nonnegative(
            scaled(ctx.control(0, 0), -1.0).offset(thrust_max));
      });
  const double m_dry = params.m_dry;
  problem.convex_constraints.push_back([m_dry](ConvexNodeContext& ctx) {
    if (!ctx.is_final_node()) return;
    ctx.builder().add_nonnegative(ctx.state(kMass, 0).offset(-m_dry));
  });

  const LandingBoundary& bc = config.boundary;
  problem.initial_conditions.push_back(
      {kMass, Eigen::VectorXd::Constant(1, bc.m_wet)});
  problem.initial_conditions.push_back({kPos, bc.r_initial});
  problem.initial_conditions.push_back({kVel, bc.v_initial});
  problem.initial_conditions.push_back(
      {kAtt, normalized_quat(bc.q_initial, "initial attitude")});
  problem.initial_conditions.push_back({kRate, bc.omega_initial});
  problem.final_conditions.push_back({kPos, bc.r_final});
  problem.final_conditions.push_back({kVel, bc.v_final});
  problem.final_conditions.push_back(
      {kAtt, normalized_quat(bc.q_final, "final attitude")});
  problem.final_conditions.push_back({kRate, bc.omega_final});
  return problem;
}

HpGrid landing_grid(const LandingParams& params, int segments, int degree) {
  return make_grid(0.0, params.t_f, segments, degree);
}

ReferenceTrajectory landing_initial_reference(const LandingConfig& config,
                                              const HpGrid& grid) {
  const ProblemDefinition problem = landing_problem(config);
  const LandingParams& params = config.params;
  const LandingBoundary& bc = config.boundary;
  const double thrust_nominal =
      std::min(std::max(params.thrust_min, bc.m_wet * params.g_vec.norm()),
               params.thrust_max);

  Eigen::VectorXd x0(14), xf(14);
  x0 << bc.m_wet, bc.r_initial, bc.v_initial,
      normalized_quat(bc.q_initial, "initial attitude"), bc.omega_initial;
  xf << bc.m_wet - params.alpha * thrust_nominal * params.t_f, bc.r_final,
      bc.v_final, normalized_quat(bc.q_final, "final attitude"),
      bc.omega_final;

  Eigen::VectorXd u_nominal(4);
  u_nominal << thrust_nominal, 1.0, 0.0, 0.0;
  return make_initial_reference(grid, problem.state_chart, x0, xf, u_nominal);
}

ScvxSettings landing_settings() {
  ScvxSettings settings;
  settings.epsilon = 1e-7;
  settings.max_iters = 60;
  return settings;
}

Eigen::VectorXd landing_constraint_residuals(const LandingParams& params,
                                             const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& u) {
  if (x.size() != 14 || u.size() != 4) {
    throw ArgumentError("landing residuals: expected 14 states, 4 controls");
  }
  const Eigen::Vector3d r = x.segment<3>(1);
  const Eigen::Vector3d w = x.segment<3>(11);
  Eigen::VectorXd res(7);
  res[0] = std::hypot(r[1], r[2]) -
           r[0] * std::cos(params.gamma) / std::sin(params.gamma);
  res[1] = w.norm() - params.omega_max;
  res[2] = params.thrust_min - u[0];
  res[3] = u[0] - params.thrust_max;
  res[4] = std::cos(params.delta_max) - u[1];
  res[5] = x[9] * x[9] + x[10] * x[10] -
           std::pow(std::sin(0.5 * params.phi_max), 2);
  res[6] = params.m_dry - x[0];
  return res;
}

LandingConfig landing_config_from_map(
    const std::map<std::string, std::string>& kv) {
  LandingConfig config;
  LandingParams& p = config.params;
  LandingBoundary& b = config.boundary;
  for (const auto& [key, value] : kv) {
    if (key == "alpha") {
      p.alpha = parse_numbers(key, value, 1)[0];
    } else if (key == "gravity") {
      p.g_vec = parse_numbers(key, value, 3);
    } else if (key == "inertia") {
      const Eigen::VectorXd flat = parse_numbers(key, value, 9);
      p.j_inertia = Eigen::Map<const Eigen::Matrix<double, 3, 3,
                                                   Eigen::RowMajor>>(
          flat.data());
    } else if (key == "moment_arm") {
      p.l_arm = parse_numbers(key, value, 3);
    } else if (key == "glideslope_angle") {
      p.gamma = parse_numbers(key, value, 1)[0];
    } else if (key == "omega_max") {
      p.omega_max = parse_numbers(key, value, 1)[0];
    } else if (key == "thrust_min") {
      p.thrust_min = parse_numbers(key, value, 1)[0];
    } else if (key == "thrust_max") {
      p.thrust_max = parse_numbers(key, value, 1)[0];
    } else if (key == "dry_mass") {
      p.m_dry = parse_numbers(key, value, 1)[0];
    } else if (key == "gimbal_max") {
      p.delta_max = parse_numbers(key, value, 1)[0];
    } else if (key == "tilt_max") {
      p.phi_max = parse_numbers(key, value, 1)[0];
    } else if (key == "final_time") {
      p.t_f = parse_numbers(key, value, 1)[0];
    } else if (key == "wet_mass") {
      b.m_wet = parse_numbers(key, value, 1)[0];
    } else if (key == "r_initial") {
      b.r_initial = parse_numbers(key, value, 3);
    } else if (key == "v_initial") {
      b.v_initial = parse_numbers(key, value, 3);
    } else if (key == "q_initial") {
      b.q_initial = parse_numbers(key, value, 4);
    } else if (key == "omega_initial") {
      b.omega_initial = parse_numbers(key, value, 3);
    } else if (key == "r_final") {
      b.r_final = parse_numbers(key, value, 3);
    } else if (key == "v_final") {
      b.v_final = parse_numbers(key, value, 3);
    } else if (key == "q_final") {
      b.q_final = parse_numbers(key, value, 4);
    } else if (key == "omega_final") {
      b.omega_final = parse_numbers(key, value, 3);
    } else {
      throw ParseError("landing config: unknown key '" + key + "'");
    }
  }
  return config;
}

std::map<std::string, std::string> landing_config_to_map(
    const LandingConfig& config) {
  const LandingParams& p = config.params;
  const LandingBoundary& b = config.boundary;
  std::map<std::string, std::string> kv;
  kv["alpha"] = format_numbers(Eigen::VectorXd::Constant(1, p.alpha));
  kv["gravity"] = format_numbers(p.g_vec);
  Eigen::VectorXd flat(9);
  Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(flat.data()) =
      p.j_inertia;
  kv["inertia"] = format_numbers(flat);
  kv["moment_arm"] = format_numbers(p.l_arm);
  kv["glideslope_angle"] = format_numbers(Eigen::VectorXd::Constant(1, p.gamma));
  kv["omega_max"] = format_numbers(Eigen::VectorXd::Constant(1, p.omega_max));
  kv["thrust_min"] = format_numbers(Eigen::VectorXd::Constant(1, p.thrust_min));
  kv["thrust_max"] = format_numbers(Eigen::VectorXd::Constant(1, p.thrust_max));
  kv["dry_mass"] = format_numbers(Eigen::VectorXd::Constant(1, p.m_dry));
  kv["gimbal_max"] = format_numbers(Eigen::VectorXd::Constant(1, p.delta_max));
  kv["tilt_max"] = format_numbers(Eigen::VectorXd::Constant(1, p.phi_max));
  kv["final_time"] = format_numbers(Eigen::VectorXd::Constant(1, p.t_f));
  kv["wet_mass"] = format_numbers(Eigen::VectorXd::Constant(1, b.m_wet));
  kv["r_initial"] = format_numbers(b.r_initial);
  kv["v_initial"] = format_numbers(b.v_initial);
  kv["q_initial"] = format_numbers(b.q_initial);
  kv["omega_initial"] = format_numbers(b.omega_initial);
  kv["r_final"] = format_numbers(b.r_final);
  kv["v_final"] = format_numbers(b.v_final);
  kv["q_final"] = format_numbers(b.q_final);
  kv["omega_final"] = format_numbers(b.omega_final);
  return kv;
}

}  // namespace mscvx
