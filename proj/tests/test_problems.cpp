// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
//
// The built-in problem definitions, mostly the powered-descent model:
// dynamics spot checks with hand-derived values, analytic Jacobians
// against the finite-difference linearization route, conserved
// quantities against an adaptive Runge-Kutta oracle, and the parameter
// file round trip.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <cmath>

#include "mscvx/errors.hpp"
#include "mscvx/problems/attitude.hpp"
#include "mscvx/problems/landing.hpp"
#include "mscvx/problems/lq.hpp"
#include "mscvx/transcription.hpp"
#include "support/ode45.hpp"
#include "support/test_rng.hpp"

using namespace mscvx;
using mscvx::testsupport::Rng;

namespace {

Eigen::VectorXd default_landing_state() {
  const LandingBoundary bc;
  Eigen::VectorXd x(14);
  x << bc.m_wet, bc.r_initial, bc.v_initial, bc.q_initial.normalized(),
      bc.omega_initial;
  return x;
}

Eigen::VectorXd landing_control(double thrust, const Eigen::Vector3d& dir) {
  Eigen::VectorXd u(4);
  u << thrust, dir;
  return u;
}

// Short random walk on the state chart with feasible random controls,
// shaped as a one-segment reference so both linearization routes can
// run on it.
ReferenceTrajectory random_walk_reference(const ProblemDefinition& problem,
                                          const HpGrid& grid,
                                          const Eigen::VectorXd& x_start,
                                          Rng& rng) {
  const int p = grid.rule.degree;
  ReferenceTrajectory ref;
  ref.sigma_bar = grid.sigma();
  ref.states.assign(1, {});
  ref.controls.assign(1, {});
  Eigen::VectorXd x = x_start;
  ref.states[0].push_back(x);
  for (int i = 1; i <= p; ++i) {
    x = problem.state_chart.retract(
        x, rng.tangent(problem.state_chart, 0.05));
    ref.states[0].push_back(x);
    Eigen::VectorXd u(problem.control_chart.ambient_dim());
    if (u.size() == 4) {
      u << rng.uniform(0.5, 4.0), rng.sphere_point();
    } else {
      u = rng.vector(static_cast<int>(u.size()), 0.5);
    }
    ref.controls[0].push_back(u);
  }
  return ref;
}

}  // namespace

TEST_CASE("engine off means free fall") {
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  Eigen::VectorXd x = default_landing_state();
  x.segment<3>(11).setZero();
  const Eigen::VectorXd f =
      problem.dynamics(x, landing_control(0.0, {1.0, 0.0, 0.0}));
  CHECK(f[0] == 0.0);
  CHECK((f.segment<3>(1) - x.segment<3>(4)).norm() == 0.0);
  CHECK((f.segment<3>(4) - config.params.g_vec).norm() <= 1e-15);
  CHECK(f.segment<4>(7).norm() == 0.0);
  CHECK(f.segment<3>(11).norm() == 0.0);
}

TEST_CASE("thrust matched against gravity hovers") {
  // Identity attitude maps body e1 to inertial e1; gravity points along
  // -e1, so thrust m*|g| along the body axis cancels it exactly.
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  Eigen::VectorXd x = default_landing_state();
  x.segment<4>(7) << 1.0, 0.0, 0.0, 0.0;
  const double thrust = x[0] * config.params.g_vec.norm();
  const Eigen::VectorXd f =
      problem.dynamics(x, landing_control(thrust, {1.0, 0.0, 0.0}));
  CHECK(f.segment<3>(4).norm() <= 1e-14);
}

TEST_CASE("diagonal inertia has no gyroscopic torque about a principal axis") {
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  Eigen::VectorXd x = default_landing_state();
  x.segment<3>(11) << 0.0, 0.0, 0.7;
  const double thrust = 2.0;
  const Eigen::Vector3d dir(0.9, 0.3, std::sqrt(1.0 - 0.81 - 0.09));
  const Eigen::VectorXd f = problem.dynamics(x, landing_control(thrust, dir));
  const Eigen::Vector3d expected = config.params.j_inertia.inverse() *
                                   config.params.l_arm.cross(thrust * dir);
  CHECK((f.segment<3>(11) - expected).norm() <= 1e-14);
}

TEST_CASE("quaternion kinematics stay tangent to the unit sphere") {
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  Rng rng(501);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x = rng.chart_point(problem.state_chart);
    x[0] = rng.uniform(1.2, 2.0);
    const Eigen::VectorXd u =
        landing_control(rng.uniform(0.5, 4.0), rng.sphere_point());
    CHECK(problem.tangency_residual(x, u) <= 1e-14);
    const Quat q = x.segment<4>(7);
    const Quat qdot = problem.dynamics(x, u).segment<4>(7);
    CHECK(std::abs(q.dot(qdot)) <= 1e-14);
  }
}

TEST_CASE("analytic landing jacobians match the finite-difference route") {
  const LandingConfig config;
  const ProblemDefinition analytic = landing_problem(config);
  ProblemDefinition numeric = landing_problem(config);
  numeric.dynamics_jacobian = nullptr;

  const HpGrid grid = landing_grid(config.params, 1, 4);
  Rng rng(502);
  int nodes_checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const ReferenceTrajectory ref =
        random_walk_reference(analytic, grid, default_landing_state(), rng);
    for (int i = 1; i <= grid.rule.degree; ++i) {
      const LinearizedNode a = linearize_node(analytic, ref, grid, 0, i);
      const LinearizedNode b = linearize_node(numeric, ref, grid, 0, i);
      CHECK((a.A_tilde - b.A_tilde).lpNorm<Eigen::Infinity>() <= 1e-5);
      CHECK((a.B - b.B).lpNorm<Eigen::Infinity>() <= 1e-5);
      ++nodes_checked;
    }
  }
  CHECK(nodes_checked == 100);
}

TEST_CASE("analytic attitude jacobians match the finite-difference route") {
  const AttitudeToyParams params;
  const ProblemDefinition analytic = attitude_toy_problem(params);
  ProblemDefinition numeric = attitude_toy_problem(params);
  numeric.dynamics_jacobian = nullptr;

  const HpGrid grid = make_grid(0.0, params.t_f, 1, 5);
  Rng rng(503);
  Eigen::VectorXd x0(7);
  x0 << rng.unit_quaternion(), rng.vector(3, 0.4);
  const ReferenceTrajectory ref =
      random_walk_reference(analytic, grid, x0, rng);
  for (int i = 1; i <= grid.rule.degree; ++i) {
    const LinearizedNode a = linearize_node(analytic, ref, grid, 0, i);
    const LinearizedNode b = linearize_node(numeric, ref, grid, 0, i);
    CHECK((a.A_tilde - b.A_tilde).lpNorm<Eigen::Infinity>() <= 1e-5);
    CHECK((a.B - b.B).lpNorm<Eigen::Infinity>() <= 1e-5);
  }
}

TEST_CASE("mass strictly decreases while thrusting") {
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  Rng rng(504);
  for (int trial = 0; trial < 10; ++trial) {
    const double thrust =
        rng.uniform(config.params.thrust_min, config.params.thrust_max);
    const Eigen::VectorXd f = problem.dynamics(
        default_landing_state(), landing_control(thrust, rng.sphere_point()));
    CHECK(f[0] < 0.0);
    CHECK(f[0] == doctest::Approx(-config.params.alpha * thrust));
  }
}

TEST_CASE("ballistic flight conserves energy against an integrator oracle") {
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  const Eigen::VectorXd u = landing_control(0.0, {1.0, 0.0, 0.0});
  const Eigen::VectorXd x0 = default_landing_state();

  const auto field = [&](double, const Eigen::VectorXd& y) {
    return problem.dynamics(y, u);
  };
  const Eigen::VectorXd x1 =
      mscvx::testsupport::integrate_ode45(field, x0, 0.0, 1.0);

  const auto energy = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.segment<3>(4).squaredNorm() -
           config.params.g_vec.dot(x.segment<3>(1));
  };
  CHECK(x1[0] == x0[0]);
  CHECK(std::abs(energy(x1) - energy(x0)) <= 1e-9);
}

TEST_CASE("constraint residuals at canonical points") {
  const LandingParams params;
  Eigen::VectorXd x = default_landing_state();
  Eigen::VectorXd u = landing_control(2.0, {1.0, 0.0, 0.0});

  SUBCASE("glideslope on the cone axis") {
    x.segment<3>(1) << 2.0, 0.0, 0.0;
    const Eigen::VectorXd res = landing_constraint_residuals(params, x, u);
    const double cot = std::cos(params.gamma) / std::sin(params.gamma);
    CHECK(res[0] == doctest::Approx(-2.0 * cot).epsilon(1e-14));
    CHECK(res[0] < 0.0);
  }
  SUBCASE("tilt residual at the identity attitude") {
    x.segment<4>(7) << 1.0, 0.0, 0.0, 0.0;
    const Eigen::VectorXd res = landing_constraint_residuals(params, x, u);
    const double expected = -std::pow(std::sin(0.5 * params.phi_max), 2);
    CHECK(res[5] == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("gimbal residual vanishes on the cone boundary") {
    u = landing_control(
        2.0, {std::cos(params.delta_max), std::sin(params.delta_max), 0.0});
    const Eigen::VectorXd res = landing_constraint_residuals(params, x, u);
    CHECK(std::abs(res[4]) <= 1e-14);
  }
  SUBCASE("rate bound on its boundary") {
    x.segment<3>(11) << params.omega_max, 0.0, 0.0;
    const Eigen::VectorXd res = landing_constraint_residuals(params, x, u);
    CHECK(std::abs(res[1]) <= 1e-14);
  }
  SUBCASE("thrust window and dry mass") {
    x[0] = params.m_dry;
    u[0] = params.thrust_min;
    const Eigen::VectorXd res = landing_constraint_residuals(params, x, u);
    CHECK(std::abs(res[2]) <= 1e-15);
    CHECK(res[3] < 0.0);
    CHECK(std::abs(res[6]) <= 1e-15);
  }
}

TEST_CASE("parameter maps round trip every field") {
  LandingConfig config;
  config.params.alpha = 0.0123;
  config.params.g_vec << -0.5, 0.1, 0.2;
  config.params.j_inertia << 0.01, 0.001, 0.0, 0.001, 0.02, 0.0, 0.0, 0.0,
      0.03;
  config.params.gamma = 0.6;
  config.boundary.r_initial << 3.0, -1.0, 2.0;
  config.boundary.q_initial << 0.7428, -0.04278, 0.03559, 0.6672;

  const auto kv = landing_config_to_map(config);
  const LandingConfig back = landing_config_from_map(kv);
  CHECK(back.params.alpha == config.params.alpha);
  CHECK((back.params.g_vec - config.params.g_vec).norm() == 0.0);
  CHECK((back.params.j_inertia - config.params.j_inertia).norm() == 0.0);
  CHECK(back.params.gamma == config.params.gamma);
  CHECK(back.params.thrust_min == config.params.thrust_min);
  CHECK(back.params.thrust_max == config.params.thrust_max);
  CHECK(back.params.m_dry == config.params.m_dry);
  CHECK(back.params.delta_max == config.params.delta_max);
  CHECK(back.params.phi_max == config.params.phi_max);
  CHECK(back.params.t_f == config.params.t_f);
  CHECK(back.boundary.m_wet == config.boundary.m_wet);
  CHECK((back.boundary.r_initial - config.boundary.r_initial).norm() == 0.0);
  CHECK((back.boundary.q_initial - config.boundary.q_initial).norm() == 0.0);
  CHECK((back.boundary.omega_final - config.boundary.omega_final).norm() ==
        0.0);

  SUBCASE("unknown keys are rejected") {
    auto bad = kv;
    bad["warp_factor"] = "9";
    CHECK_THROWS_AS(landing_config_from_map(bad), ParseError);
  }
  SUBCASE("wrong arity is rejected") {
    auto bad = kv;
    bad["gravity"] = "-1 0";
    CHECK_THROWS_AS(landing_config_from_map(bad), ParseError);
  }
  SUBCASE("trailing junk is rejected") {
    auto bad = kv;
    bad["alpha"] = "0.01 extra";
    CHECK_THROWS_AS(landing_config_from_map(bad), ParseError);
  }
  SUBCASE("non-numeric values are rejected") {
    auto bad = kv;
    bad["dry_mass"] = "heavy";
    CHECK_THROWS_AS(landing_config_from_map(bad), ParseError);
  }
}

TEST_CASE("boundary quaternions are normalized at ingestion") {
  LandingConfig config;
  // The stock initial attitude is quoted to four digits; ingestion has
  // to absorb that rounding.
  CHECK(std::abs(config.boundary.q_initial.norm() - 1.0) > 0.0);
  const ProblemDefinition problem = landing_problem(config);
  const Eigen::VectorXd q = problem.initial_conditions[3].target;
  CHECK(std::abs(q.norm() - 1.0) <= 1e-15);

  LandingConfig off = config;
  off.boundary.q_initial *= 1.2;
  CHECK_THROWS_AS(landing_problem(off), ArgumentError);
}

TEST_CASE("nonpositive mass is rejected by the dynamics") {
  const LandingConfig config;
  const ProblemDefinition problem = landing_problem(config);
  Eigen::VectorXd x = default_landing_state();
  x[0] = 0.0;
  const Eigen::VectorXd u = landing_control(1.0, {1.0, 0.0, 0.0});
  CHECK_THROWS_AS(problem.dynamics(x, u), DomainError);
  Eigen::MatrixXd jx, ju;
  CHECK_THROWS_AS(problem.dynamics_jacobian(x, u, jx, ju), DomainError);
}

TEST_CASE("user-supplied drag enters the velocity derivative") {
  LandingConfig config;
  config.params.drag_model = DragModel::UserSupplied;

  SUBCASE("missing callback is rejected") {
    CHECK_THROWS_AS(landing_problem(config), ArgumentError);
  }

  config.params.drag = [](const Eigen::VectorXd& x) {
    return Eigen::Vector3d(0.3 * x.segment<3>(4));
  };
  const ProblemDefinition with_drag = landing_problem(config);
  // The analytic Jacobian is dropped; the transcription falls back to
  // finite differences.
  CHECK_FALSE(static_cast<bool>(with_drag.dynamics_jacobian));

  LandingConfig plain_config;
  const ProblemDefinition plain = landing_problem(plain_config);
  const Eigen::VectorXd x = default_landing_state();
  const Eigen::VectorXd u = landing_control(2.0, {1.0, 0.0, 0.0});
  const Eigen::Vector3d diff = with_drag.dynamics(x, u).segment<3>(4) -
                               plain.dynamics(x, u).segment<3>(4);
  const Eigen::Vector3d expected = -0.3 * x.segment<3>(4) / x[0];
  CHECK((diff - expected).norm() <= 1e-15);
}

TEST_CASE("parameter validation rejects out-of-range values") {
  LandingParams p;
  CHECK_NOTHROW(p.validate());

  LandingParams bad = p;
  bad.thrust_min = 2.0;
  bad.thrust_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = p;
  bad.m_dry = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = p;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = p;
  bad.delta_max = 3.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = p;
  bad.t_f = -1.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = p;
  bad.j_inertia(0, 1) = 0.5;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = p;
  bad.j_inertia = -Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("initial references hit their endpoints and stay feasible") {
  SUBCASE("landing") {
    const LandingConfig config;
    const ProblemDefinition problem = landing_problem(config);
    const HpGrid grid = landing_grid(config.params);
    const ReferenceTrajectory ref = landing_initial_reference(config, grid);
    CHECK_NOTHROW(
        ref.validate(grid, problem.state_chart, problem.control_chart));
    CHECK(ref.state(0, 0)[0] == config.boundary.m_wet);
    CHECK((ref.state(0, 0).segment<3>(1) - config.boundary.r_initial)
              .norm() == 0.0);
    const Eigen::VectorXd last =
        ref.state(grid.segments - 1, grid.rule.degree);
    CHECK((last.segment<3>(1) - config.boundary.r_final).norm() <= 1e-12);
    CHECK((last.segment<3>(4) - config.boundary.v_final).norm() <= 1e-12);
    CHECK(last[0] > config.params.m_dry);
    // Mass decreases monotonically along the guess.
    double prev = ref.state(0, 0)[0];
    for (int h = 0; h < grid.segments; ++h) {
      for (int i = 1; i <= grid.rule.degree; ++i) {
        CHECK(ref.state(h, i)[0] <= prev + 1e-15);
        prev = ref.state(h, i)[0];
        CHECK(ref.control(h, i)[0] >= config.params.thrust_min);
        CHECK(ref.control(h, i)[0] <= config.params.thrust_max);
      }
    }
  }
  SUBCASE("attitude toy") {
    const AttitudeToyParams params;
    const ProblemDefinition problem = attitude_toy_problem(params);
    const HpGrid grid = attitude_toy_grid(params);
    const ReferenceTrajectory ref =
        attitude_toy_initial_reference(params, grid);
    CHECK_NOTHROW(
        ref.validate(grid, problem.state_chart, problem.control_chart));
    CHECK((ref.state(0, 0).head<4>() - params.q_initial).norm() == 0.0);
    const Eigen::VectorXd last =
        ref.state(grid.segments - 1, grid.rule.degree);
    CHECK((last.head<4>() - params.q_final).norm() <= 1e-12);
  }
  SUBCASE("double integrator") {
    const LqParams params;
    const ProblemDefinition problem = lq_problem(params);
    const HpGrid grid = lq_grid(params);
    const ReferenceTrajectory ref = lq_initial_reference(params, grid);
    CHECK_NOTHROW(
        ref.validate(grid, problem.state_chart, problem.control_chart));
    CHECK((ref.state(0, 0) - params.x_initial).norm() == 0.0);
  }
}

TEST_CASE("lq dynamics and cost match their definitions") {
  const LqParams params;
  const ProblemDefinition problem = lq_problem(params);
  const Eigen::Vector2d x(0.3, -0.7);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.25);
  const Eigen::VectorXd f = problem.dynamics(x, u);
  CHECK(f[0] == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(problem.running_cost(x, u) ==
        doctest::Approx(x.squaredNorm() + 0.0625).epsilon(1e-15));
  Eigen::MatrixXd hxx, huu;
  problem.running_cost_hessian(x, u, hxx, huu);
  CHECK((hxx - 2.0 * Eigen::Matrix2d::Identity()).norm() == 0.0);
  CHECK(huu(0, 0) == 2.0);
}

TEST_CASE("attitude tangency holds at random states") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  Rng rng(505);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(7);
    x << rng.unit_quaternion(), rng.vector(3, 1.0);
    CHECK(problem.tangency_residual(x, rng.vector(3, 1.0)) <= 1e-14);
  }
}
