// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
//
// The successive-convexification layer: subproblem assembly and
// bookkeeping, the reference update, and the outer loop. The load
// bearing case solves one subproblem of the exactly-quadratic double
// integrator and compares every solved coordinate against an
// equality-constrained quadratic program assembled and solved through a
// dense KKT factorization, a completely separate optimization path.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mscvx/errors.hpp"
#include "mscvx/problems/attitude.hpp"
#include "mscvx/problems/landing.hpp"
#include "mscvx/problems/lq.hpp"
#include "mscvx/scvx.hpp"
#include "support/test_rng.hpp"

using namespace mscvx;

namespace {

int count_named(const ConicProgram& program, const std::string& name) {
  int total = 0;
  for (const auto& blk : program.blocks) {
    if (blk.name == name) total += blk.size;
  }
  return total;
}

double max_state_step(const SubproblemLayout& L, const Eigen::VectorXd& z) {
  double best = 0.0;
  for (int h = 0; h < L.segments; ++h) {
    for (int i = 0; i <= L.p; ++i) {
      best = std::max(best, z.segment(L.eta(h, i), L.n).norm());
    }
  }
  return best;
}

}  // namespace

TEST_CASE("settings validation rejects bad values") {
  ScvxSettings good;
  CHECK_NOTHROW(good.validate());

  ScvxSettings s = good;
  s.mu_nu = 0.0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = good;
  s.mu_r = -1.0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = good;
  s.epsilon = 0.0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = good;
  s.max_iters = 0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = good;
  s.state_trust_region = 0.0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = good;
  s.sigma_bounds = {0.5, 0.1};
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = good;
  s.sigma_bounds = {0.0, 0.1};
  CHECK_THROWS_AS(s.validate(), ArgumentError);
}

TEST_CASE("subproblem census matches the chart and grid dimensions") {
  SUBCASE("attitude toy, no path constraints") {
    const AttitudeToyParams params;
    const ProblemDefinition problem = attitude_toy_problem(params);
    const HpGrid grid = attitude_toy_grid(params);
    const ReferenceTrajectory ref =
        attitude_toy_initial_reference(params, grid);
    const BuiltSubproblem sub =
        build_subproblem(problem, ref, grid, attitude_toy_settings());

    const int N = grid.segments;
    const int p = grid.rule.degree;
    const int n = problem.state_chart.intrinsic_dim();
    const int m = problem.control_chart.intrinsic_dim();
    CHECK(count_named(sub.program, "eta") == N * (p + 1) * n);
    CHECK(count_named(sub.program, "xi") == N * p * m);
    CHECK(count_named(sub.program, "nu") == N * p * n);
    CHECK(count_named(sub.program, "s") == 0);
    CHECK(count_named(sub.program, "dsigma") == 0);
    CHECK(count_named(sub.program, "nu_abs") == N * p * n);
    CHECK(count_named(sub.program, "r") == N * p);
    CHECK(static_cast<int>(sub.layout.r_index.size()) == N * p);
    // Collocation, interface linking, and both pinned endpoints.
    CHECK(sub.program.eq_count() ==
          N * p * n + (N - 1) * n + n + n);
    CHECK_FALSE(sub.layout.has_slack());
  }

  SUBCASE("landing at its default grid") {
    const LandingConfig config;
    const ProblemDefinition problem = landing_problem(config);
    const HpGrid grid = landing_grid(config.params);
    const ReferenceTrajectory ref = landing_initial_reference(config, grid);
    const BuiltSubproblem sub =
        build_subproblem(problem, ref, grid, landing_settings());

    CHECK(problem.state_chart.ambient_dim() == 14);
    CHECK(problem.state_chart.intrinsic_dim() == 13);
    CHECK(problem.control_chart.ambient_dim() == 4);
    CHECK(problem.control_chart.intrinsic_dim() == 3);

    const int N = grid.segments;
    const int p = grid.rule.degree;
    CHECK(N == 5);
    CHECK(p == 10);
    CHECK(count_named(sub.program, "eta") == 715);
    CHECK(count_named(sub.program, "xi") == 150);
    CHECK(count_named(sub.program, "nu") == 650);
    CHECK(count_named(sub.program, "s") == 50);
    CHECK(count_named(sub.program, "nu_abs") == 650);
    CHECK(count_named(sub.program, "s_pos") == 50);
    CHECK(count_named(sub.program, "r") == 50);
    // 650 collocation rows, 4 interfaces of 13, 13 initial, 12 final
    // (the terminal mass stays free).
    CHECK(sub.program.eq_count() == 650 + 52 + 13 + 12);
    CHECK(sub.layout.has_slack());
  }
}

TEST_CASE("equilibrium reference yields a vanishing step") {
  LqParams params;
  params.x_initial = Eigen::Vector2d::Zero();
  const ProblemDefinition problem = lq_problem(params);
  const HpGrid grid = lq_grid(params);
  const ReferenceTrajectory ref = lq_initial_reference(params, grid);

  ScvxSettings settings;
  const BuiltSubproblem sub = build_subproblem(problem, ref, grid, settings);
  const ConicSolution sol = solve_conic(sub.program, settings.conic);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(max_state_step(sub.layout, sol.primal) <= 1e-7);

  const SolveResult res = run_scvx(problem, ref, grid, settings);
  CHECK(res.status == ScvxStatus::Converged);
  CHECK(res.history.size() == 1);
}

TEST_CASE("single convexification step matches an equality-constrained "
          "quadratic oracle") {
  const LqParams params;
  const ProblemDefinition problem = lq_problem(params);
  const HpGrid grid = lq_grid(params);
  const ReferenceTrajectory ref = lq_initial_reference(params, grid);

  ScvxSettings settings;
  const BuiltSubproblem sub = build_subproblem(problem, ref, grid, settings);
  const SubproblemLayout& L = sub.layout;
  const ConicSolution sol = solve_conic(sub.program, settings.conic);
  REQUIRE(sol.status == SolveStatus::Optimal);

  // With the large virtual-control weight the dynamics rows hold
  // exactly, so the subproblem reduces to minimizing the quadratic cost
  // expansion (including the trust-region quadratic) over the affine
  // collocation constraints. Solve that reduction through a dense KKT
  // system instead of a cone program.
  const int N = L.segments;
  const int p = L.p;
  const int n = L.n;
  const int m = L.m;
  const double sigma = ref.sigma_bar;
  const int nz = L.xi_start + N * p * m;

  const int rows_colloc = N * p * n;
  const int rows_link = (N - 1) * n;
  const int rows_init = n;
  const int nr = rows_colloc + rows_link + rows_init;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nr, nz);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nr);

  for (int h = 0; h < N; ++h) {
    const SegmentRows seg =
        assemble_collocation_rows(sub.nodes[h], grid, sigma, false);
    const int state_cols = (p + 1) * n;
    for (int r = 0; r < p * n; ++r) {
      const int row = h * p * n + r;
      rhs[row] = seg.rhs[r];
      for (int c = 0; c < seg.coeffs.cols(); ++c) {
        if (seg.coeffs(r, c) == 0.0) continue;
        const int col = c < state_cols
                            ? L.eta(h, c / n) + c % n
                            : L.xi(h, 1 + (c - state_cols) / m) +
                                  (c - state_cols) % m;
        A(row, col) = seg.coeffs(r, c);
      }
    }
  }
  for (int h = 0; h + 1 < N; ++h) {
    for (int j = 0; j < n; ++j) {
      const int row = rows_colloc + h * n + j;
      A(row, L.eta(h, p) + j) = 1.0;
      A(row, L.eta(h + 1, 0) + j) = -1.0;
    }
  }
  // The reference starts exactly at the pinned initial state.
  for (int j = 0; j < n; ++j) {
    A(rows_colloc + rows_link + j, L.eta(0, 0) + j) = 1.0;
  }

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nz, nz);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nz);
  double constant = 0.0;
  for (int h = 0; h < N; ++h) {
    for (int i = 1; i <= p; ++i) {
      const LinearizedNode& node = sub.nodes[h][i - 1];
      const double w = grid.rule.weights[i - 1];
      P.block(L.eta(h, i), L.eta(h, i), n, n) += sigma * w * node.Hxx;
      P.block(L.xi(h, i), L.xi(h, i), m, m) +=
          sigma * w * node.Huu +
          2.0 * settings.mu_r * w * Eigen::MatrixXd::Identity(m, m);
      c.segment(L.eta(h, i), n) += sigma * w * node.Lx;
      c.segment(L.xi(h, i), m) += sigma * w * node.Lu;
      constant += sigma * w * node.L;
    }
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nz + nr, nz + nr);
  kkt.topLeftCorner(nz, nz) = P;
  kkt.topRightCorner(nz, nr) = A.transpose();
  kkt.bottomLeftCorner(nr, nz) = A;
  Eigen::VectorXd kkt_rhs(nz + nr);
  kkt_rhs << -c, rhs;
  const Eigen::VectorXd zl = kkt.fullPivLu().solve(kkt_rhs);
  const Eigen::VectorXd z = zl.head(nz);
  REQUIRE((kkt * zl - kkt_rhs).lpNorm<Eigen::Infinity>() < 1e-10);

  for (int h = 0; h < N; ++h) {
    for (int i = 0; i <= p; ++i) {
      const Eigen::VectorXd diff =
          sol.primal.segment(L.eta(h, i), n) - z.segment(L.eta(h, i), n);
      CHECK(diff.lpNorm<Eigen::Infinity>() <= 1e-6);
      if (i >= 1) {
        const Eigen::VectorXd du =
            sol.primal.segment(L.xi(h, i), m) - z.segment(L.xi(h, i), m);
        CHECK(du.lpNorm<Eigen::Infinity>() <= 1e-6);
        CHECK(sol.primal.segment(L.nu(h, i), n).lpNorm<Eigen::Infinity>() <=
              1e-8);
      }
    }
  }

  const double oracle_objective =
      0.5 * z.dot(P * z) + c.dot(z) + constant;
  CHECK(sol.objective == doctest::Approx(oracle_objective).epsilon(1e-5));
}

TEST_CASE("converged double integrator is a fixed point of the subproblem") {
  const LqParams params;
  const ProblemDefinition problem = lq_problem(params);
  const HpGrid grid = lq_grid(params);
  const ReferenceTrajectory ref = lq_initial_reference(params, grid);

  ScvxSettings settings;
  const SolveResult res = run_scvx(problem, ref, grid, settings);
  REQUIRE(res.status == ScvxStatus::Converged);
  // Exactly quadratic problem: the first step lands near the optimum
  // and the trust-region penalty recenters each round, so the remaining
  // steps shrink geometrically.
  CHECK(res.history.size() <= 6);

  const BuiltSubproblem again =
      build_subproblem(problem, res.trajectory, grid, settings);
  double defect = 0.0;
  for (const auto& seg : again.nodes) {
    for (const auto& node : seg) {
      defect = std::max(defect, node.rho_hat.lpNorm<Eigen::Infinity>());
    }
  }
  CHECK(defect <= 1e-7);
  const ConicSolution sol = solve_conic(again.program, settings.conic);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(max_state_step(again.layout, sol.primal) <= 1e-5);
}

TEST_CASE("update with a zero step returns the reference bitwise") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  const HpGrid grid = attitude_toy_grid(params);
  const ReferenceTrajectory ref = attitude_toy_initial_reference(params, grid);
  const BuiltSubproblem sub =
      build_subproblem(problem, ref, grid, attitude_toy_settings());

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sub.program.num_vars);
  const ReferenceTrajectory out =
      update_reference(problem, ref, sub.layout, zero);
  CHECK(out.sigma_bar == ref.sigma_bar);
  for (int h = 0; h < grid.segments; ++h) {
    for (int i = 0; i <= grid.rule.degree; ++i) {
      CHECK((out.state(h, i) - ref.state(h, i)).lpNorm<Eigen::Infinity>() ==
            0.0);
      if (i >= 1) {
        CHECK((out.control(h, i) - ref.control(h, i))
                  .lpNorm<Eigen::Infinity>() == 0.0);
      }
    }
  }
}

TEST_CASE("random update stays on the charts and keeps interfaces shared") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  const HpGrid grid = attitude_toy_grid(params);
  const ReferenceTrajectory ref = attitude_toy_initial_reference(params, grid);
  const BuiltSubproblem sub =
      build_subproblem(problem, ref, grid, attitude_toy_settings());
  const SubproblemLayout& L = sub.layout;

  mscvx::testsupport::Rng rng(401);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(sub.program.num_vars);
  for (int h = 0; h < L.segments; ++h) {
    for (int i = 0; i <= L.p; ++i) {
      step.segment(L.eta(h, i), L.n) = rng.vector(L.n, 0.2);
      if (i >= 1) step.segment(L.xi(h, i), L.m) = rng.vector(L.m, 0.2);
    }
  }
  const ReferenceTrajectory out =
      update_reference(problem, ref, sub.layout, step);
  CHECK_NOTHROW(
      out.validate(grid, problem.state_chart, problem.control_chart));
  CHECK(out.manifold_violation(problem.state_chart, problem.control_chart) <=
        1e-14);
  CHECK(out.sigma_bar == ref.sigma_bar);
}

TEST_CASE("time step accumulates into sigma when the final time is free") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  const HpGrid grid = attitude_toy_grid(params);
  const ReferenceTrajectory ref = attitude_toy_initial_reference(params, grid);

  ScvxSettings settings = attitude_toy_settings();
  settings.free_final_time = true;
  settings.sigma_bounds = {0.1, 1.0};
  const BuiltSubproblem sub = build_subproblem(problem, ref, grid, settings);
  REQUIRE(sub.layout.dsigma >= 0);
  CHECK(count_named(sub.program, "dsigma") == 1);

  Eigen::VectorXd step = Eigen::VectorXd::Zero(sub.program.num_vars);
  step[sub.layout.dsigma] = 0.01;
  const ReferenceTrajectory out =
      update_reference(problem, ref, sub.layout, step);
  CHECK(out.sigma_bar == ref.sigma_bar + 0.01);
}

TEST_CASE("attitude maneuver converges with machine-precision manifold "
          "feasibility") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  const HpGrid grid = attitude_toy_grid(params);
  const ReferenceTrajectory ref = attitude_toy_initial_reference(params, grid);

  const ScvxSettings settings = attitude_toy_settings();
  const SolveResult res = run_scvx(problem, ref, grid, settings);
  REQUIRE(res.status == ScvxStatus::Converged);
  CHECK(res.history.size() <= 30);
  for (const IterationRecord& rec : res.history) {
    CHECK(rec.subproblem_status == SolveStatus::Optimal);
    CHECK(rec.manifold_violation <= 1e-12);
  }
  CHECK(res.history.back().state_step < settings.epsilon);
  CHECK(res.history.back().virtual_penalty <= 1e-5);

  // The endpoint rows pin both boundaries through exact inverse
  // retractions, so the converged endpoints sit on their targets.
  CHECK_NOTHROW(
      res.trajectory.validate(grid, problem.state_chart,
                              problem.control_chart));
  Eigen::VectorXd xf(7);
  xf << params.q_final, params.omega_final;
  const Eigen::VectorXd miss = problem.state_chart.inverse_retract(
      res.trajectory.state(grid.segments - 1, grid.rule.degree), xf);
  CHECK(miss.norm() <= 1e-5);
}

TEST_CASE("identical runs produce identical histories") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  const HpGrid grid = attitude_toy_grid(params);
  const ReferenceTrajectory ref = attitude_toy_initial_reference(params, grid);
  const ScvxSettings settings = attitude_toy_settings();

  const SolveResult a = run_scvx(problem, ref, grid, settings);
  const SolveResult b = run_scvx(problem, ref, grid, settings);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].objective == b.history[k].objective);
    CHECK(a.history[k].state_step == b.history[k].state_step);
    CHECK(a.history[k].control_step == b.history[k].control_step);
  }
  for (int h = 0; h < grid.segments; ++h) {
    for (int i = 0; i <= grid.rule.degree; ++i) {
      CHECK((a.trajectory.state(h, i) - b.trajectory.state(h, i))
                .lpNorm<Eigen::Infinity>() == 0.0);
    }
  }
}

TEST_CASE("an infeasible subproblem stops the loop with a failure status") {
  const LqParams params;
  ProblemDefinition problem = lq_problem(params);
  // A second, contradictory pin on the same initial block.
  problem.initial_conditions.push_back({0, Eigen::Vector2d(5.0, 5.0)});
  const HpGrid grid = lq_grid(params);
  const ReferenceTrajectory ref = lq_initial_reference(params, grid);

  const SolveResult res = run_scvx(problem, ref, grid, ScvxSettings{});
  CHECK(res.status == ScvxStatus::SubproblemFailure);
  REQUIRE(res.history.size() == 1);
  CHECK(res.history[0].subproblem_status != SolveStatus::Optimal);
  CHECK_FALSE(res.history[0].note.empty());
}

TEST_CASE("state trust region caps the first step") {
  const AttitudeToyParams params;
  const ProblemDefinition problem = attitude_toy_problem(params);
  const HpGrid grid = attitude_toy_grid(params);
  const ReferenceTrajectory ref = attitude_toy_initial_reference(params, grid);

  ScvxSettings settings = attitude_toy_settings();
  settings.state_trust_region = 1e-3;
  settings.max_iters = 1;
  const SolveResult res = run_scvx(problem, ref, grid, settings);
  REQUIRE(res.history.size() == 1);
  CHECK(res.history[0].subproblem_status == SolveStatus::Optimal);
  CHECK(res.history[0].state_step <= 1e-3 + 1e-9);
}
