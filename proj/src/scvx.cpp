// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/scvx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "mscvx/errors.hpp"

namespace mscvx {

namespace {

// Symmetric positive-semidefinite square root with small negative
// eigenvalues clamped to zero, used to turn user Hessians into epigraph
// rows.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    lam[i] = lam[i] > 0.0 ? std::sqrt(lam[i]) : 0.0;
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Frame-coordinate gradient of the terminal cost at the final node,
// analytic when supplied, otherwise central differences through the
// retraction.
Eigen::VectorXd terminal_gradient(const ProblemDefinition& problem,
                                  const Eigen::VectorXd& x) {
  const ManifoldChart& chart = problem.state_chart;
  if (problem.terminal_cost_gradient) {
    return chart.frame(x).transpose() * problem.terminal_cost_gradient(x);
  }
  const int n = chart.intrinsic_dim();
  const double step = 1e-6 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd g(n);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    eta[j] = step;
    const double fp = problem.terminal_cost(chart.retract(x, eta));
    eta[j] = -step;
    const double fm = problem.terminal_cost(chart.retract(x, eta));
    eta[j] = 0.0;
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

void add_quadratic_cost(ConicProgramBuilder& b, const std::string& name,
                        const Eigen::MatrixXd& H, double scale,
                        int var_offset) {
  if (H.size() == 0 || H.cwiseAbs().maxCoeff() == 0.0) return;
  const Eigen::MatrixXd S = psd_sqrt(H);
  const double c = std::sqrt(0.5 * scale);
  std::vector<AffineExpr> rows;
  for (int r = 0; r < S.rows(); ++r) {
    AffineExpr e;
    for (int j = 0; j < S.cols(); ++j) {
      if (S(r, j) != 0.0) e.add(var_offset + j, c * S(r, j));
    }
    rows.push_back(e);
  }
  encode_quadratic_epigraph(b, name, rows, 1.0);
}

// Equality rows pinning one chart block of eta to the inverse
// retraction onto the boundary target.
void add_boundary_rows(ConicProgramBuilder& b, const ManifoldChart& chart,
                       const Eigen::VectorXd& x_ref, int eta_offset,
                       const std::vector<BoundaryCondition>& conditions,
                       const char* what) {
  for (const auto& bc : conditions) {
    const auto& blocks = chart.blocks();
    if (bc.block < 0 || bc.block >= static_cast<int>(blocks.size())) {
      throw ArgumentError(std::string(what) +
                          ": boundary condition block index out of range");
    }
    const auto& blk = blocks[bc.block];
    if (bc.target.size() != blk.ambient_dim) {
      throw ArgumentError(std::string(what) +
                          ": boundary target dimension disagrees with the "
                          "chart block");
    }
    // Swap the target into a copy of the reference point; all other
    // blocks contribute exact zeros to the inverse retraction.
    Eigen::VectorXd point = x_ref;
    point.segment(blk.ambient_offset, blk.ambient_dim) = bc.target;
    const Eigen::VectorXd d = chart.inverse_retract(x_ref, point);
    for (int j = 0; j < blk.intrinsic_dim; ++j) {
      AffineExpr e;
      e.constant = -d[blk.intrinsic_offset + j];
      e.add(eta_offset + blk.intrinsic_offset + j, 1.0);
      b.add_equality(e);
    }
  }
}

double node_norm(const Eigen::VectorXd& primal, int offset, int dim) {
  return primal.segment(offset, dim).norm();
}

}  // namespace

ConicSolverSettings ScvxSettings::tight_conic_settings() {
  ConicSolverSettings s;
  s.feas_tol = 1e-10;
  s.abs_tol = 1e-12;
  s.rel_tol = 1e-13;
  return s;
}

void ScvxSettings::validate() const {
  if (!(mu_nu > 0.0) || !(mu_s > 0.0) || !(mu_r > 0.0)) {
    throw ArgumentError("scvx settings: penalty weights must be positive");
  }
  if (!(epsilon > 0.0)) {
    throw ArgumentError("scvx settings: convergence tolerance must be "
                        "positive");
  }
  if (max_iters < 1) {
    throw ArgumentError("scvx settings: iteration budget must be at least 1");
  }
  if (state_trust_region && !(*state_trust_region > 0.0)) {
    throw ArgumentError("scvx settings: state trust region radius must be "
                        "positive");
  }
  if (sigma_bounds &&
      !(sigma_bounds->first > 0.0 &&
        sigma_bounds->first <= sigma_bounds->second)) {
    throw ArgumentError("scvx settings: sigma bounds must satisfy "
                        "0 < low <= high");
  }
}

const char* to_string(ScvxStatus s) {
  switch (s) {
    case ScvxStatus::Converged:
      return "Converged";
    case ScvxStatus::MaxIters:
      return "MaxIters";
    case ScvxStatus::SubproblemFailure:
      return "SubproblemFailure";
  }
  return "?";
}

BuiltSubproblem build_subproblem(const ProblemDefinition& problem,
                                 const ReferenceTrajectory& ref,
                                 const HpGrid& grid,
                                 const ScvxSettings& settings) {
  settings.validate();
  ref.validate(grid, problem.state_chart, problem.control_chart);
  const ManifoldChart& schart = problem.state_chart;
  const ManifoldChart& cchart = problem.control_chart;
  const int N = grid.segments;
  const int p = grid.rule.degree;
  const int n = schart.intrinsic_dim();
  const int m = cchart.intrinsic_dim();
  const double sigma = ref.sigma_bar;

  BuiltSubproblem out;
  out.nodes.resize(N);
  for (int h = 0; h < N; ++h) {
    for (int i = 1; i <= p; ++i) {
      out.nodes[h].push_back(linearize_node(problem, ref, grid, h, i));
    }
  }

  SubproblemLayout& L = out.layout;
  L.segments = N;
  L.p = p;
  L.n = n;
  L.m = m;

  ConicProgramBuilder b;
  L.eta_start = b.add_variables("eta", N * (p + 1) * n);
  L.xi_start = b.add_variables("xi", N * p * m);
  if (settings.free_final_time) L.dsigma = b.add_variables("dsigma", 1);
  L.nu_start = b.add_variables("nu", N * p * n);
  const bool slack = !problem.path_constraints.empty();
  if (slack) L.s_start = b.add_variables("s", N * p);

  // Collocation equalities. The assembled segment block covers the
  // state, control and time columns; the virtual control column is an
  // identity appended per row.
  for (int h = 0; h < N; ++h) {
    const SegmentRows seg = assemble_collocation_rows(
        out.nodes[h], grid, sigma, settings.free_final_time);
    const int control_cols = (p + 1) * n;
    for (int row = 0; row < p * n; ++row) {
      const int i = 1 + row / n;
      AffineExpr e;
      e.constant = -seg.rhs[row];
      for (int c = 0; c < seg.coeffs.cols(); ++c) {
        const double a = seg.coeffs(row, c);
        if (a == 0.0) continue;
        int var;
        if (c < control_cols) {
          var = L.eta(h, c / n) + c % n;
        } else if (c < control_cols + p * m) {
          const int j = c - control_cols;
          var = L.xi(h, 1 + j / m) + j % m;
        } else {
          var = L.dsigma;
        }
        e.add(var, a);
      }
      e.add(L.nu(h, i) + row % n, -1.0);
      b.add_equality(e);
    }
  }

  // Linearized path rows, all bounded by the node's scalar slack.
  for (int h = 0; h < N; ++h) {
    for (int i = 1; i <= p; ++i) {
      const LinearizedNode& node = out.nodes[h][i - 1];
      for (int r = 0; r < node.g_ref.size(); ++r) {
        AffineExpr e;
        e.constant = -node.g_ref[r];
        e.add(L.s(h, i), 1.0);
        for (int j = 0; j < n; ++j) {
          if (node.Gx(r, j) != 0.0) e.add(L.eta(h, i) + j, -node.Gx(r, j));
        }
        for (int j = 0; j < m; ++j) {
          if (node.Gu(r, j) != 0.0) e.add(L.xi(h, i) + j, -node.Gu(r, j));
        }
        b.add_nonnegative(e);
      }
    }
  }

  // Interface linking.
  for (const LinkingRow& lr : linking_rows(grid)) {
    for (int j = 0; j < n; ++j) {
      AffineExpr e;
      e.add(L.eta(lr.left_segment, p) + j, 1.0);
      e.add(L.eta(lr.left_segment + 1, 0) + j, -1.0);
      b.add_equality(e);
    }
  }

  add_boundary_rows(b, schart, ref.state(0, 0), L.eta(0, 0),
                    problem.initial_conditions, "initial condition");
  add_boundary_rows(b, schart, ref.state(N - 1, p), L.eta(N - 1, p),
                    problem.final_conditions, "final condition");

  if (settings.free_final_time && settings.sigma_bounds) {
    AffineExpr lo;
    lo.constant = sigma - settings.sigma_bounds->first;
    lo.add(L.dsigma, 1.0);
    b.add_nonnegative(lo);
    AffineExpr hi;
    hi.constant = settings.sigma_bounds->second - sigma;
    hi.add(L.dsigma, -1.0);
    b.add_nonnegative(hi);
  }

  if (settings.state_trust_region) {
    for (int h = 0; h < N; ++h) {
      for (int i = h == 0 ? 0 : 1; i <= p; ++i) {
        std::vector<AffineExpr> cone;
        cone.push_back(AffineExpr::constant_of(*settings.state_trust_region));
        for (int j = 0; j < n; ++j) {
          cone.push_back(AffineExpr::of(L.eta(h, i) + j));
        }
        b.add_second_order(cone);
      }
    }
  }

  // Cost: linearized terminal cost plus the quadrature-weighted running
  // cost expansion. With a free final time the integral also moves with
  // sigma through its value at the reference.
  if (problem.terminal_cost) {
    b.add_cost_constant(problem.terminal_cost(ref.state(N - 1, p)));
    const Eigen::VectorXd g = terminal_gradient(problem, ref.state(N - 1, p));
    for (int j = 0; j < n; ++j) {
      if (g[j] != 0.0) b.add_cost(L.eta(N - 1, p) + j, g[j]);
    }
  }
  if (problem.running_cost) {
    for (int h = 0; h < N; ++h) {
      for (int i = 1; i <= p; ++i) {
        const LinearizedNode& node = out.nodes[h][i - 1];
        const double w = grid.rule.weights[i - 1];
        b.add_cost_constant(sigma * w * node.L);
        for (int j = 0; j < n; ++j) {
          if (node.Lx[j] != 0.0) {
            b.add_cost(L.eta(h, i) + j, sigma * w * node.Lx[j]);
          }
        }
        for (int j = 0; j < m; ++j) {
          if (node.Lu[j] != 0.0) {
            b.add_cost(L.xi(h, i) + j, sigma * w * node.Lu[j]);
          }
        }
        if (L.dsigma >= 0) b.add_cost(L.dsigma, w * node.L);
        add_quadratic_cost(b, "jcvx", node.Hxx, sigma * w, L.eta(h, i));
        add_quadratic_cost(b, "jcvx", node.Huu, sigma * w, L.xi(h, i));
      }
    }
  }

  // Penalties, each weighted by the node's quadrature weight.
  for (int h = 0; h < N; ++h) {
    for (int i = 1; i <= p; ++i) {
      const double w = grid.rule.weights[i - 1];
      encode_l1_penalty(b, "nu_abs", L.nu(h, i), n, settings.mu_nu * w);
      if (slack) {
        encode_positive_part(b, "s_pos", AffineExpr::of(L.s(h, i)),
                             settings.mu_s * w);
      }
      L.r_index.push_back(
          encode_trust_region(b, "r", L.xi(h, i), m, settings.mu_r * w));
    }
  }

  // Keep-convex constraints, once per distinct node.
  const Eigen::VectorXd no_control =
      Eigen::VectorXd::Zero(cchart.ambient_dim());
  for (int h = 0; h < N; ++h) {
    for (int i = h == 0 ? 0 : 1; i <= p; ++i) {
      const bool has_control = i >= 1;
      ConvexNodeContext ctx(b, schart, cchart, ref.state(h, i),
                            has_control ? ref.control(h, i) : no_control,
                            L.eta(h, i), has_control ? L.xi(h, i) : -1, h, i,
                            h == N - 1 && i == p);
      for (const auto& emit : problem.convex_constraints) emit(ctx);
    }
  }

  out.program = b.build();
  return out;
}

ReferenceTrajectory update_reference(const ProblemDefinition& problem,
                                     const ReferenceTrajectory& ref,
                                     const SubproblemLayout& layout,
                                     const Eigen::VectorXd& primal) {
  const ManifoldChart& schart = problem.state_chart;
  const ManifoldChart& cchart = problem.control_chart;
  const int p = layout.p;
  ReferenceTrajectory out = ref;
  for (int h = 0; h < layout.segments; ++h) {
    for (int i = 0; i <= p; ++i) {
      if (h > 0 && i == 0) {
        // Shared interface point: reuse the retraction already taken
        // for node p of the previous segment.
        out.states[h][0] = out.states[h - 1][p];
        continue;
      }
      out.states[h][i] = schart.retract(
          ref.state(h, i), primal.segment(layout.eta(h, i), layout.n));
      if (i >= 1) {
        out.controls[h][i - 1] = cchart.retract(
            ref.control(h, i), primal.segment(layout.xi(h, i), layout.m));
      }
    }
  }
  if (layout.dsigma >= 0) out.sigma_bar = ref.sigma_bar + primal[layout.dsigma];
  return out;
}

SolveResult run_scvx(const ProblemDefinition& problem,
                     const ReferenceTrajectory& initial, const HpGrid& grid,
                     const ScvxSettings& settings) {
  settings.validate();
  SolveResult res;
  res.trajectory = initial;
  res.status = ScvxStatus::MaxIters;

  double prev_step = std::numeric_limits<double>::infinity();
  double prev_objective = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < settings.max_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iteration = iter;

    const BuiltSubproblem sub =
        build_subproblem(problem, res.trajectory, grid, settings);
    for (const auto& seg : sub.nodes) {
      for (const auto& node : seg) {
        rec.max_defect =
            std::max(rec.max_defect, node.rho_hat.lpNorm<Eigen::Infinity>());
      }
    }

    const ConicSolution sol = solve_conic(sub.program, settings.conic);
    rec.subproblem_status = sol.status;
    const auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           t0)
          .count();
    };
    if (sol.status != SolveStatus::Optimal) {
      rec.note = sol.message.empty() ? to_string(sol.status) : sol.message;
      rec.wall_time = elapsed();
      res.history.push_back(rec);
      res.status = ScvxStatus::SubproblemFailure;
      return res;
    }

    const SubproblemLayout& L = sub.layout;
    rec.objective = sol.objective;
    for (int h = 0; h < L.segments; ++h) {
      for (int i = 0; i <= L.p; ++i) {
        rec.state_step = std::max(
            rec.state_step, node_norm(sol.primal, L.eta(h, i), L.n));
        if (i >= 1) {
          rec.control_step = std::max(
              rec.control_step, node_norm(sol.primal, L.xi(h, i), L.m));
        }
      }
    }
    if (L.dsigma >= 0) rec.dsigma = sol.primal[L.dsigma];
    for (int h = 0; h < L.segments; ++h) {
      for (int i = 1; i <= L.p; ++i) {
        const double w = grid.rule.weights[i - 1];
        rec.virtual_penalty +=
            w * settings.mu_nu *
            sol.primal.segment(L.nu(h, i), L.n).lpNorm<1>();
        if (L.has_slack()) {
          rec.slack_penalty +=
              w * settings.mu_s * std::max(0.0, sol.primal[L.s(h, i)]);
        }
        rec.trust_penalty +=
            w * settings.mu_r * sol.primal[L.r_index[L.flat(h, i)]];
      }
    }

    res.trajectory =
        update_reference(problem, res.trajectory, sub.layout, sol.primal);
    rec.manifold_violation = res.trajectory.manifold_violation(
        problem.state_chart, problem.control_chart);

    if (rec.state_step > 10.0 * prev_step) {
      rec.note = "state step grew more than tenfold";
    }
    if (rec.objective >
        prev_objective + 1e-9 * std::max(1.0, std::abs(prev_objective))) {
      if (!rec.note.empty()) rec.note += "; ";
      rec.note += "penalized objective increased";
    }
    prev_step = rec.state_step;
    prev_objective = rec.objective;

    rec.wall_time = elapsed();
    res.history.push_back(rec);
    if (rec.state_step < settings.epsilon) {
      res.status = ScvxStatus::Converged;
      return res;
    }
  }
  return res;
}

}  // namespace mscvx
