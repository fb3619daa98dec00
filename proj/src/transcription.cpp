// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/transcription.hpp"

#include <cmath>
#include <sstream>

#include "mscvx/errors.hpp"
#include "mscvx/quaternion.hpp"

namespace mscvx {

namespace {

void check_collocation_index(const HpGrid& grid, int h, int i,
                             const char* what) {
  if (h < 0 || h >= grid.segments || i < 1 || i > grid.rule.degree) {
    std::ostringstream os;
    os << what << ": node (" << h << ", " << i << ") outside the grid";
    throw ArgumentError(os.str());
  }
}

void check_finite(const Eigen::MatrixXd& m, const char* what, int h, int i) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << what << " has non-finite entries at segment " << h << " node "
       << i;
    throw NumericalError(os.str());
  }
}

double fd_step(const Eigen::VectorXd& ref_point) {
  return 1e-6 * std::max(1.0, ref_point.lpNorm<Eigen::Infinity>());
}

// Central difference through the state retraction of the moving-frame
// field map eta |-> E(x)' f(x, u), x = R_xbar(eta). Its derivative is
// the same base the analytic route produces, so both routes receive the
// quaternion correction matrices identically afterwards.
Eigen::MatrixXd fd_state_jacobian(const ProblemDefinition& problem,
                                  const Eigen::VectorXd& xbar,
                                  const Eigen::VectorXd& ubar) {
  const ManifoldChart& chart = problem.state_chart;
  const int n = chart.intrinsic_dim();
  const double step = fd_step(xbar);
  Eigen::MatrixXd jac(n, n);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    eta[j] = step;
    const Eigen::VectorXd xp = chart.retract(xbar, eta);
    eta[j] = -step;
    const Eigen::VectorXd xm = chart.retract(xbar, eta);
    eta[j] = 0.0;
    const Eigen::VectorXd fp =
        chart.frame(xp).transpose() * problem.dynamics(xp, ubar);
    const Eigen::VectorXd fm =
        chart.frame(xm).transpose() * problem.dynamics(xm, ubar);
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

Eigen::MatrixXd fd_control_jacobian(const ProblemDefinition& problem,
                                    const Eigen::MatrixXd& state_frame,
                                    const Eigen::VectorXd& xbar,
                                    const Eigen::VectorXd& ubar) {
  const ManifoldChart& chart = problem.control_chart;
  const int m = chart.intrinsic_dim();
  const double step = fd_step(ubar);
  Eigen::MatrixXd jac(state_frame.cols(), m);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    xi[j] = step;
    const Eigen::VectorXd up = chart.retract(ubar, xi);
    xi[j] = -step;
    const Eigen::VectorXd um = chart.retract(ubar, xi);
    xi[j] = 0.0;
    jac.col(j) = state_frame.transpose() *
                 (problem.dynamics(xbar, up) - problem.dynamics(xbar, um)) /
                 (2.0 * step);
  }
  return jac;
}

// Scalar version of the two helpers above for path constraints and the
// running cost.
template <typename Fn>
void fd_scalar_gradients(const ProblemDefinition& problem,
                         const Eigen::VectorXd& xbar,
                         const Eigen::VectorXd& ubar, Fn&& fn,
                         Eigen::VectorXd& gx, Eigen::VectorXd& gu) {
  const int n = problem.state_chart.intrinsic_dim();
  const int m = problem.control_chart.intrinsic_dim();
  gx.resize(n);
  gu.resize(m);
  const double sx = fd_step(xbar);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    eta[j] = sx;
    const double fp = fn(problem.state_chart.retract(xbar, eta), ubar);
    eta[j] = -sx;
    const double fm = fn(problem.state_chart.retract(xbar, eta), ubar);
    eta[j] = 0.0;
    gx[j] = (fp - fm) / (2.0 * sx);
  }
  const double su = fd_step(ubar);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    xi[j] = su;
    const double fp = fn(xbar, problem.control_chart.retract(ubar, xi));
    xi[j] = -su;
    const double fm = fn(xbar, problem.control_chart.retract(ubar, xi));
    xi[j] = 0.0;
    gu[j] = (fp - fm) / (2.0 * su);
  }
}

void require_supported_state_chart(const ManifoldChart& chart) {
  for (const auto& blk : chart.blocks()) {
    if (blk.kind == ChartKind::Sphere2) {
      throw ArgumentError(
          "linearize_node: sphere blocks are only supported in the "
          "control chart; the defect curvature term is not implemented "
          "for sphere states");
    }
  }
}

}  // namespace

Eigen::VectorXd reference_velocity(const ProblemDefinition& problem,
                                   const ReferenceTrajectory& ref,
                                   const HpGrid& grid, int h, int i) {
  check_collocation_index(grid, h, i, "reference_velocity");
  const ManifoldChart& chart = problem.state_chart;
  const int p = grid.rule.degree;
  const Eigen::VectorXd& xi = ref.state(h, i);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(chart.intrinsic_dim());
  for (int k = 0; k <= p; ++k) {
    const double d = grid.rule.diff(i - 1, k);
    if (d == 0.0) continue;
    try {
      acc += d * chart.inverse_retract(xi, ref.state(h, k));
    } catch (const DomainError& e) {
      std::ostringstream os;
      os << "reference_velocity: nodes (" << h << ", " << i << ") and ("
         << h << ", " << k << ") are outside the injectivity region: "
         << e.what();
      throw DomainError(os.str());
    }
  }
  return acc / ref.sigma_bar;
}

Eigen::VectorXd compute_defect(const ProblemDefinition& problem,
                               const ReferenceTrajectory& ref,
                               const HpGrid& grid, int h, int i) {
  check_collocation_index(grid, h, i, "compute_defect");
  const Eigen::VectorXd& x = ref.state(h, i);
  const Eigen::VectorXd& u = ref.control(h, i);
  const Eigen::VectorXd fhat =
      problem.state_chart.frame(x).transpose() * problem.dynamics(x, u);
  return fhat - reference_velocity(problem, ref, grid, h, i);
}

std::vector<Eigen::MatrixXd> transport_blocks(const ProblemDefinition& problem,
                                              const ReferenceTrajectory& ref,
                                              const HpGrid& grid, int h,
                                              int i) {
  check_collocation_index(grid, h, i, "transport_blocks");
  const ManifoldChart& chart = problem.state_chart;
  const int p = grid.rule.degree;
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(p + 1);
  for (int k = 0; k <= p; ++k) {
    blocks.push_back(chart.transport_matrix(ref.state(h, k), ref.state(h, i)));
  }
  return blocks;
}

LinearizedNode linearize_node(const ProblemDefinition& problem,
                              const ReferenceTrajectory& ref,
                              const HpGrid& grid, int h, int i) {
  check_collocation_index(grid, h, i, "linearize_node");
  require_supported_state_chart(problem.state_chart);
  const ManifoldChart& schart = problem.state_chart;
  const ManifoldChart& cchart = problem.control_chart;
  const Eigen::VectorXd& x = ref.state(h, i);
  const Eigen::VectorXd& u = ref.control(h, i);
  const int n = schart.intrinsic_dim();
  const int m = cchart.intrinsic_dim();

  LinearizedNode node;
  node.rho_hat = compute_defect(problem, ref, grid, h, i);
  node.T_blocks = transport_blocks(problem, ref, grid, h, i);

  const Eigen::MatrixXd E = schart.frame(x);
  const Eigen::MatrixXd F = cchart.frame(u);
  const Eigen::VectorXd f = problem.dynamics(x, u);

  if (problem.dynamics_jacobian) {
    Eigen::MatrixXd jx, ju;
    problem.dynamics_jacobian(x, u, jx, ju);
    node.A_tilde = E.transpose() * jx * E;
    node.B = E.transpose() * ju * F;
    // Moving-frame correction: the frame columns rotate with the base
    // point, which shifts the coordinate derivative of each quaternion
    // block by -a I + [b]x with (a, b) = conj(q) * f_q.
    for (const auto& blk : schart.blocks()) {
      if (blk.kind != ChartKind::UnitQuaternion) continue;
      const Quat q = x.segment<4>(blk.ambient_offset);
      const Quat fq = f.segment<4>(blk.ambient_offset);
      const Quat w = quat_mul(quat_conjugate(q), fq);
      node.A_tilde.block<3, 3>(blk.intrinsic_offset, blk.intrinsic_offset) +=
          -w[0] * Eigen::Matrix3d::Identity() +
          skew(Eigen::Vector3d(w.tail<3>()));
    }
  } else {
    node.A_tilde = fd_state_jacobian(problem, x, u);
    node.B = fd_control_jacobian(problem, E, x, u);
  }
  check_finite(node.A_tilde, "state jacobian", h, i);
  check_finite(node.B, "control jacobian", h, i);

  // Correction matrices for quaternion blocks, applied on top of the
  // moving-frame base from either route above: the retraction carrying
  // the defect contributes +skew(rho), the node transport along the
  // reference rate contributes -skew(omega). The reference rate here is
  // the physical body rate, twice the half-angle coordinate rate.
  const Eigen::VectorXd fhat = E.transpose() * f;
  for (const auto& blk : schart.blocks()) {
    if (blk.kind != ChartKind::UnitQuaternion) continue;
    const int o = blk.intrinsic_offset;
    const Quat q = x.segment<4>(blk.ambient_offset);
    const Eigen::Vector3d rho_q = node.rho_hat.segment<3>(o);
    const Eigen::Vector3d omega_b = 2.0 * fhat.segment<3>(o);
    const QuatAuxTerms aux = quat_aux_terms(q, omega_b, rho_q);
    node.A_tilde.block<3, 3>(o, o) += aux.S - aux.C - aux.E;
  }

  // Path constraints, linearized intrinsically.
  const int rows = static_cast<int>(problem.path_constraints.size());
  node.g_ref.resize(rows);
  node.Gx.resize(rows, n);
  node.Gu.resize(rows, m);
  for (int r = 0; r < rows; ++r) {
    const PathConstraint& pc = problem.path_constraints[r];
    node.g_ref[r] = pc.value(x, u);
    Eigen::VectorXd gx, gu;
    if (pc.gradient) {
      Eigen::VectorXd ax, au;
      pc.gradient(x, u, ax, au);
      gx = E.transpose() * ax;
      gu = F.transpose() * au;
    } else {
      fd_scalar_gradients(problem, x, u, pc.value, gx, gu);
    }
    node.Gx.row(r) = gx.transpose();
    node.Gu.row(r) = gu.transpose();
  }
  check_finite(node.Gx, "path constraint jacobian", h, i);
  check_finite(node.Gu, "path constraint jacobian", h, i);

  // Running cost expansion.
  if (problem.running_cost) {
    node.L = problem.running_cost(x, u);
    if (problem.running_cost_gradient) {
      Eigen::VectorXd ax, au;
      problem.running_cost_gradient(x, u, ax, au);
      node.Lx = E.transpose() * ax;
      node.Lu = F.transpose() * au;
    } else {
      fd_scalar_gradients(problem, x, u, problem.running_cost, node.Lx,
                          node.Lu);
    }
    if (problem.running_cost_hessian) {
      problem.running_cost_hessian(x, u, node.Hxx, node.Huu);
    }
  } else {
    node.Lx = Eigen::VectorXd::Zero(n);
    node.Lu = Eigen::VectorXd::Zero(m);
  }
  return node;
}

SegmentRows assemble_collocation_rows(const std::vector<LinearizedNode>& nodes,
                                      const HpGrid& grid, double sigma_bar,
                                      bool free_final_time) {
  const int p = grid.rule.degree;
  if (static_cast<int>(nodes.size()) != p) {
    throw ArgumentError("assemble_collocation_rows: expected one "
                        "linearized node per collocation point");
  }
  const int n = static_cast<int>(nodes.front().rho_hat.size());
  const int m = static_cast<int>(nodes.front().B.cols());
  const int width = (p + 1) * n + p * m + (free_final_time ? 1 : 0);

  SegmentRows seg;
  seg.coeffs = Eigen::MatrixXd::Zero(p * n, width);
  seg.rhs.resize(p * n);
  for (int i = 1; i <= p; ++i) {
    const LinearizedNode& node = nodes[i - 1];
    const int row = (i - 1) * n;
    for (int k = 0; k <= p; ++k) {
      seg.coeffs.block(row, k * n, n, n) +=
          grid.rule.diff(i - 1, k) * node.T_blocks[k];
    }
    seg.coeffs.block(row, i * n, n, n) -= sigma_bar * node.A_tilde;
    seg.coeffs.block(row, (p + 1) * n + (i - 1) * m, n, m) =
        -sigma_bar * node.B;
    if (free_final_time) {
      seg.coeffs.block(row, width - 1, n, 1) = -node.rho_hat;
    }
    seg.rhs.segment(row, n) = sigma_bar * node.rho_hat;
  }
  return seg;
}

std::vector<LinkingRow> linking_rows(const HpGrid& grid) {
  std::vector<LinkingRow> rows;
  for (int h = 0; h + 1 < grid.segments; ++h) rows.push_back({h});
  return rows;
}

Eigen::VectorXd dense_state(const ProblemDefinition& problem,
                            const ReferenceTrajectory& ref, const HpGrid& grid,
                            int h, double tau) {
  if (h < 0 || h >= grid.segments) {
    throw ArgumentError("dense_state: segment index outside the grid");
  }
  if (tau < -1.0 || tau > 1.0) {
    throw ArgumentError("dense_state: tau outside [-1, 1]");
  }
  const ManifoldChart& chart = problem.state_chart;
  const int p = grid.rule.degree;
  int base = 0;
  for (int k = 1; k <= p; ++k) {
    if (std::abs(grid.rule.nodes[k] - tau) <
        std::abs(grid.rule.nodes[base] - tau)) {
      base = k;
    }
  }
  const Eigen::VectorXd& xb = ref.state(h, base);
  Eigen::MatrixXd coords(chart.intrinsic_dim(), p + 1);
  for (int k = 0; k <= p; ++k) {
    coords.col(k) = chart.inverse_retract(xb, ref.state(h, k));
  }
  return chart.retract(xb, lagrange_eval(grid.rule.nodes, coords, tau));
}

}  // namespace mscvx
