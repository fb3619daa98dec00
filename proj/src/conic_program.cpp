// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/conic_program.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "mscvx/errors.hpp"

namespace mscvx {

namespace {

using Triplet = Eigen::Triplet<double>;

void append_row(std::vector<Triplet>& trips, Eigen::VectorXd& rhs, int row,
                const AffineExpr& e, double row_sign) {
  // Row convention for cone rows: value(z) = h_row - (G z)_row, so the
  // expression's terms enter G negated and the constant lands in h.
  // Equality rows use sign +1 with the constant moved to the right side.
  for (const auto& t : e.terms) {
    trips.emplace_back(row, t.var, row_sign * t.coeff);
  }
  rhs[row] = (row_sign > 0) ? -e.constant : e.constant;
}

}  // namespace

int ConicProgramBuilder::add_variables(const std::string& name, int count) {
  if (count < 1) {
    throw ArgumentError("add_variables: count must be positive");
  }
  const int offset = num_vars_;
  blocks_.push_back({name, offset, count});
  num_vars_ += count;
  return offset;
}

void ConicProgramBuilder::check_expr(const AffineExpr& e,
                                     const char* where) const {
  for (const auto& t : e.terms) {
    if (t.var < 0 || t.var >= num_vars_) {
      throw ArgumentError(std::string(where) +
                          ": expression references an unknown variable");
    }
    if (!std::isfinite(t.coeff)) {
      throw ArgumentError(std::string(where) + ": non-finite coefficient");
    }
  }
  if (!std::isfinite(e.constant)) {
    throw ArgumentError(std::string(where) + ": non-finite constant");
  }
}

void ConicProgramBuilder::add_cost(int var, double coeff) {
  if (var < 0 || var >= num_vars_) {
    throw ArgumentError("add_cost: unknown variable");
  }
  cost_terms_.emplace_back(var, coeff);
}

void ConicProgramBuilder::add_equality(const AffineExpr& e) {
  check_expr(e, "add_equality");
  eq_rows_.push_back(e);
}

void ConicProgramBuilder::add_nonnegative(const AffineExpr& e) {
  check_expr(e, "add_nonnegative");
  lp_rows_.push_back(e);
}

void ConicProgramBuilder::add_second_order(const std::vector<AffineExpr>& e) {
  if (e.size() < 2) {
    throw ArgumentError("add_second_order: cone needs at least two rows");
  }
  for (const auto& row : e) check_expr(row, "add_second_order");
  soc_blocks_.push_back(e);
}

ConicProgram ConicProgramBuilder::build() const {
  ConicProgram p;
  p.num_vars = num_vars_;
  p.cost_constant = cost_constant_;
  p.cost = Eigen::VectorXd::Zero(num_vars_);
  for (const auto& [var, coeff] : cost_terms_) p.cost[var] += coeff;
  p.blocks = blocks_;

  const int n_eq = static_cast<int>(eq_rows_.size());
  std::vector<Triplet> eq_trips;
  p.eq_rhs = Eigen::VectorXd::Zero(n_eq);
  for (int r = 0; r < n_eq; ++r) {
    append_row(eq_trips, p.eq_rhs, r, eq_rows_[r], 1.0);
  }
  p.eq.resize(n_eq, num_vars_);
  p.eq.setFromTriplets(eq_trips.begin(), eq_trips.end());

  p.lp_rows = static_cast<int>(lp_rows_.size());
  int n_cone = p.lp_rows;
  for (const auto& blk : soc_blocks_) n_cone += static_cast<int>(blk.size());
  std::vector<Triplet> cone_trips;
  p.cone_rhs = Eigen::VectorXd::Zero(n_cone);
  int row = 0;
  for (const auto& e : lp_rows_) {
    append_row(cone_trips, p.cone_rhs, row++, e, -1.0);
  }
  for (const auto& blk : soc_blocks_) {
    p.soc_dims.push_back(static_cast<int>(blk.size()));
    for (const auto& e : blk) {
      append_row(cone_trips, p.cone_rhs, row++, e, -1.0);
    }
  }
  p.cone.resize(n_cone, num_vars_);
  p.cone.setFromTriplets(cone_trips.begin(), cone_trips.end());
  return p;
}

int encode_l1_penalty(ConicProgramBuilder& b, const std::string& name,
                      int var_offset, int count, double weight) {
  const int t0 = b.add_variables(name, count);
  for (int j = 0; j < count; ++j) {
    // t_j - v_j >= 0 and t_j + v_j >= 0 pin t_j >= |v_j| at the optimum.
    b.add_nonnegative(AffineExpr::of(t0 + j).add(var_offset + j, -1.0));
    b.add_nonnegative(AffineExpr::of(t0 + j).add(var_offset + j, 1.0));
    b.add_cost(t0 + j, weight);
  }
  return t0;
}

int encode_positive_part(ConicProgramBuilder& b, const std::string& name,
                         const AffineExpr& e, double weight) {
  const int t = b.add_variables(name, 1);
  AffineExpr upper = AffineExpr::of(t);
  upper.constant = -e.constant;
  for (const auto& term : e.terms) upper.add(term.var, -term.coeff);
  b.add_nonnegative(upper);                // t - e(z) >= 0
  b.add_nonnegative(AffineExpr::of(t));    // t >= 0
  b.add_cost(t, weight);
  return t;
}

int encode_quadratic_epigraph(ConicProgramBuilder& b, const std::string& name,
                              const std::vector<AffineExpr>& rows,
                              double weight) {
  const int t = b.add_variables(name, 1);
  // |(2 rows; t - 1)|_2 <= t + 1 is equivalent to sum rows_i^2 <= t.
  std::vector<AffineExpr> cone;
  cone.reserve(rows.size() + 2);
  cone.push_back(AffineExpr::of(t).offset(1.0));
  for (const auto& r : rows) {
    AffineExpr doubled = r;
    doubled.constant *= 2.0;
    for (auto& term : doubled.terms) term.coeff *= 2.0;
    cone.push_back(doubled);
  }
  cone.push_back(AffineExpr::of(t).offset(-1.0));
  b.add_second_order(cone);
  b.add_cost(t, weight);
  return t;
}

int encode_trust_region(ConicProgramBuilder& b, const std::string& name,
                        int var_offset, int count, double weight) {
  std::vector<AffineExpr> rows;
  rows.reserve(count);
  for (int j = 0; j < count; ++j) {
    rows.push_back(AffineExpr::of(var_offset + j));
  }
  return encode_quadratic_epigraph(b, name, rows, weight);
}

namespace {

void print_coeff(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

void print_row(std::ostream& os, const Eigen::SparseMatrix<double>& m, int row,
               double sign) {
  // Row-wise access on a column-major matrix; dumps are not hot.
  bool first = true;
  for (int col = 0; col < m.cols(); ++col) {
    const double v = m.coeff(row, col);
    if (v == 0.0) continue;
    if (!first) os << " + ";
    first = false;
    print_coeff(os, sign * v);
    os << "*z" << col;
  }
  if (first) os << "0";
}

}  // namespace

void dump_program(const ConicProgram& p, std::ostream& os) {
  os << "# conic program, " << p.num_vars << " vars, " << p.eq_count()
     << " eq rows, " << p.lp_rows << " orthant rows, " << p.soc_dims.size()
     << " soc blocks\n";
  for (const auto& blk : p.blocks) {
    os << "var " << blk.name << " offset " << blk.offset << " size "
       << blk.size << "\n";
  }
  os << "min ";
  bool first = true;
  for (int j = 0; j < p.num_vars; ++j) {
    if (p.cost[j] == 0.0) continue;
    if (!first) os << " + ";
    first = false;
    print_coeff(os, p.cost[j]);
    os << "*z" << j;
  }
  if (p.cost_constant != 0.0 || first) {
    if (!first) os << " + ";
    print_coeff(os, p.cost_constant);
  }
  os << "\n";
  for (int r = 0; r < p.eq_count(); ++r) {
    os << "eq: ";
    print_row(os, p.eq, r, 1.0);
    os << " = ";
    print_coeff(os, p.eq_rhs[r]);
    os << "\n";
  }
  for (int r = 0; r < p.lp_rows; ++r) {
    // Printed in the natural orientation: h - G z >= 0 means G z <= h.
    os << "le: ";
    print_row(os, p.cone, r, 1.0);
    os << " <= ";
    print_coeff(os, p.cone_rhs[r]);
    os << "\n";
  }
  int row = p.lp_rows;
  for (const int dim : p.soc_dims) {
    os << "soc dim " << dim << ":\n";
    for (int k = 0; k < dim; ++k) {
      os << (k == 0 ? "  bound: " : "  norm:  ");
      print_coeff(os, p.cone_rhs[row]);
      os << " - (";
      print_row(os, p.cone, row, 1.0);
      os << ")\n";
      ++row;
    }
  }
}

ConeResiduals certify(const ConicProgram& p, const Eigen::VectorXd& z) {
  if (z.size() != p.num_vars) {
    throw ArgumentError("certify: point has wrong dimension");
  }
  ConeResiduals r;
  if (p.eq_count() > 0) {
    r.eq_residual = (p.eq * z - p.eq_rhs).lpNorm<Eigen::Infinity>();
  }
  const Eigen::VectorXd s = p.cone_rhs - p.cone * z;
  for (int i = 0; i < p.lp_rows; ++i) {
    r.cone_violation = std::max(r.cone_violation, -s[i]);
  }
  int row = p.lp_rows;
  for (const int dim : p.soc_dims) {
    const double t = s[row];
    const double u = s.segment(row + 1, dim - 1).norm();
    r.cone_violation = std::max(r.cone_violation, u - t);
    row += dim;
  }
  r.cone_violation = std::max(r.cone_violation, 0.0);
  return r;
}

double objective_value(const ConicProgram& p, const Eigen::VectorXd& z) {
  return p.cost.dot(z) + p.cost_constant;
}

}  // namespace mscvx
