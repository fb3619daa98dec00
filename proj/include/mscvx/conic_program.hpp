// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mscvx {

// Conic program in the standard primal form
//
//   minimize    c'z + c0
//   subject to  A z = b
//               h - G z in K
//
// where K is a product of a nonnegative orthant (the first lp_rows rows
// of G) and second order cones of the listed dimensions. A second order
// cone block (t, u) requires |u|_2 <= t with t the first row.

struct AffineTerm {
  int var;
  double coeff;
};

// constant + sum of coeff * z[var]. Terms may repeat a variable; rows are
// compressed when the program is built.
struct AffineExpr {
  double constant = 0.0;
  std::vector<AffineTerm> terms;

  static AffineExpr of(int var, double coeff = 1.0) {
    AffineExpr e;
    e.terms.push_back({var, coeff});
    return e;
  }
  static AffineExpr constant_of(double c) {
    AffineExpr e;
    e.constant = c;
    return e;
  }
  AffineExpr& add(int var, double coeff) {
    terms.push_back({var, coeff});
    return *this;
  }
  AffineExpr& offset(double c) {
    constant += c;
    return *this;
  }
};

struct VariableBlock {
  std::string name;
  int offset;
  int size;
};

struct ConicProgram {
  int num_vars = 0;
  double cost_constant = 0.0;
  Eigen::VectorXd cost;
  Eigen::SparseMatrix<double> eq;    // A
  Eigen::VectorXd eq_rhs;            // b
  Eigen::SparseMatrix<double> cone;  // G
  Eigen::VectorXd cone_rhs;          // h
  int lp_rows = 0;
  std::vector<int> soc_dims;
  std::vector<VariableBlock> blocks;

  int eq_count() const { return static_cast<int>(eq_rhs.size()); }
  int cone_count() const { return static_cast<int>(cone_rhs.size()); }
};

// Accumulates variables, cost terms and rows, then freezes them into the
// sparse form above. Equality, orthant and cone rows can be added in any
// order; the builder keeps the orthant rows ahead of the cone blocks.
class ConicProgramBuilder {
 public:
  // Registers `count` consecutive variables under a block name for
  // debugging and dumps; returns the offset of the first one.
  int add_variables(const std::string& name, int count);
  int num_vars() const { return num_vars_; }

  void add_cost(int var, double coeff);
  void add_cost_constant(double c) { cost_constant_ += c; }

  // e(z) = 0
  void add_equality(const AffineExpr& e);
  // e(z) >= 0
  void add_nonnegative(const AffineExpr& e);
  // |(e[1], ..., e[k-1])(z)|_2 <= e[0](z), k >= 2
  void add_second_order(const std::vector<AffineExpr>& e);

  int equality_count() const { return static_cast<int>(eq_rows_.size()); }
  ConicProgram build() const;

 private:
  int num_vars_ = 0;
  double cost_constant_ = 0.0;
  std::vector<std::pair<int, double>> cost_terms_;
  std::vector<AffineExpr> eq_rows_;
  std::vector<AffineExpr> lp_rows_;
  std::vector<std::vector<AffineExpr>> soc_blocks_;
  std::vector<VariableBlock> blocks_;

  void check_expr(const AffineExpr& e, const char* where) const;
};

// Shared constraint encodings. Each appends variables, rows and cost
// terms to the builder.

// Adds t[0..count) with t_j >= |z[var_offset + j]| and cost weight * sum t.
// Returns the offset of the t block.
int encode_l1_penalty(ConicProgramBuilder& b, const std::string& name,
                      int var_offset, int count, double weight);

// Adds t >= max(e(z), 0) with cost weight * t. Returns the index of t.
int encode_positive_part(ConicProgramBuilder& b, const std::string& name,
                         const AffineExpr& e, double weight);

// Adds r >= |z[var_offset .. var_offset+count)|^2 through the rotated
// cone encoding [r + 1; 2 z; r - 1], with cost weight * r. Returns the
// index of r.
int encode_trust_region(ConicProgramBuilder& b, const std::string& name,
                        int var_offset, int count, double weight);

// Adds t >= sum_i rows_i(z)^2 with cost weight * t, same cone encoding as
// the trust region but over arbitrary affine rows. Returns the index of t.
int encode_quadratic_epigraph(ConicProgramBuilder& b, const std::string& name,
                              const std::vector<AffineExpr>& rows,
                              double weight);

// Plain text dump of the full program, one row per line with coefficients
// printed to 17 significant digits. Stable across runs, intended for
// regression diffs and offline inspection.
void dump_program(const ConicProgram& p, std::ostream& os);

// Residuals of a candidate primal point against the original data:
// infinity norms of A z - b and of the cone violations (negative orthant
// slack, |u| - t for each second order block, clamped below at zero).
struct ConeResiduals {
  double eq_residual = 0.0;
  double cone_violation = 0.0;
};
ConeResiduals certify(const ConicProgram& p, const Eigen::VectorXd& z);

double objective_value(const ConicProgram& p, const Eigen::VectorXd& z);

}  // namespace mscvx
