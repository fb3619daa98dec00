// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
//
// Sparse primal-dual interior point method for the standard conic form,
// following the homogeneous self-dual embedding with Nesterov-Todd
// scalings and a Mehrotra predictor-corrector step. The KKT system is
// solved with a single symbolic LDLT factorization of the quasidefinite
// matrix
//
//   [ dI   A'      G'   ]
//   [ A   -dI            ]
//   [ G        -(W^2+dI) ]
//
// refactorized numerically each iteration. The factorization is an
// up-looking sparse LDL^T specialized for quasidefinite matrices: the
// sign of every pivot is known from the block structure, so a pivot
// that collapses under cancellation late in the interior point run is
// floored at a signed minimum instead of aborting the factorization.
// Together with the static regularization d this makes the numeric
// phase unconditionally successful; the combined bias is removed by
// iterative refinement against the unregularized matrix. Second order
// cone scaling blocks are stored dense per cone, which keeps the
// implementation short and is cheap for the small cones produced by
// the transcription (dimensions three to a few dozen).

#include "mscvx/conic_solver.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

#include "mscvx/errors.hpp"

namespace mscvx {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SocScaling {
  double eta_sq = 1.0;
  Eigen::MatrixXd W;   // eta * V
  Eigen::MatrixXd W2;  // W * W
};

// A pivot whose product with its expected sign falls below kPivotEps
// has been destroyed by cancellation; it is replaced by the signed
// floor kPivotFloor and iterative refinement absorbs the perturbation.
constexpr double kPivotEps = 1e-13;
constexpr double kPivotFloor = 1e-7;

// Up-looking sparse LDL^T for symmetric quasidefinite matrices. The
// input matrix is stored with both triangles; analyze() permutes it
// with an AMD ordering, keeps a slot map so later factorizations can
// reuse the pattern, and computes the elimination tree and column
// counts. factor() never rejects a rank deficiency: pivots are floored
// with the sign dictated by the quasidefinite split, which is what an
// interior point method needs when the scalings degenerate near the
// solution.
class QdLdl {
 public:
  // n_positive is the size of the leading positive definite block;
  // all trailing rows carry negative pivots.
  void analyze(const Eigen::SparseMatrix<double>& K, int n_positive) {
    n_ = static_cast<int>(K.rows());
    Eigen::AMDOrdering<int> amd;
    Eigen::AMDOrdering<int>::PermutationType pm;
    amd(K, pm);
    // Eigen's ordering convention is easy to hold the wrong way
    // around, and a reversed permutation silently loses the fill
    // reduction. Running the cheap symbolic pass for both readings
    // and keeping the sparser factor settles it by measurement.
    std::vector<int> fwd(n_), rev(n_);
    for (int i = 0; i < n_; ++i) fwd[i] = pm.indices()[i];
    for (int i = 0; i < n_; ++i) rev[fwd[i]] = i;
    const long nnz_fwd = symbolic(K, fwd);
    const long nnz_rev = symbolic(K, rev);
    if (nnz_fwd < nnz_rev) symbolic(K, fwd);

    sign_.resize(n_);
    for (int k = 0; k < n_; ++k) {
      sign_[k] = perm_[k] < n_positive ? 1.0 : -1.0;
    }
    Li_.assign(static_cast<size_t>(Lp_[n_]), 0);
    Lx_.assign(static_cast<size_t>(Lp_[n_]), 0.0);
    d_.assign(n_, 0.0);
    y_.assign(n_, 0.0);
    lnz_.assign(n_, 0);
  }

  bool factor(const Eigen::SparseMatrix<double>& K) {
    const double* kx = K.valuePtr();
    for (size_t s = 0; s < src_slot_.size(); ++s) {
      up_x_[s] = kx[src_slot_[s]];
    }
    for (int k = 0; k < n_; ++k) {
      y_[k] = 0.0;
      int top = n_;
      flag_[k] = k;
      lnz_[k] = 0;
      for (int p = up_p_[k]; p < up_p_[k + 1]; ++p) {
        int i = up_i_[p];
        y_[i] += up_x_[p];
        int len = 0;
        for (; flag_[i] != k; i = parent_[i]) {
          pattern_[len++] = i;
          flag_[i] = k;
        }
        while (len > 0) pattern_[--top] = pattern_[--len];
      }
      double dk = y_[k];
      y_[k] = 0.0;
      for (; top < n_; ++top) {
        const int i = pattern_[top];
        const double yi = y_[i];
        y_[i] = 0.0;
        const int p2 = Lp_[i] + lnz_[i];
        for (int p = Lp_[i]; p < p2; ++p) y_[Li_[p]] -= Lx_[p] * yi;
        const double lki = yi / d_[i];
        dk -= lki * yi;
        Li_[p2] = k;
        Lx_[p2] = lki;
        ++lnz_[i];
      }
      if (!std::isfinite(dk)) return false;
      if (sign_[k] * dk < kPivotEps) {
        if (std::getenv("MSCVX_IPM_TRACE")) {
          std::fprintf(stderr, "    clamp pivot %d (of %d): %.3e sign %+.0f\n",
                       k, n_, dk, sign_[k]);
        }
        dk = sign_[k] * kPivotFloor;
      }
      d_[k] = dk;
    }
    return true;
  }

  void solve(Eigen::VectorXd& b) const {
    Eigen::VectorXd& w = work_;
    w.resize(n_);
    for (int k = 0; k < n_; ++k) w[k] = b[perm_[k]];
    for (int j = 0; j < n_; ++j) {
      const double wj = w[j];
      for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) w[Li_[p]] -= Lx_[p] * wj;
    }
    for (int k = 0; k < n_; ++k) w[k] /= d_[k];
    for (int j = n_ - 1; j >= 0; --j) {
      double acc = w[j];
      for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) acc -= Lx_[p] * w[Li_[p]];
      w[j] = acc;
    }
    for (int k = 0; k < n_; ++k) b[perm_[k]] = w[k];
  }

 private:
  // Builds the permuted upper triangle, the elimination tree and the
  // factor column pointers for the given old-to-new map; returns the
  // factor fill so callers can compare candidate orderings.
  long symbolic(const Eigen::SparseMatrix<double>& K,
                const std::vector<int>& old_to_new) {
    iperm_ = old_to_new;
    perm_.resize(n_);
    for (int i = 0; i < n_; ++i) perm_[iperm_[i]] = i;

    const int* kp = K.outerIndexPtr();
    const int* ki = K.innerIndexPtr();
    std::vector<int> count(n_, 0);
    for (int j = 0; j < n_; ++j) {
      for (int s = kp[j]; s < kp[j + 1]; ++s) {
        const int pr = iperm_[ki[s]];
        const int pc = iperm_[j];
        if (pr <= pc) ++count[pc];
      }
    }
    up_p_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) up_p_[j + 1] = up_p_[j] + count[j];
    up_i_.assign(static_cast<size_t>(up_p_[n_]), 0);
    src_slot_.assign(static_cast<size_t>(up_p_[n_]), 0);
    up_x_.assign(static_cast<size_t>(up_p_[n_]), 0.0);
    std::vector<int> next(up_p_.begin(), up_p_.end() - 1);
    for (int j = 0; j < n_; ++j) {
      for (int s = kp[j]; s < kp[j + 1]; ++s) {
        const int pr = iperm_[ki[s]];
        const int pc = iperm_[j];
        if (pr <= pc) {
          up_i_[next[pc]] = pr;
          src_slot_[next[pc]] = s;
          ++next[pc];
        }
      }
    }

    parent_.assign(n_, -1);
    flag_.assign(n_, -1);
    pattern_.assign(n_, 0);
    std::vector<int> colnz(n_, 0);
    for (int k = 0; k < n_; ++k) {
      flag_[k] = k;
      for (int p = up_p_[k]; p < up_p_[k + 1]; ++p) {
        for (int i = up_i_[p]; i < k && flag_[i] != k; i = parent_[i]) {
          if (parent_[i] == -1) parent_[i] = k;
          ++colnz[i];
          flag_[i] = k;
        }
      }
    }
    Lp_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) Lp_[j + 1] = Lp_[j] + colnz[j];
    return Lp_[n_];
  }

  int n_ = 0;
  std::vector<int> perm_, iperm_;  // new-to-old and old-to-new positions
  std::vector<double> sign_;       // expected pivot sign, permuted order
  std::vector<int> up_p_, up_i_, src_slot_;  // permuted upper triangle
  std::vector<double> up_x_;
  std::vector<int> parent_, Lp_, Li_, lnz_;
  std::vector<double> Lx_, d_;
  std::vector<int> pattern_, flag_;
  std::vector<double> y_;
  mutable Eigen::VectorXd work_;
};

class Ipm {
 public:
  Ipm(const ConicProgram& prog, const ConicSolverSettings& st)
      : prog_(prog), st_(st) {}

  ConicSolution run();

 private:
  const ConicProgram& prog_;
  const ConicSolverSettings& st_;

  int n_ = 0;  // variables
  int p_ = 0;  // equality rows
  int m_ = 0;  // cone rows
  int l_ = 0;  // orthant rows
  int degree_ = 0;
  std::vector<int> soc_offset_;

  // Equilibrated copies and the accumulated scaling factors.
  Eigen::SparseMatrix<double> A_, G_;
  Eigen::VectorXd b_, h_, c_;
  Eigen::VectorXd dvar_, ra_, rg_;

  // KKT matrix, value-update bookkeeping and factorization.
  Eigen::SparseMatrix<double> K_;
  std::vector<std::pair<int, int>> w_entries_;  // (row, col) of W slots
  std::vector<double*> w_ptr_;
  QdLdl kkt_;

  // Current scalings.
  Eigen::VectorXd lp_v_, lp_w_;  // s/z and its sqrt on the orthant
  std::vector<SocScaling> soc_;
  Eigen::VectorXd lambda_;

  // Iterate.
  Eigen::VectorXd x_, y_, z_, s_;
  double tau_ = 1.0, kappa_ = 1.0;

  struct Snapshot {
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0, kappa = 1.0;
    double pres = kNaN, dres = kNaN, gap = kNaN, relgap = kNaN;
    int iter = 0;
    bool valid = false;
  } best_;

  void equilibrate();
  void build_kkt();
  void reset_scalings();
  bool update_scalings();
  void push_scalings();
  bool factorize() {
    if (const char* dump = std::getenv("MSCVX_KKT_DUMP")) {
      static int counter = 0;
      char path[256];
      std::snprintf(path, sizeof(path), "%s/kkt_%03d.txt", dump, counter++);
      if (FILE* f = std::fopen(path, "w")) {
        std::fprintf(f, "%d %d %ld\n", static_cast<int>(K_.rows()), n_,
                     static_cast<long>(K_.nonZeros()));
        for (int j = 0; j < K_.outerSize(); ++j) {
          for (Eigen::SparseMatrix<double>::InnerIterator it(K_, j); it; ++it) {
            std::fprintf(f, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                         static_cast<long>(it.col()), it.value());
          }
        }
        std::fclose(f);
      }
    }
    return kkt_.factor(K_);
  }

  Eigen::VectorXd scale(const Eigen::VectorXd& v) const;       // W v
  Eigen::VectorXd apply_w2(const Eigen::VectorXd& v) const;    // W^2 v
  Eigen::VectorXd conic_product(const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v) const;
  Eigen::VectorXd conic_division(const Eigen::VectorXd& lam,
                                 const Eigen::VectorXd& w) const;
  Eigen::VectorXd cone_identity() const;
  void bring_to_cone(Eigen::VectorXd& r) const;
  bool point_in_cone(const Eigen::VectorXd& v) const;
  double line_search(const Eigen::VectorXd& bs, const Eigen::VectorXd& bz,
                     double tau, double dtau, double kap, double dkap) const;

  void solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx,
                 Eigen::VectorXd& dy, Eigen::VectorXd& dz) const;

  ConicSolution finish(SolveStatus status, int iters, const std::string& note,
                       bool use_best);
  // Exit taken when the iteration can no longer make progress.  Accepts
  // the best iterate at reduced accuracy when it qualifies, otherwise
  // reports the failure.
  ConicSolution bail(int iters, const std::string& reason);

  // Stall detection: the barrier parameter must keep shrinking.
  double mu_marker_ = std::numeric_limits<double>::infinity();
  int mu_marker_iter_ = 0;
};

void Ipm::equilibrate() {
  A_ = prog_.eq;
  G_ = prog_.cone;
  b_ = prog_.eq_rhs;
  h_ = prog_.cone_rhs;
  c_ = prog_.cost;
  dvar_ = Eigen::VectorXd::Ones(n_);
  ra_ = Eigen::VectorXd::Ones(p_);
  rg_ = Eigen::VectorXd::Ones(m_);

  for (int sweep = 0; sweep < st_.equilibrate_iters; ++sweep) {
    Eigen::VectorXd colmax = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd rowa = Eigen::VectorXd::Zero(p_);
    Eigen::VectorXd rowg = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < A_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
        const double a = std::abs(it.value());
        colmax[it.col()] = std::max(colmax[it.col()], a);
        rowa[it.row()] = std::max(rowa[it.row()], a);
      }
    }
    for (int j = 0; j < G_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
        const double a = std::abs(it.value());
        colmax[it.col()] = std::max(colmax[it.col()], a);
        rowg[it.row()] = std::max(rowg[it.row()], a);
      }
    }
    // Rows of one second order cone must share a scaling factor, or the
    // scaled rows would no longer describe a cone of the same family.
    for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
      const int off = soc_offset_[k];
      const int dim = prog_.soc_dims[k];
      const double mx = rowg.segment(off, dim).maxCoeff();
      rowg.segment(off, dim).setConstant(mx);
    }
    // Factors rounded to powers of two: multiplying by an exact power
    // of two only shifts exponents, so equilibration cannot introduce
    // cancellations (and zero pivots downstream) that the raw data did
    // not already have.
    auto factor = [](double v) {
      return v > 0.0 ? std::exp2(std::round(0.5 * std::log2(v))) : 1.0;
    };
    Eigen::VectorXd fc(n_), fa(p_), fg(m_);
    for (int i = 0; i < n_; ++i) fc[i] = factor(colmax[i]);
    for (int i = 0; i < p_; ++i) fa[i] = factor(rowa[i]);
    for (int i = 0; i < m_; ++i) fg[i] = factor(rowg[i]);
    for (int j = 0; j < A_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
        it.valueRef() /= fa[it.row()] * fc[it.col()];
      }
    }
    for (int j = 0; j < G_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
        it.valueRef() /= fg[it.row()] * fc[it.col()];
      }
    }
    dvar_.array() /= fc.array();
    ra_.array() /= fa.array();
    rg_.array() /= fg.array();
  }
  b_.array() *= ra_.array();
  h_.array() *= rg_.array();
  c_.array() *= dvar_.array();
}

void Ipm::build_kkt() {
  const int dim = n_ + p_ + m_;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(2 * (A_.nonZeros() + G_.nonZeros())) +
                static_cast<size_t>(dim) + 64);
  for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, st_.static_reg);
  for (int j = 0; j < A_.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
      trips.emplace_back(n_ + static_cast<int>(it.row()),
                         static_cast<int>(it.col()), it.value());
      trips.emplace_back(static_cast<int>(it.col()),
                         n_ + static_cast<int>(it.row()), it.value());
    }
  }
  for (int j = 0; j < G_.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
      trips.emplace_back(n_ + p_ + static_cast<int>(it.row()),
                         static_cast<int>(it.col()), it.value());
      trips.emplace_back(static_cast<int>(it.col()),
                         n_ + p_ + static_cast<int>(it.row()), it.value());
    }
  }
  for (int i = 0; i < p_; ++i) {
    trips.emplace_back(n_ + i, n_ + i, -st_.static_reg);
  }
  // Scaling slots, recorded so the values can be refreshed in place.
  w_entries_.clear();
  for (int i = 0; i < l_; ++i) {
    w_entries_.emplace_back(n_ + p_ + i, n_ + p_ + i);
  }
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = n_ + p_ + soc_offset_[k];
    const int d = prog_.soc_dims[k];
    for (int r = 0; r < d; ++r) {
      for (int col = 0; col < d; ++col) {
        w_entries_.emplace_back(off + r, off + col);
      }
    }
  }
  for (const auto& [r, col] : w_entries_) {
    trips.emplace_back(r, col, -1.0 - st_.static_reg * (r == col ? 1.0 : 0.0));
  }
  K_.resize(dim, dim);
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();
  w_ptr_.clear();
  w_ptr_.reserve(w_entries_.size());
  for (const auto& [r, col] : w_entries_) {
    w_ptr_.push_back(&K_.coeffRef(r, col));
  }
  kkt_.analyze(K_, n_);
}

void Ipm::reset_scalings() {
  lp_v_ = Eigen::VectorXd::Ones(l_);
  lp_w_ = Eigen::VectorXd::Ones(l_);
  soc_.assign(prog_.soc_dims.size(), SocScaling{});
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int d = prog_.soc_dims[k];
    soc_[k].eta_sq = 1.0;
    soc_[k].W = Eigen::MatrixXd::Identity(d, d);
    soc_[k].W2 = Eigen::MatrixXd::Identity(d, d);
  }
  lambda_ = Eigen::VectorXd::Zero(m_);
  push_scalings();
}

bool Ipm::update_scalings() {
  for (int i = 0; i < l_; ++i) {
    if (s_[i] <= 0.0 || z_[i] <= 0.0) return false;
    lp_v_[i] = s_[i] / z_[i];
    lp_w_[i] = std::sqrt(lp_v_[i]);
    lambda_[i] = std::sqrt(s_[i] * z_[i]);
  }
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    const auto sb = s_.segment(off, d);
    const auto zb = z_.segment(off, d);
    const double sres = sb[0] * sb[0] - sb.tail(d - 1).squaredNorm();
    const double zres = zb[0] * zb[0] - zb.tail(d - 1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0) return false;
    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    const Eigen::VectorXd sbar = sb / snorm;
    const Eigen::VectorXd zbar = zb / znorm;
    const double dot =
        sbar[0] * zbar[0] + sbar.tail(d - 1).dot(zbar.tail(d - 1));
    const double gamma = std::sqrt(0.5 * (1.0 + dot));
    const double a = (sbar[0] + zbar[0]) / (2.0 * gamma);
    const Eigen::VectorXd q =
        (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
    SocScaling& sc = soc_[k];
    sc.eta_sq = snorm / znorm;
    const double eta = std::sqrt(sc.eta_sq);
    Eigen::MatrixXd V(d, d);
    V(0, 0) = a;
    V.block(0, 1, 1, d - 1) = q.transpose();
    V.block(1, 0, d - 1, 1) = q;
    V.block(1, 1, d - 1, d - 1) =
        Eigen::MatrixXd::Identity(d - 1, d - 1) +
        q * q.transpose() / (1.0 + a);
    sc.W = eta * V;
    sc.W2 = sc.W * sc.W;
    lambda_.segment(off, d) = sc.W * zb;
  }
  push_scalings();
  return true;
}

void Ipm::push_scalings() {
  size_t slot = 0;
  for (int i = 0; i < l_; ++i) {
    *w_ptr_[slot++] = -lp_v_[i] - st_.static_reg;
  }
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int d = prog_.soc_dims[k];
    const Eigen::MatrixXd& W2 = soc_[k].W2;
    for (int r = 0; r < d; ++r) {
      for (int col = 0; col < d; ++col) {
        *w_ptr_[slot++] = -W2(r, col) - (r == col ? st_.static_reg : 0.0);
      }
    }
  }
}

Eigen::VectorXd Ipm::scale(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(m_);
  out.head(l_) = lp_w_.cwiseProduct(v.head(l_));
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    out.segment(off, d) = soc_[k].W * v.segment(off, d);
  }
  return out;
}

Eigen::VectorXd Ipm::apply_w2(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(m_);
  out.head(l_) = lp_v_.cwiseProduct(v.head(l_));
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    out.segment(off, d) = soc_[k].W2 * v.segment(off, d);
  }
  return out;
}

Eigen::VectorXd Ipm::conic_product(const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(m_);
  out.head(l_) = u.head(l_).cwiseProduct(v.head(l_));
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    const auto ub = u.segment(off, d);
    const auto vb = v.segment(off, d);
    out[off] = ub.dot(vb);
    out.segment(off + 1, d - 1) =
        ub[0] * vb.tail(d - 1) + vb[0] * ub.tail(d - 1);
  }
  return out;
}

Eigen::VectorXd Ipm::conic_division(const Eigen::VectorXd& lam,
                                    const Eigen::VectorXd& w) const {
  Eigen::VectorXd out(m_);
  out.head(l_) = w.head(l_).cwiseQuotient(lam.head(l_));
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    const auto lb = lam.segment(off, d);
    const auto wb = w.segment(off, d);
    const double rho = lb[0] * lb[0] - lb.tail(d - 1).squaredNorm();
    const double zeta = lb.tail(d - 1).dot(wb.tail(d - 1));
    out[off] = (lb[0] * wb[0] - zeta) / rho;
    out.segment(off + 1, d - 1) =
        ((zeta / lb[0] - wb[0]) / rho) * lb.tail(d - 1) +
        wb.tail(d - 1) / lb[0];
  }
  return out;
}

Eigen::VectorXd Ipm::cone_identity() const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
  e.head(l_).setOnes();
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) e[soc_offset_[k]] = 1.0;
  return e;
}

void Ipm::bring_to_cone(Eigen::VectorXd& r) const {
  double alpha = -1.0;
  for (int i = 0; i < l_; ++i) alpha = std::max(alpha, -r[i]);
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    alpha = std::max(alpha, r.segment(off + 1, d - 1).norm() - r[off]);
  }
  // A point that is interior by a sliver still has to be shifted: the
  // Nesterov-Todd scaling squares the boundary distance, and a margin
  // near roundoff would hand the first iteration a hopeless KKT matrix.
  if (alpha < -1e-8 * std::max(1.0, r.norm())) return;
  r += (1.0 + std::max(alpha, 0.0)) * cone_identity();
}

bool Ipm::point_in_cone(const Eigen::VectorXd& v) const {
  for (int i = 0; i < l_; ++i) {
    if (v[i] <= 0.0) return false;
  }
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    if (v[off] <= 0.0) return false;
    if (v[off] * v[off] - v.segment(off + 1, d - 1).squaredNorm() <= 0.0) {
      return false;
    }
  }
  return true;
}

double Ipm::line_search(const Eigen::VectorXd& bs, const Eigen::VectorXd& bz,
                        double tau, double dtau, double kap,
                        double dkap) const {
  double alpha = 2.0;
  for (int i = 0; i < l_; ++i) {
    if (bs[i] < 0.0) alpha = std::min(alpha, -lambda_[i] / bs[i]);
    if (bz[i] < 0.0) alpha = std::min(alpha, -lambda_[i] / bz[i]);
  }
  if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
  if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
  for (size_t k = 0; k < prog_.soc_dims.size(); ++k) {
    const int off = soc_offset_[k];
    const int d = prog_.soc_dims[k];
    const auto lb = lambda_.segment(off, d);
    const double lknorm2 = lb[0] * lb[0] - lb.tail(d - 1).squaredNorm();
    if (lknorm2 <= 0.0) return st_.step_min;
    const double lknorm = std::sqrt(lknorm2);
    const Eigen::VectorXd lkbar = lb / lknorm;
    auto boundary_rate = [&](const Eigen::VectorXd& v) {
      const double lkbar_times =
          lkbar[0] * v[0] - lkbar.tail(d - 1).dot(v.tail(d - 1));
      const double f = (lkbar_times + v[0]) / (lkbar[0] + 1.0);
      const double r0 = lkbar_times / lknorm;
      const Eigen::VectorXd r1 =
          (v.tail(d - 1) - f * lkbar.tail(d - 1)) / lknorm;
      return r1.norm() - r0;
    };
    const double rs = boundary_rate(bs.segment(off, d));
    const double rz = boundary_rate(bz.segment(off, d));
    const double worst = std::max(rs, rz);
    if (worst > 0.0) alpha = std::min(alpha, 1.0 / worst);
  }
  return std::clamp(alpha, st_.step_min, st_.step_max);
}

void Ipm::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx,
                    Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
  Eigen::VectorXd sol = rhs;
  kkt_.solve(sol);
  // Refinement against the unregularized matrix removes both the
  // factorization error and the static regularization bias.
  const double target =
      st_.refinement_accuracy * (1.0 + rhs.lpNorm<Eigen::Infinity>());
  double prev_err = std::numeric_limits<double>::infinity();
  Eigen::VectorXd prev_sol;
  for (int it = 0; it <= st_.refinement_steps; ++it) {
    Eigen::VectorXd err(rhs.size());
    const auto xs = sol.head(n_);
    const auto ys = sol.segment(n_, p_);
    const auto zs = sol.tail(m_);
    err.head(n_) = rhs.head(n_) - A_.transpose() * ys - G_.transpose() * zs;
    err.segment(n_, p_) = rhs.segment(n_, p_) - A_ * xs;
    err.tail(m_) = rhs.tail(m_) - G_ * xs + apply_w2(zs);
    const double e = err.lpNorm<Eigen::Infinity>();
    if (e <= target) break;
    if (e >= prev_err) {
      sol = prev_sol;  // refinement stopped helping, keep the better one
      break;
    }
    if (it == st_.refinement_steps) break;
    prev_err = e;
    prev_sol = sol;
    kkt_.solve(err);
    sol += err;
  }
  if (std::getenv("MSCVX_IPM_TRACE")) {
    Eigen::VectorXd err(rhs.size());
    err.head(n_) = rhs.head(n_) - A_.transpose() * sol.segment(n_, p_) -
                   G_.transpose() * sol.tail(m_);
    err.segment(n_, p_) = rhs.segment(n_, p_) - A_ * sol.head(n_);
    err.tail(m_) = rhs.tail(m_) - G_ * sol.head(n_) + apply_w2(sol.tail(m_));
    const Eigen::VectorXd kerr = rhs - K_ * sol;
    std::fprintf(stderr, "    kkt solve err %.3e kerr %.3e (rhs %.3e)\n",
                 err.lpNorm<Eigen::Infinity>(), kerr.lpNorm<Eigen::Infinity>(),
                 rhs.lpNorm<Eigen::Infinity>());
  }
  dx = sol.head(n_);
  dy = sol.segment(n_, p_);
  dz = sol.tail(m_);
}

ConicSolution Ipm::finish(SolveStatus status, int iters,
                          const std::string& note, bool use_best) {
  if (use_best && best_.valid) {
    x_ = best_.x;
    y_ = best_.y;
    z_ = best_.z;
    s_ = best_.s;
    tau_ = best_.tau;
    kappa_ = best_.kappa;
  }
  ConicSolution sol;
  sol.status = status;
  sol.iterations = iters;
  sol.message = note;

  const bool scale_by_tau =
      status == SolveStatus::Optimal || status == SolveStatus::MaxIterations;
  const double t = scale_by_tau ? tau_ : std::max(tau_, 1e-30);
  Eigen::VectorXd xb = x_ / t;
  Eigen::VectorXd yb = y_ / t;
  Eigen::VectorXd zb = z_ / t;
  // Undo the equilibration.
  sol.primal = dvar_.cwiseProduct(xb);
  sol.eq_dual = ra_.cwiseProduct(yb);
  sol.cone_dual = rg_.cwiseProduct(zb);
  sol.objective = objective_value(prog_, sol.primal);
  sol.gap = s_.dot(z_) / (t * t);

  if (status == SolveStatus::Optimal ||
      status == SolveStatus::MaxIterations) {
    const ConeResiduals res = certify(prog_, sol.primal);
    sol.eq_residual = res.eq_residual;
    sol.cone_violation = res.cone_violation;
    if (status == SolveStatus::Optimal &&
        (res.eq_residual > st_.certify_eq_tol ||
         res.cone_violation > st_.certify_cone_tol)) {
      sol.status = SolveStatus::NumericalFailure;
      std::ostringstream os;
      os << "certification failed: eq residual " << res.eq_residual
         << ", cone violation " << res.cone_violation;
      sol.message = sol.message.empty() ? os.str()
                                        : sol.message + "; " + os.str();
    }
  }
  return sol;
}

ConicSolution Ipm::bail(int iters, const std::string& reason) {
  // Any iterate meeting the full tolerances exits the main loop
  // directly, so the best snapshot can at most reach the reduced ones.
  if (best_.valid) {
    const double gap_n = best_.gap / (best_.tau * best_.tau);
    const bool reduced =
        best_.pres <= st_.feas_tol_reduced &&
        best_.dres <= st_.feas_tol_reduced &&
        (gap_n <= st_.abs_tol_reduced ||
         (std::isfinite(best_.relgap) &&
          best_.relgap <= st_.rel_tol_reduced));
    if (reduced) {
      return finish(SolveStatus::Optimal, iters,
                    "reduced accuracy: " + reason, true);
    }
  }
  return finish(SolveStatus::NumericalFailure, iters, reason, true);
}

ConicSolution Ipm::run() {
  n_ = prog_.num_vars;
  p_ = prog_.eq_count();
  m_ = prog_.cone_count();
  l_ = prog_.lp_rows;
  if (n_ < 1) throw ArgumentError("conic solve: program has no variables");
  if (m_ < 1) {
    throw ArgumentError(
        "conic solve: program has no cone rows; the interior point method "
        "needs a nonempty cone");
  }
  soc_offset_.clear();
  int off = l_;
  for (const int d : prog_.soc_dims) {
    soc_offset_.push_back(off);
    off += d;
  }
  degree_ = l_ + static_cast<int>(prog_.soc_dims.size());

  equilibrate();
  build_kkt();
  reset_scalings();
  if (!factorize()) {
    return finish(SolveStatus::NumericalFailure, 0,
                  "initial factorization failed", false);
  }

  // Initial point: least-norm heuristic from two solves with identity
  // scalings, pushed strictly inside the cones.
  Eigen::VectorXd rhs(n_ + p_ + m_);
  Eigen::VectorXd dx, dy, dz;
  rhs.head(n_).setZero();
  rhs.segment(n_, p_) = b_;
  rhs.tail(m_) = h_;
  solve_kkt(rhs, dx, dy, dz);
  x_ = dx;
  s_ = -dz;
  bring_to_cone(s_);
  rhs.head(n_) = -c_;
  rhs.segment(n_, p_).setZero();
  rhs.tail(m_).setZero();
  solve_kkt(rhs, dx, dy, dz);
  y_ = dy;
  z_ = dz;
  bring_to_cone(z_);
  tau_ = 1.0;
  kappa_ = 1.0;

  const double resx0 = std::max(1.0, c_.norm());
  const double resy0 = std::max(1.0, b_.norm());
  const double resz0 = std::max(1.0, h_.norm());

  int iter = 0;
  for (;; ++iter) {
    // Residuals of the homogeneous embedding.
    const Eigen::VectorXd aty =
        p_ > 0 ? Eigen::VectorXd(A_.transpose() * y_)
               : Eigen::VectorXd::Zero(n_);
    const Eigen::VectorXd gtz = G_.transpose() * z_;
    const Eigen::VectorXd rx = -aty - gtz - tau_ * c_;
    const double hresx = (aty + gtz).norm();
    const Eigen::VectorXd ax = p_ > 0 ? Eigen::VectorXd(A_ * x_)
                                      : Eigen::VectorXd(0);
    const Eigen::VectorXd ry = ax - tau_ * b_;
    const double hresy = ax.norm();
    const Eigen::VectorXd gx = G_ * x_;
    const Eigen::VectorXd rz = s_ + gx - tau_ * h_;
    const double hresz = (s_ + gx).norm();
    const double cx = c_.dot(x_);
    const double by = p_ > 0 ? b_.dot(y_) : 0.0;
    const double hz = h_.dot(z_);
    const double rt = kappa_ + cx + by + hz;

    const double gap = s_.dot(z_);
    const double mu = (gap + tau_ * kappa_) / (degree_ + 1);
    const double pcost = cx / tau_;
    const double dcost = -(by + hz) / tau_;
    double relgap = kNaN;
    if (pcost < 0.0) {
      relgap = gap / (tau_ * tau_) / (-pcost);
    } else if (dcost > 0.0) {
      relgap = gap / (tau_ * tau_) / dcost;
    }
    const double nx = x_.norm();
    const double ny = p_ > 0 ? y_.norm() : 0.0;
    const double nz = z_.norm();
    const double ns = s_.norm();
    const double pres =
        std::max(p_ > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0,
                 rz.norm() / std::max(resz0 + nx + ns, 1.0)) /
        tau_;
    const double dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / tau_;

    if (std::getenv("MSCVX_IPM_TRACE")) {
      std::fprintf(stderr,
                   "it %2d pres %.3e dres %.3e gap %.3e tau %.3e kappa %.3e\n",
                   iter, pres, dres, gap, tau_, kappa_);
    }
    if (!std::isfinite(pres) || !std::isfinite(dres) ||
        !std::isfinite(gap)) {
      return bail(iter, "iterate diverged to non-finite values");
    }

    // Keep the most accurate iterate seen so far, breaking near ties on
    // the feasibility residuals by the smaller gap.
    const double agg = std::max(pres, dres);
    const double best_agg =
        best_.valid ? std::max(best_.pres, best_.dres)
                    : std::numeric_limits<double>::infinity();
    if (!best_.valid || agg < best_agg ||
        (agg <= best_agg * (1.0 + 1e-9) && gap < best_.gap)) {
      best_.x = x_;
      best_.y = y_;
      best_.z = z_;
      best_.s = s_;
      best_.tau = tau_;
      best_.kappa = kappa_;
      best_.pres = pres;
      best_.dres = dres;
      best_.gap = gap;
      best_.relgap = relgap;
      best_.iter = iter;
      best_.valid = true;
    }

    const double gap_n = gap / (tau_ * tau_);
    if (pres <= st_.feas_tol && dres <= st_.feas_tol &&
        (gap_n <= st_.abs_tol ||
         (std::isfinite(relgap) && relgap <= st_.rel_tol))) {
      return finish(SolveStatus::Optimal, iter, "", false);
    }

    // Infeasibility certificates from the homogeneous embedding.
    const double bh = by + hz;
    if (tau_ < kappa_ && bh < 0.0 && hresx / (-bh) <= st_.feas_tol) {
      return finish(SolveStatus::Infeasible, iter,
                    "primal infeasibility certificate found", false);
    }
    if (tau_ < kappa_ && cx < 0.0 &&
        std::max(hresy, hresz) / (-cx) <= st_.feas_tol) {
      return finish(SolveStatus::Unbounded, iter,
                    "dual infeasibility certificate found", false);
    }

    // The barrier parameter normally contracts every iteration; when it
    // has been flat for a while the iteration has hit its numerical
    // floor and more steps only risk leaving the cone.
    if (mu < 0.9 * mu_marker_) {
      mu_marker_ = mu;
      mu_marker_iter_ = iter;
    } else if (iter - mu_marker_iter_ >= st_.stall_patience) {
      return bail(iter, "progress stalled");
    }

    if (iter >= st_.max_iterations) {
      const bool reduced =
          best_.valid && best_.pres <= st_.feas_tol_reduced &&
          best_.dres <= st_.feas_tol_reduced &&
          (best_.gap / (best_.tau * best_.tau) <= st_.abs_tol_reduced ||
           (std::isfinite(best_.relgap) &&
            best_.relgap <= st_.rel_tol_reduced));
      if (reduced) {
        return finish(SolveStatus::Optimal, iter,
                      "reduced accuracy at the iteration limit", true);
      }
      return finish(SolveStatus::MaxIterations, iter,
                    "iteration limit reached", true);
    }

    if (!update_scalings()) {
      return bail(iter, "iterate left the cone interior");
    }
    if (!factorize()) {
      return bail(iter, "KKT factorization failed");
    }

    // Two solves give the affine direction: one against the fixed
    // right-hand side [-c; b; h], one against the residuals.
    Eigen::VectorXd x1, y1, z1, x2, y2, z2;
    rhs.head(n_) = -c_;
    rhs.segment(n_, p_) = b_;
    rhs.tail(m_) = h_;
    solve_kkt(rhs, x1, y1, z1);
    rhs.head(n_) = rx;
    rhs.segment(n_, p_) = -ry;
    rhs.tail(m_) = s_ - rz;
    solve_kkt(rhs, x2, y2, z2);

    const double dtau_denom =
        kappa_ / tau_ - c_.dot(x1) - (p_ > 0 ? b_.dot(y1) : 0.0) -
        h_.dot(z1);
    if (!std::isfinite(dtau_denom) || dtau_denom == 0.0) {
      return bail(iter, "homogenization pivot vanished");
    }
    const double dtau_aff =
        (rt - kappa_ + c_.dot(x2) + (p_ > 0 ? b_.dot(y2) : 0.0) +
         h_.dot(z2)) /
        dtau_denom;
    const Eigen::VectorXd dz_aff = z2 + dtau_aff * z1;
    const Eigen::VectorXd w_dz_aff = scale(dz_aff);
    const Eigen::VectorXd ds_aff_by_w = -w_dz_aff - lambda_;
    const double dkap_aff = -kappa_ - (kappa_ / tau_) * dtau_aff;

    const double alpha_aff =
        line_search(ds_aff_by_w, w_dz_aff, tau_, dtau_aff, kappa_, dkap_aff);
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3),
                                    st_.sigma_min, st_.sigma_max);

    // Combined centering-corrector direction.
    Eigen::VectorXd ds1 = conic_product(lambda_, lambda_) +
                          conic_product(ds_aff_by_w, w_dz_aff) -
                          sigma * mu * cone_identity();
    const Eigen::VectorXd ds2 = conic_division(lambda_, ds1);
    const double one_minus_sigma = 1.0 - sigma;
    rhs.head(n_) = one_minus_sigma * rx;
    rhs.segment(n_, p_) = -one_minus_sigma * ry;
    rhs.tail(m_) = -one_minus_sigma * rz + scale(ds2);
    solve_kkt(rhs, x2, y2, z2);
    const double bkap = kappa_ * tau_ + dkap_aff * dtau_aff - sigma * mu;
    const double dtau =
        (one_minus_sigma * rt - bkap / tau_ + c_.dot(x2) +
         (p_ > 0 ? b_.dot(y2) : 0.0) + h_.dot(z2)) /
        dtau_denom;
    const Eigen::VectorXd dx_c = x2 + dtau * x1;
    const Eigen::VectorXd dy_c = p_ > 0
                                     ? Eigen::VectorXd(y2 + dtau * y1)
                                     : Eigen::VectorXd(0);
    const Eigen::VectorXd dz_c = z2 + dtau * z1;
    const Eigen::VectorXd w_dz = scale(dz_c);
    const Eigen::VectorXd ds_by_w = -(ds2 + w_dz);
    const double dkap = -(bkap + kappa_ * dtau) / tau_;

    double step = line_search(ds_by_w, w_dz, tau_, dtau, kappa_, dkap) *
                  st_.step_scale;
    step = std::min(step, st_.step_max);
    const Eigen::VectorXd ds = scale(ds_by_w);

    // The line search is run in the scaled space where it is exact,
    // but mapping the direction back through an ill conditioned W can
    // overshoot the boundary in the original variables. Backtrack on
    // the applied step until the iterate is strictly interior.
    bool stepped = false;
    for (int bt = 0; bt < 40; ++bt) {
      if (tau_ + step * dtau > 0.0 && kappa_ + step * dkap >= 0.0 &&
          point_in_cone(s_ + step * ds) &&
          point_in_cone(z_ + step * dz_c)) {
        stepped = true;
        break;
      }
      step *= 0.5;
    }
    if (!stepped) {
      return bail(iter, "no interior step along the search direction");
    }
    x_ += step * dx_c;
    if (p_ > 0) y_ += step * dy_c;
    z_ += step * dz_c;
    s_ += step * ds;
    tau_ += step * dtau;
    kappa_ += step * dkap;
  }
}

class BuiltinBackend final : public ConicBackend {
 public:
  std::string name() const override { return "mscvx-ipm"; }
  ConicSolution solve(const ConicProgram& p,
                      const ConicSolverSettings& s) const override {
    Ipm ipm(p, s);
    return ipm.run();
  }
};

}  // namespace

const ConicBackend& builtin_backend() {
  static const BuiltinBackend backend;
  return backend;
}

ConicSolution solve_conic(const ConicProgram& p, const ConicSolverSettings& s,
                          const ConicBackend* backend) {
  const ConicBackend& be = backend ? *backend : builtin_backend();
  return be.solve(p, s);
}

}  // namespace mscvx
