// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/collocation.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "mscvx/errors.hpp"

namespace mscvx {

namespace {

// Legendre polynomial by the three-term recurrence.
double legendre(int n, double x) {
  double pm1 = 0.0;
  double p = 1.0;
  for (int k = 0; k < n; ++k) {
    const double pnext = ((2 * k + 1) * x * p - k * pm1) / (k + 1);
    pm1 = p;
    p = pnext;
  }
  return p;
}

double legendre_derivative(int n, double x) {
  // (1 - x^2) P_n'(x) = n (P_{n-1}(x) - x P_n(x)), valid away from the
  // endpoints; the polished nodes are strictly interior.
  return n * (legendre(n - 1, x) - x * legendre(n, x)) / (1.0 - x * x);
}

// Standard Legendre-Gauss-Radau nodes with the fixed endpoint at -1,
// computed as eigenvalues of the Radau-modified Jacobi matrix of the
// Legendre weight.
Eigen::VectorXd standard_radau_nodes(int n) {
  if (n == 1) {
    return Eigen::VectorXd::Constant(1, -1.0);
  }
  const double a = -1.0;
  // Monic recurrence coefficients: alpha_k = 0, beta_k = k^2/(4k^2 - 1).
  auto beta = [](int k) {
    return static_cast<double>(k) * k / (4.0 * k * k - 1.0);
  };
  // Monic Legendre values at the prescribed endpoint.
  double pm1 = 0.0;
  double p = 1.0;
  for (int k = 0; k < n - 1; ++k) {
    const double pn = a * p - (k >= 1 ? beta(k) * pm1 : 0.0);
    pm1 = p;
    p = pn;
  }
  // p = monic p_{n-1}(a), pm1 = monic p_{n-2}(a).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  diag[n - 1] = a - beta(n - 1) * pm1 / p;
  Eigen::VectorXd subdiag(n - 1);
  for (int k = 1; k < n; ++k) subdiag[k - 1] = std::sqrt(beta(k));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("radau_segment: eigenvalue iteration failed");
  }
  return es.eigenvalues();
}

}  // namespace

RadauSegment radau_segment(int degree) {
  if (degree < 1 || degree > 64) {
    std::ostringstream os;
    os << "radau_segment: degree " << degree << " outside supported range "
       << "[1, 64]";
    throw ArgumentError(os.str());
  }
  const int p = degree;

  // Flip the standard rule so the collocated endpoint is +1, sort, pin
  // the endpoint, then polish the interior nodes on P_p - P_{p-1} = 0.
  Eigen::VectorXd flipped = -standard_radau_nodes(p);
  std::sort(flipped.data(), flipped.data() + p);
  flipped[p - 1] = 1.0;
  for (int i = 0; i < p - 1; ++i) {
    for (int it = 0; it < 2; ++it) {
      const double x = flipped[i];
      const double r = legendre(p, x) - legendre(p - 1, x);
      const double dr = legendre_derivative(p, x) -
                        legendre_derivative(p - 1, x);
      flipped[i] = x - r / dr;
    }
  }

  RadauSegment seg;
  seg.degree = p;
  seg.nodes.resize(p + 1);
  seg.nodes[0] = -1.0;
  seg.nodes.tail(p) = flipped;

  seg.weights.resize(p);
  for (int i = 0; i < p; ++i) {
    const double tau = seg.nodes[i + 1];
    if (i == p - 1) {
      seg.weights[i] = 2.0 / (static_cast<double>(p) * p);
    } else {
      const double lp = legendre(p - 1, tau);
      seg.weights[i] = (1.0 + tau) / (static_cast<double>(p) * p * lp * lp);
    }
  }

  // Barycentric weights over all p+1 support points, accumulated in log
  // scale; the raw products underflow beyond degree 40 or so.
  Eigen::VectorXd logw(p + 1);
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(p + 1);
  for (int j = 0; j <= p; ++j) {
    double acc = 0.0;
    for (int k = 0; k <= p; ++k) {
      if (k == j) continue;
      const double d = seg.nodes[j] - seg.nodes[k];
      acc -= std::log(std::abs(d));
      if (d < 0) sign[j] = -sign[j];
    }
    logw[j] = acc;
  }
  const double shift = logw.maxCoeff();
  Eigen::VectorXd bary(p + 1);
  for (int j = 0; j <= p; ++j) bary[j] = sign[j] * std::exp(logw[j] - shift);

  seg.diff.resize(p, p + 1);
  for (int r = 0; r < p; ++r) {
    const int i = r + 1;
    double rowsum = 0.0;
    for (int j = 0; j <= p; ++j) {
      if (j == i) continue;
      const double d = (bary[j] / bary[i]) / (seg.nodes[i] - seg.nodes[j]);
      seg.diff(r, j) = d;
      rowsum += d;
    }
    // The derivative of the constant interpolant vanishes, which fixes
    // the diagonal entry from the rest of the row.
    seg.diff(r, i) = -rowsum;
  }
  return seg;
}

Eigen::VectorXd lagrange_eval(const Eigen::VectorXd& nodes,
                              const Eigen::MatrixXd& values, double tau) {
  const int m = static_cast<int>(nodes.size());
  if (values.cols() != m) {
    throw ArgumentError("lagrange_eval: values must have one column per node");
  }
  for (int j = 0; j < m; ++j) {
    if (tau == nodes[j]) return values.col(j);
  }
  // Second barycentric form. Weights are rebuilt here; evaluation is not
  // on a hot path (exports and tests only).
  Eigen::VectorXd logw(m);
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      if (k == j) continue;
      const double d = nodes[j] - nodes[k];
      acc -= std::log(std::abs(d));
      if (d < 0) sign[j] = -sign[j];
    }
    logw[j] = acc;
  }
  const double shift = logw.maxCoeff();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.rows());
  double den = 0.0;
  for (int j = 0; j < m; ++j) {
    const double w = sign[j] * std::exp(logw[j] - shift);
    const double c = w / (tau - nodes[j]);
    num += c * values.col(j);
    den += c;
  }
  return num / den;
}

Eigen::VectorXd quadrature(const RadauSegment& seg,
                           const Eigen::MatrixXd& values) {
  if (values.cols() != seg.degree) {
    throw ArgumentError(
        "quadrature: values must have one column per collocation node");
  }
  return values * seg.weights;
}

HpGrid make_grid(double t0, double tf, int segments, int degree) {
  if (!(tf > t0)) {
    throw ArgumentError("make_grid: final time must exceed initial time");
  }
  if (segments < 1) {
    throw ArgumentError("make_grid: need at least one segment");
  }
  HpGrid g;
  g.t0 = t0;
  g.tf = tf;
  g.segments = segments;
  g.rule = radau_segment(degree);
  return g;
}

}  // namespace mscvx
