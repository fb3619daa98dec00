// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#include "mscvx/problem.hpp"

#include <cmath>

#include "mscvx/errors.hpp"

namespace mscvx {

namespace {

AffineExpr flat_coordinate(const ManifoldChart& chart,
                           const Eigen::VectorXd& ref, int var_offset,
                           int block, int component, const char* what) {
  const auto& blocks = chart.blocks();
  if (block < 0 || block >= static_cast<int>(blocks.size())) {
    throw ArgumentError(std::string(what) + ": block index out of range");
  }
  const auto& blk = blocks[block];
  if (blk.kind != ChartKind::Euclidean) {
    throw ArgumentError(std::string(what) +
                        ": only Euclidean blocks have an affine coordinate "
                        "view; route curved blocks through a path constraint");
  }
  if (component < 0 || component >= blk.ambient_dim) {
    throw ArgumentError(std::string(what) + ": component out of range");
  }
  // Euclidean frames are the identity, so the intrinsic variable is the
  // ambient perturbation itself.
  AffineExpr e;
  e.constant = ref[blk.ambient_offset + component];
  e.add(var_offset + blk.intrinsic_offset + component, 1.0);
  return e;
}

}  // namespace

AffineExpr ConvexNodeContext::state(int block, int component) const {
  return flat_coordinate(state_chart_, state_ref_, eta_offset_, block,
                         component, "convex constraint state view");
}

AffineExpr ConvexNodeContext::control(int block, int component) const {
  if (!has_control()) {
    throw ArgumentError(
        "convex constraint control view: no control lives at a segment "
        "start node");
  }
  return flat_coordinate(control_chart_, control_ref_, xi_offset_, block,
                         component, "convex constraint control view");
}

double ProblemDefinition::tangency_residual(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& u) const {
  const Eigen::VectorXd f = dynamics(x, u);
  double worst = 0.0;
  for (const auto& blk : state_chart.blocks()) {
    if (blk.kind == ChartKind::Euclidean) continue;
    // For both curved kinds the normal space at a point is spanned by
    // the point itself.
    const auto p = x.segment(blk.ambient_offset, blk.ambient_dim);
    const auto fp = f.segment(blk.ambient_offset, blk.ambient_dim);
    worst = std::max(worst, std::abs(p.dot(fp)));
  }
  return worst;
}

}  // namespace mscvx
