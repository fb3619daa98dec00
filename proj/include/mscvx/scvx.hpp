// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mscvx/conic_solver.hpp"
#include "mscvx/problem.hpp"
#include "mscvx/reference.hpp"
#include "mscvx/transcription.hpp"

namespace mscvx {

// Outer successive-convexification loop: linearize the collocated
// dynamics about the reference, solve one conic subproblem for the
// tangent-coordinate steps, retract, repeat. States never leave their
// charts because every update goes through a retraction; there is no
// renormalization anywhere.

struct ScvxSettings {
  // Penalty weights on the virtual controls, the path-constraint slack
  // and the control trust-region radius.
  double mu_nu = 1e4;
  double mu_s = 1e-1;
  double mu_r = 1e-2;
  // The loop stops once the largest per-node state step norm drops
  // below epsilon.
  double epsilon = 1e-6;
  int max_iters = 50;
  // Callers normally copy these two from the problem definition. With a
  // free final time and no sigma bounds the subproblem can be unbounded
  // in the time direction whenever the running cost is time sensitive.
  bool free_final_time = false;
  std::optional<std::pair<double, double>> sigma_bounds;
  // Optional hard cap on each per-node state step norm. Off by default;
  // the standard formulation bounds only the control step.
  std::optional<double> state_trust_region;
  // Subproblem solver operating point. Tighter than the solver's own
  // defaults because the loop reads primal coordinates along epigraph
  // curvature directions, where the error scales like sqrt(gap).
  ConicSolverSettings conic = tight_conic_settings();

  static ConicSolverSettings tight_conic_settings();
  // Throws ArgumentError on nonpositive weights, tolerance or iteration
  // budget.
  void validate() const;
};

// Variable indexing of one subproblem. Blocks are laid out segment
// major, node minor: all eta coordinates first (including the
// uncollocated node 0 of every segment), then xi, the time step, the
// virtual controls, and the path slacks. Encoder auxiliaries (penalty
// epigraphs, trust region radii) follow after these named blocks; the
// trust region radius of each collocation node is recorded in r_index.
struct SubproblemLayout {
  int segments = 0;
  int p = 0;
  int n = 0;
  int m = 0;
  int eta_start = 0;
  int xi_start = 0;
  int dsigma = -1;  // -1 when the final time is fixed
  int nu_start = 0;
  int s_start = -1;  // -1 when the problem has no path constraints
  std::vector<int> r_index;

  int flat(int h, int i) const { return h * p + i - 1; }
  int eta(int h, int i) const { return eta_start + (h * (p + 1) + i) * n; }
  int xi(int h, int i) const { return xi_start + flat(h, i) * m; }
  int nu(int h, int i) const { return nu_start + flat(h, i) * n; }
  int s(int h, int i) const { return s_start + flat(h, i); }
  bool has_slack() const { return s_start >= 0; }
};

struct BuiltSubproblem {
  ConicProgram program;
  SubproblemLayout layout;
  // Linearizations per segment and collocation node, [h][i-1].
  std::vector<std::vector<LinearizedNode>> nodes;
};

// Assembles the conic subproblem about the reference: collocation
// equalities with virtual controls, slack-relaxed path rows, interface
// linking rows, boundary rows, control trust regions, the expanded cost
// and the weighted penalty terms. Keep-convex emitters from the problem
// run once per distinct node.
BuiltSubproblem build_subproblem(const ProblemDefinition& problem,
                                 const ReferenceTrajectory& ref,
                                 const HpGrid& grid,
                                 const ScvxSettings& settings);

// Applies the solved step: one retraction per distinct node, with the
// left copy reused at segment interfaces so the two stored interface
// states stay bitwise identical. A zero step returns the reference
// unchanged bit for bit.
ReferenceTrajectory update_reference(const ProblemDefinition& problem,
                                     const ReferenceTrajectory& ref,
                                     const SubproblemLayout& layout,
                                     const Eigen::VectorXd& primal);

enum class ScvxStatus { Converged, MaxIters, SubproblemFailure };
const char* to_string(ScvxStatus s);

struct IterationRecord {
  int iteration = 0;
  // Penalized subproblem objective and its penalty parts, evaluated
  // from the primal point.
  double objective = 0.0;
  double virtual_penalty = 0.0;
  double slack_penalty = 0.0;
  double trust_penalty = 0.0;
  // Largest defect component over all collocation nodes, before the
  // step.
  double max_defect = 0.0;
  // Step norms: largest per-node tangent coordinate 2-norm.
  double state_step = 0.0;
  double control_step = 0.0;
  double dsigma = 0.0;
  SolveStatus subproblem_status = SolveStatus::NumericalFailure;
  // Worst chart membership violation after the update.
  double manifold_violation = 0.0;
  double wall_time = 0.0;
  // Diagnostics such as step growth or an objective increase; empty on
  // an unremarkable iteration.
  std::string note;
};

struct SolveResult {
  ReferenceTrajectory trajectory;
  ScvxStatus status = ScvxStatus::MaxIters;
  std::vector<IterationRecord> history;
};

// The full loop. Solver failures stop the iteration with status
// SubproblemFailure and the history collected so far; transcription
// errors (cut locus, non-finite data) propagate as exceptions.
SolveResult run_scvx(const ProblemDefinition& problem,
                     const ReferenceTrajectory& initial, const HpGrid& grid,
                     const ScvxSettings& settings);

}  // namespace mscvx
