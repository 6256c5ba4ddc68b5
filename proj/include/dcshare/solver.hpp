#pragma once

#include <iosfwd>
#include <limits>
#include <string>

#include "dcshare/qcqp.hpp"

namespace dcshare {

struct SolverSettings {
  double tol_gap = 1e-7;        // duality-gap target, relative to max(1, |objective|)
  double tol_feas = 1e-9;       // equality residual target
  int max_iters = 200;          // total Newton iterations across all centerings
  double barrier_factor = 10.0; // growth of t between centerings
  double slack_margin = 1e-6;   // feasibility margin sought by the phase-1 problem
  std::ostream* trace = nullptr;  // optional line-oriented iteration log
};

enum class SolveStatus { Optimal, Infeasible, IterLimit, NumericalFailure };

const char* to_string(SolveStatus status);

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::infinity();
  // Residuals of the first-order optimality system at the returned point;
  // the dual estimates for the inequalities are 1 / (t * slack).
  double kkt_stationarity = std::numeric_limits<double>::infinity();
  double max_equality_residual = std::numeric_limits<double>::infinity();
  double max_inequality_violation = std::numeric_limits<double>::infinity();
  int newton_iters = 0;
  std::string message;
};

struct Phase1Result {
  bool feasible = false;
  Eigen::VectorXd x;
  double margin = 0.0;  // smallest inequality slack at the returned point
  // Best worst-violation value reached; nonnegative when infeasible.
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_label;
  int newton_iters = 0;
};

/// Finds a strictly feasible point by minimizing the worst violation through
/// an epigraph reformulation of the same program class. Exits early once
/// every slack clears settings.slack_margin.
Phase1Result solve_phase1(const ConvexProgram& prog, const SolverSettings& settings = {});

/// Log-barrier interior-point method with Newton centering over the equality
/// manifold. Deterministic: identical inputs produce identical iterates.
Solution solve(const ConvexProgram& prog, const SolverSettings& settings = {});

}  // namespace dcshare
