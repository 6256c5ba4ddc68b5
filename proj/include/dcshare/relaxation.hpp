#pragma once

#include <vector>

#include "dcshare/network.hpp"
#include "dcshare/qcqp.hpp"

namespace dcshare {

/// What to solve for: the bus setpoint plus optional model terms.
struct SolveRequest {
  double v_load = 0.0;               // must lie in [v_load_min, v_load_max]
  bool include_circulating = true;   // mu-weighted |ic| epigraph terms
  bool include_input_floor = false;  // v_in >= 20 vd
};

/// Index layout: five variables per branch in branch order
/// (vs, v_in, v_out, is, i), then one epigraph variable per branch that
/// carries a circulating-current term.
struct VariableMap {
  int n_branches = 0;
  std::vector<int> aux;  // epigraph index per branch, -1 when absent

  int vs(int k) const { return 5 * k; }
  int v_in(int k) const { return 5 * k + 1; }
  int v_out(int k) const { return 5 * k + 2; }
  int is(int k) const { return 5 * k + 3; }
  int i(int k) const { return 5 * k + 4; }
  int size() const;
};

struct RelaxedProgram {
  ConvexProgram program;
  VariableMap vars;
  double v_load = 0.0;
  std::vector<double> i_min;  // resolved output floors, one per branch
};

/// Assembles the convex dispatch program for a fixed bus voltage:
/// branch KVL equalities, the load KCL row, gain box, source-curve cuts,
/// one convexified power-balance quadratic per curve piece, variable bounds,
/// and (optionally) circulating-current epigraphs. The objective is
/// sum_k lambda_k Q_k plus sum_k mu_k t_k.
/// Requires a validation-clean, gate-passing network.
RelaxedProgram build_program(const NetworkSpec& net, const SolveRequest& req);

/// Splits a solver point into named per-branch quantities.
OperatingPoint unpack_point(const VariableMap& vars, const Eigen::VectorXd& x, double v_load);

/// Inverse of unpack_point; epigraph entries are set to the exact |ic_k|.
Eigen::VectorXd pack_point(const NetworkSpec& net, const VariableMap& vars,
                           const OperatingPoint& pt);

}  // namespace dcshare
