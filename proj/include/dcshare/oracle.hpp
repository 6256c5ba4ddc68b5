#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dcshare/network.hpp"

namespace dcshare {

/// Steady state of the averaged circuit at fixed converter gains, found by
/// bisecting the bus voltage until the branch injections balance the load.
struct SteadyState {
  OperatingPoint point;
  int bisection_steps = 0;
  double kcl_residual = 0.0;    // sum_k i_k - v_load / r_load at the solution
  double power_residual = 0.0;  // worst |vs is - Q - v_load i| / max(1, vs is)
};

/// Simulates one branch per gain: the source sits on its V-I curve, the
/// converter holds v_out = g * v_in, and the injected current follows from
/// the power balance vs * is = Q(is, i) + v_load * i, which is quadratic in
/// is on every curve piece and therefore solved in closed form. A branch
/// whose boosted open-circuit voltage falls below the bus is off (is = i = 0).
/// The bus voltage is the unique zero of the monotone KCL mismatch.
///
/// Shares only the network and loss definitions with the convex path; the
/// equilibrium itself is computed by an unrelated method, so agreement
/// between the two is meaningful evidence.
///
/// Throws ValidationError for a malformed network or gain vector,
/// OracleError("NoSteadyState") when some branch has no power-balance root
/// at the settled bus voltage, and OracleError("NegativeBranchCurrent") when
/// a conducting branch settles on a back-fed root.
SteadyState steady_state(const NetworkSpec& net, const std::vector<double>& gains);

/// Exhaustive search over a per-branch gain grid of `resolution` points
/// spanning [1, g_max_k]. Every node is simulated with steady_state's
/// machinery; a node is kept when the simulation converges, the settled bus
/// voltage lies in [v_load_lo, v_load_max], and every branch meets its
/// output-current floor with i <= is. Cost is the solver's objective,
/// sum_k lambda_k Q_k + sum_k mu_k |ic_k|, evaluated at the simulated point.
struct GridSearchResult {
  std::vector<double> gains;  // argmin node, lowest flat index on cost ties
  OperatingPoint point;
  double cost = 0.0;
  std::size_t feasible_nodes = 0;
  std::size_t total_nodes = 0;
};

/// Work grows as resolution^N times the bisection depth; capped at three
/// branches. Chunked across threads, with a merge that makes the result
/// independent of the thread count. Resolution 1 degenerates to the single
/// all-unity-gain node. Throws ValidationError for more than three branches
/// or resolution < 1, OracleError("AllInfeasible") when no node survives the
/// filters.
GridSearchResult grid_search(const NetworkSpec& net, double v_load_lo, int resolution);

/// Worst relative deviation between two operating points over the per-branch
/// currents and converter voltages plus the bus voltage, each term scaled by
/// max(|reference|, 1e-9) with `a` as the reference. Source terminal voltages
/// are excluded: they are a function of is and would double-count.
struct PointDeviation {
  double worst = 0.0;
  std::string where;  // field name plus branch index, or "v_load"
};

PointDeviation compare_points(const OperatingPoint& a, const OperatingPoint& b);

/// Objective value at an arbitrary operating point: weighted branch losses
/// plus weighted circulating-current magnitudes.
double operating_cost(const NetworkSpec& net, const OperatingPoint& pt);

}  // namespace dcshare
