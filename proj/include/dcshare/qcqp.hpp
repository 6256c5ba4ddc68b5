#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace dcshare {

enum class ConstraintKind {
  KvlInput,        // v_in = vs - Rs is
  KvlOutput,       // v_out = v_load + R i
  Kcl,             // sum_k i_k = v_load / R_load
  SourceCurve,     // vs <= beta_j is + gamma_j
  PowerBalance,    // Q + v_load i <= beta_j is^2 + gamma_j is
  GainFloor,       // v_in <= v_out
  GainCeiling,     // v_out <= g_max v_in
  InputFloor,      // v_in >= 20 vd
  Nonnegative,     // variable >= 0
  CurrentFloor,    // i >= i_min
  CirculatingAbs,  // +-ic_k <= t_k
};

const char* to_string(ConstraintKind kind);

/// a . x = rhs (equalities) or a . x <= rhs (inequalities).
struct LinearConstraint {
  Eigen::VectorXd a;
  double rhs = 0.0;
  ConstraintKind kind = ConstraintKind::Nonnegative;
  std::string label;
};

/// x' P x + q . x + r <= 0 with P symmetric positive semidefinite.
struct QuadConstraint {
  Eigen::MatrixXd p;
  Eigen::VectorXd q;
  double r = 0.0;
  ConstraintKind kind = ConstraintKind::PowerBalance;
  std::string label;
};

struct ResidualReport {
  double max_equality_abs = 0.0;
  // Largest f_i(x) over all inequalities; feasible points have it <= 0.
  double max_inequality_violation = 0.0;
  std::string worst_equality;
  std::string worst_inequality;
  bool feasible(double tol) const {
    return max_equality_abs <= tol && max_inequality_violation <= tol;
  }
};

/// minimize x' P0 x + q0 . x + r0 subject to the constraint lists.
/// The quadratic terms carry no 1/2 convention anywhere in this program:
/// the gradient of the objective is 2 P0 x + q0.
struct ConvexProgram {
  int n_vars = 0;
  std::vector<std::string> var_names;
  Eigen::MatrixXd p0;
  Eigen::VectorXd q0;
  double r0 = 0.0;
  std::vector<LinearConstraint> equalities;
  std::vector<LinearConstraint> inequalities;
  std::vector<QuadConstraint> quadratics;

  double objective_value(const Eigen::VectorXd& x) const;
  ResidualReport constraint_residuals(const Eigen::VectorXd& x) const;

  /// Dimension and symmetry/PSD sanity; throws NumericalError on violation.
  /// Tolerates eigenvalues down to -1e-10 * scale from rounding.
  void check_well_formed() const;

  /// Line-oriented diagnostic listing with stable ordering (construction
  /// order), suitable for golden-file comparison.
  void dump(std::ostream& os) const;
};

}  // namespace dcshare
