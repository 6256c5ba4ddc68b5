#include "dcshare/qcqp.hpp"

#include <cmath>
#include <ostream>

#include "dcshare/errors.hpp"

namespace dcshare {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::KvlInput: return "KvlInput";
    case ConstraintKind::KvlOutput: return "KvlOutput";
    case ConstraintKind::Kcl: return "Kcl";
    case ConstraintKind::SourceCurve: return "SourceCurve";
    case ConstraintKind::PowerBalance: return "PowerBalance";
    case ConstraintKind::GainFloor: return "GainFloor";
    case ConstraintKind::GainCeiling: return "GainCeiling";
    case ConstraintKind::InputFloor: return "InputFloor";
    case ConstraintKind::Nonnegative: return "Nonnegative";
    case ConstraintKind::CurrentFloor: return "CurrentFloor";
    case ConstraintKind::CirculatingAbs: return "CirculatingAbs";
  }
  return "Unknown";
}

double ConvexProgram::objective_value(const Eigen::VectorXd& x) const {
  if (x.size() != n_vars)
    throw ValidationError("SizeMismatch", "point dimension does not match the program");
  return x.dot(p0 * x) + q0.dot(x) + r0;
}

ResidualReport ConvexProgram::constraint_residuals(const Eigen::VectorXd& x) const {
  if (x.size() != n_vars)
    throw ValidationError("SizeMismatch", "point dimension does not match the program");
  ResidualReport rep;
  for (const auto& c : equalities) {
    const double r = std::abs(c.a.dot(x) - c.rhs);
    if (r > rep.max_equality_abs) {
      rep.max_equality_abs = r;
      rep.worst_equality = c.label;
    }
  }
  bool first = true;
  auto consider = [&](double f, const std::string& label) {
    if (first || f > rep.max_inequality_violation) {
      rep.max_inequality_violation = f;
      rep.worst_inequality = label;
      first = false;
    }
  };
  for (const auto& c : inequalities) consider(c.a.dot(x) - c.rhs, c.label);
  for (const auto& c : quadratics) consider(x.dot(c.p * x) + c.q.dot(x) + c.r, c.label);
  if (first) rep.max_inequality_violation = 0.0;
  return rep;
}

void ConvexProgram::check_well_formed() const {
  auto bad = [](const std::string& what) -> NumericalError {
    return NumericalError("MalformedProgram", what);
  };
  if (n_vars <= 0) throw bad("program has no variables");
  if (p0.rows() != n_vars || p0.cols() != n_vars || q0.size() != n_vars)
    throw bad("objective dimensions disagree with n_vars");
  if (!p0.isApprox(p0.transpose(), 1e-12)) throw bad("objective matrix is not symmetric");

  auto check_psd = [&](const Eigen::MatrixXd& m, const std::string& label) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw bad(label + " is not positive semidefinite");
  };
  check_psd(p0, "objective");

  for (const auto& c : equalities)
    if (c.a.size() != n_vars) throw bad("equality " + c.label + " has wrong dimension");
  for (const auto& c : inequalities)
    if (c.a.size() != n_vars) throw bad("inequality " + c.label + " has wrong dimension");
  for (const auto& c : quadratics) {
    if (c.p.rows() != n_vars || c.p.cols() != n_vars || c.q.size() != n_vars)
      throw bad("quadratic " + c.label + " has wrong dimension");
    if (!c.p.isApprox(c.p.transpose(), 1e-12))
      throw bad("quadratic " + c.label + " is not symmetric");
    check_psd(c.p, "quadratic " + c.label);
  }
}

namespace {

void print_coeff(std::ostream& os, bool& lead, double v, const std::string& term) {
  if (v == 0.0) return;
  double mag = v;
  if (!lead) {
    os << (v < 0.0 ? " - " : " + ");
    mag = std::abs(v);
  }
  lead = false;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", mag);
  os << buf << "*" << term;
}

void print_linear(std::ostream& os, const Eigen::VectorXd& a) {
  bool lead = true;
  for (int j = 0; j < a.size(); ++j) print_coeff(os, lead, a[j], "x" + std::to_string(j));
  if (lead) os << "0";
}

}  // namespace

void ConvexProgram::dump(std::ostream& os) const {
  os << "program: " << n_vars << " vars, " << equalities.size() << " eq, "
     << inequalities.size() << " ineq, " << quadratics.size() << " quad\n";
  for (int j = 0; j < n_vars; ++j) {
    os << "var x" << j;
    if (j < static_cast<int>(var_names.size()) && !var_names[j].empty())
      os << " " << var_names[j];
    os << "\n";
  }
  os << "min ";
  {
    bool lead = true;
    for (int a = 0; a < n_vars; ++a)
      for (int b = a; b < n_vars; ++b) {
        const double v = a == b ? p0(a, a) : 2.0 * p0(a, b);
        print_coeff(os, lead, v, "x" + std::to_string(a) + "*x" + std::to_string(b));
      }
    for (int j = 0; j < n_vars; ++j) print_coeff(os, lead, q0[j], "x" + std::to_string(j));
    if (r0 != 0.0 || lead) {
      if (!lead) os << " + ";
      os << r0;
    }
    os << "\n";
  }
  char rhs[40];
  for (const auto& c : equalities) {
    os << "eq " << to_string(c.kind) << "[" << c.label << "]: ";
    print_linear(os, c.a);
    std::snprintf(rhs, sizeof rhs, "%.9g", c.rhs);
    os << " = " << rhs << "\n";
  }
  for (const auto& c : inequalities) {
    os << "ineq " << to_string(c.kind) << "[" << c.label << "]: ";
    print_linear(os, c.a);
    std::snprintf(rhs, sizeof rhs, "%.9g", c.rhs);
    os << " <= " << rhs << "\n";
  }
  for (const auto& c : quadratics) {
    os << "quad " << to_string(c.kind) << "[" << c.label << "]: ";
    bool lead = true;
    for (int a = 0; a < n_vars; ++a)
      for (int b = a; b < n_vars; ++b) {
        const double v = a == b ? c.p(a, a) : 2.0 * c.p(a, b);
        print_coeff(os, lead, v, "x" + std::to_string(a) + "*x" + std::to_string(b));
      }
    for (int j = 0; j < n_vars; ++j) print_coeff(os, lead, c.q[j], "x" + std::to_string(j));
    if (c.r != 0.0) {
      if (!lead) os << " + ";
      lead = false;
      std::snprintf(rhs, sizeof rhs, "%.9g", c.r);
      os << rhs;
    }
    if (lead) os << "0";
    os << " <= 0\n";
  }
}

}  // namespace dcshare
