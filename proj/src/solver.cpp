#include "dcshare/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "dcshare/errors.hpp"

namespace dcshare {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::IterLimit: return "IterLimit";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One inequality f(x) = x'Px + q.x + r <= 0; P is null for affine rows.
struct Ineq {
  const Eigen::MatrixXd* p = nullptr;
  Eigen::VectorXd q;
  double r = 0.0;
  const std::string* label = nullptr;

  double value(const Eigen::VectorXd& x) const {
    double v = q.dot(x) + r;
    if (p) v += x.dot((*p) * x);
    return v;
  }
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const {
    if (!p) return q;
    return 2.0 * ((*p) * x) + q;
  }
};

/// Smooth barrier subproblem: min t f0(x) - sum log(-f_i(x)) s.t. A x = d.
struct Smooth {
  Eigen::MatrixXd p0;
  Eigen::VectorXd q0;
  double r0 = 0.0;
  std::vector<Ineq> ineqs;
  Eigen::MatrixXd a;  // 0 x n when there are no equalities
  Eigen::VectorXd d;

  double f0(const Eigen::VectorXd& x) const { return x.dot(p0 * x) + q0.dot(x) + r0; }

  double worst(const Eigen::VectorXd& x, std::size_t* arg = nullptr) const {
    double w = -kInf;
    for (std::size_t idx = 0; idx < ineqs.size(); ++idx) {
      const double v = ineqs[idx].value(x);
      if (v > w) {
        w = v;
        if (arg) *arg = idx;
      }
    }
    return w;
  }
};

std::vector<Ineq> flatten(const ConvexProgram& prog) {
  std::vector<Ineq> out;
  out.reserve(prog.inequalities.size() + prog.quadratics.size());
  for (const auto& c : prog.inequalities) {
    Ineq f;
    f.q = c.a;
    f.r = -c.rhs;
    f.label = &c.label;
    out.push_back(std::move(f));
  }
  for (const auto& c : prog.quadratics) {
    Ineq f;
    f.p = &c.p;
    f.q = c.q;
    f.r = c.r;
    f.label = &c.label;
    out.push_back(std::move(f));
  }
  return out;
}

/// Largest step below the first constraint boundary along dx, from a strictly
/// feasible x. Crossing of c2 a^2 + c1 a + c0 = 0 with c0 < 0 has exactly one
/// positive root whenever c1 + sqrt(c1^2 - 4 c2 c0) > 0.
double boundary_step(const std::vector<Ineq>& ineqs, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& dx, std::size_t* arg = nullptr) {
  double amax = kInf;
  for (std::size_t idx = 0; idx < ineqs.size(); ++idx) {
    const auto& f = ineqs[idx];
    const double c0 = f.value(x);
    double c1 = f.q.dot(dx);
    double c2 = 0.0;
    if (f.p) {
      c1 += 2.0 * dx.dot((*f.p) * x);
      c2 = dx.dot((*f.p) * dx);
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) continue;
    const double denom = c1 + std::sqrt(disc);
    if (denom <= 0.0) continue;
    const double a = -2.0 * c0 / denom;
    if (a < amax) {
      amax = a;
      if (arg) *arg = idx;
    }
  }
  return amax;
}

enum class CenterResult { Converged, Budget, EarlyExit, Numerical };

struct CenterState {
  Eigen::VectorXd w;        // equality multipliers of the last KKT solve
  int iters = 0;
  std::string note;
  std::ostream* trace = nullptr;
};

/// Newton minimization of the barrier subproblem at fixed t. Assumes x is
/// strictly feasible; keeps it so via an exact fraction-to-boundary step cap.
CenterResult center(const Smooth& sm, double t, Eigen::VectorXd& x, int budget,
                    CenterState& st, const std::function<bool(const Eigen::VectorXd&)>& stop) {
  const int n = static_cast<int>(x.size());
  const int p = static_cast<int>(sm.a.rows());

  // Line-search steps shorter than one leave the iterate slightly off the
  // equality manifold and the error can accumulate across rounds. A min-norm
  // snap-back keeps the residual at rounding level so the Newton decrement
  // stays a trustworthy convergence signal.
  enum class Proj { AtFloor, Moved, Stuck };
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> acod;
  if (p > 0) acod.compute(sm.a);
  int projections = 12;
  auto project_eq = [&](Eigen::VectorXd& xx) -> Proj {
    const Eigen::VectorXd r = sm.d - sm.a * xx;
    if (r.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + sm.d.cwiseAbs().maxCoeff()))
      return Proj::AtFloor;
    if (projections == 0) return Proj::Stuck;
    --projections;
    const Eigen::VectorXd xn = xx + acod.solve(r);
    for (const auto& f : sm.ineqs)
      if (!(f.value(xn) < 0.0)) return Proj::Stuck;
    xx = xn;
    return Proj::Moved;
  };
  if (p > 0) project_eq(x);

  double dec2_prev = kInf;
  for (int it = 0;; ++it) {
    if (st.iters >= budget) return CenterResult::Budget;

    Eigen::VectorXd g = t * (2.0 * (sm.p0 * x) + sm.q0);
    Eigen::MatrixXd h = 2.0 * t * sm.p0;
    for (const auto& f : sm.ineqs) {
      const double fv = f.value(x);
      if (!(fv < 0.0)) {
        st.note = "iterate left the interior";
        return CenterResult::Numerical;
      }
      const double inv = -1.0 / fv;
      const Eigen::VectorXd gi = f.grad(x);
      g.noalias() += inv * gi;
      h.noalias() += (inv * inv) * (gi * gi.transpose());
      if (f.p) h.noalias() += (2.0 * inv) * (*f.p);
    }

    // KKT step with ridge escalation:  [H A'; A 0] [dx; w] = [-g; d - A x].
    // H's diagonal spans many orders of magnitude once barrier terms sharpen,
    // so factor the Jacobi-scaled matrix D H D (unit diagonal) instead of H.
    // A successful factorization can still return an inaccurate step at high
    // conditioning, so refine once and verify the residual before accepting;
    // otherwise a ridge-regularized step beats a garbage Newton step.
    Eigen::VectorXd dx(n);
    const double hdiag_max = h.diagonal().maxCoeff();
    const Eigen::ArrayXd hdiag_clamped =
        h.diagonal().array().max(1e-12 * std::max(1.0, hdiag_max));
    const Eigen::ArrayXd dscale = hdiag_clamped.sqrt().inverse();
    const Eigen::MatrixXd hs =
        dscale.matrix().asDiagonal() * h * dscale.matrix().asDiagonal();
    const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
    const Eigen::VectorXd r = p > 0 ? (sm.d - sm.a * x).eval() : Eigen::VectorXd();
    double ridge = 0.0;
    double used_ridge = 0.0;
    bool solved = false;
    for (int attempt = 0; attempt < 16 && !solved; ++attempt) {
      Eigen::MatrixXd hr = hs;
      if (ridge > 0.0) hr.diagonal().array() += ridge;
      Eigen::LLT<Eigen::MatrixXd> llt(hr);
      if (llt.info() != Eigen::Success) {
        ridge = ridge == 0.0 ? 1e-14 : ridge * 100.0;
        continue;
      }
      const auto hsolve = [&](const Eigen::MatrixXd& rhs) -> Eigen::MatrixXd {
        return dscale.matrix().asDiagonal() *
               llt.solve(dscale.matrix().asDiagonal() * rhs);
      };
      const auto happly = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::VectorXd out = h * v;
        if (ridge > 0.0) out += ridge * (hdiag_clamped * v.array()).matrix();
        return out;
      };
      Eigen::MatrixXd hi_at;
      Eigen::FullPivLU<Eigen::MatrixXd> lu;
      if (p > 0) {
        hi_at = hsolve(sm.a.transpose());
        lu.compute(sm.a * hi_at);
        if (!lu.isInvertible()) {
          ridge = ridge == 0.0 ? 1e-14 : ridge * 100.0;
          continue;
        }
      }
      // Solves  Hr ox + A' ow = rhs1,  A ox = rhs2.
      const auto kkt_solve = [&](const Eigen::VectorXd& rhs1, const Eigen::VectorXd& rhs2,
                                 Eigen::VectorXd& ox, Eigen::VectorXd& ow) {
        if (p == 0) {
          ox = hsolve(rhs1);
          ow.resize(0);
          return;
        }
        const Eigen::VectorXd hi_r1 = hsolve(rhs1);
        ow = lu.solve(sm.a * hi_r1 - rhs2);
        ox = hi_r1 - hi_at * ow;
      };
      Eigen::VectorXd w;
      kkt_solve(-g, r, dx, w);
      const auto kkt_residual = [&]() -> Eigen::VectorXd {
        Eigen::VectorXd res = happly(dx) + g;
        if (p > 0) res += sm.a.transpose() * w;
        return res;
      };
      Eigen::VectorXd res1 = kkt_residual();
      if (res1.allFinite()) {
        Eigen::VectorXd cdx, cw;
        kkt_solve(-res1, p > 0 ? (-(sm.a * dx - r)).eval() : Eigen::VectorXd(), cdx, cw);
        if (cdx.allFinite() && (p == 0 || cw.allFinite())) {
          dx += cdx;
          if (p > 0) w += cw;
          res1 = kkt_residual();
        }
      }
      const bool accurate =
          dx.allFinite() && res1.allFinite() && res1.cwiseAbs().maxCoeff() <= 1e-6 * gscale;
      if (accurate) {
        st.w = w;
        used_ridge = ridge;
        solved = true;
      } else {
        ridge = ridge == 0.0 ? 1e-14 : ridge * 100.0;
      }
    }
    if (!solved) {
      st.note = "KKT factorization failed despite ridge escalation";
      return CenterResult::Numerical;
    }
    if (p > 0) {
      // Whatever error the solve left in A dx = r, remove it exactly so steps
      // never walk the iterate off the equality manifold.
      dx.noalias() += acod.solve(r - sm.a * dx);
    }

    const double decrement2 = std::abs(dx.dot(h * dx));
    const double eq_res = p == 0 ? 0.0 : (sm.a * x - sm.d).cwiseAbs().maxCoeff();
    const bool quad_region = decrement2 <= 1e-2;
    const bool plateau = quad_region && decrement2 >= 0.25 * dec2_prev;
    dec2_prev = decrement2;
    if (decrement2 / 2.0 <= 1e-10 || plateau) {
      if (st.trace)
        *st.trace << "  center it=" << it << " dec2=" << decrement2 << " eq=" << eq_res
                  << " ridge=" << used_ridge << " done\n";
      if (p == 0 || eq_res <= 1e-10) return CenterResult::Converged;
      if (project_eq(x) == Proj::Moved) continue;  // re-verify from the snapped point
      return CenterResult::Converged;
    }

    std::size_t bnd = sm.ineqs.size();
    double step = std::min(1.0, 0.99 * boundary_step(sm.ineqs, x, dx, &bnd));
    if (st.trace) {
      *st.trace << "  center it=" << it << " dec2=" << decrement2 << " eq=" << eq_res
                << " ridge=" << used_ridge << " step=" << step << " |dx|=" << dx.norm()
                << " |x|=" << x.cwiseAbs().maxCoeff() << " f0=" << sm.f0(x);
      if (step < 1.0 && bnd < sm.ineqs.size()) *st.trace << " bnd=" << *sm.ineqs[bnd].label;
      *st.trace << "\n";
    }
    bool stepped = false;
    if (quad_region) {
      // Quadratic convergence phase: the objective part of the barrier
      // function dwarfs the remaining decrement, so a sufficient-decrease
      // test on it would compare rounding noise. Take the guarded step.
      x += step * dx;
      stepped = true;
    } else {
      const double slope = g.dot(dx);
      if (slope >= 0.0) {
        // The directional derivative is dominated by equality-residual noise;
        // with the residual already at its floor there is nothing left to gain.
        if (p > 0 && project_eq(x) == Proj::Moved) continue;
        return CenterResult::Converged;
      }
      const double phi0 = t * sm.f0(x) - [&] {
        double s = 0.0;
        for (const auto& f : sm.ineqs) s += std::log(-f.value(x));
        return s;
      }();
      for (int bt = 0; bt < 60; ++bt) {
        const Eigen::VectorXd xn = x + step * dx;
        if ((xn.array() == x.array()).all()) break;  // below float resolution
        bool interior = true;
        double logsum = 0.0;
        for (const auto& f : sm.ineqs) {
          const double fv = f.value(xn);
          if (!(fv < 0.0)) {
            interior = false;
            break;
          }
          logsum += std::log(-fv);
        }
        if (interior) {
          const double phin = t * sm.f0(xn) - logsum;
          if (phin <= phi0 + 0.25 * step * slope) {
            x = xn;
            stepped = true;
            break;
          }
        }
        step *= 0.5;
      }
    }
    ++st.iters;
    if (!stepped) {
      // No sufficient decrease at any step length: numerically centered.
      return CenterResult::Converged;
    }
    if (stop && stop(x)) return CenterResult::EarlyExit;
  }
}

Eigen::VectorXd least_squares_start(const Eigen::MatrixXd& a, const Eigen::VectorXd& d, int n) {
  if (a.rows() == 0) return Eigen::VectorXd::Zero(n);
  return a.completeOrthogonalDecomposition().solve(d);
}

Smooth make_smooth(const ConvexProgram& prog, const std::vector<Ineq>& ineqs) {
  Smooth sm;
  sm.p0 = prog.p0;
  sm.q0 = prog.q0;
  sm.r0 = prog.r0;
  sm.ineqs = ineqs;
  const int p = static_cast<int>(prog.equalities.size());
  sm.a.resize(p, prog.n_vars);
  sm.d.resize(p);
  for (int row = 0; row < p; ++row) {
    sm.a.row(row) = prog.equalities[row].a.transpose();
    sm.d[row] = prog.equalities[row].rhs;
  }
  return sm;
}

/// Epigraph feasibility problem over (x, s): min s with f_i(x) <= s inside a
/// wide variable box. Without the box the barrier drifts any variable that the
/// epigraph objective leaves free (the circulating-current bounds, for one)
/// toward infinity and centering never terminates.
struct Phase1Problem {
  Smooth sm;                            // in n+1 variables
  std::vector<Eigen::MatrixXd> padded;  // storage for extended quadratic terms
};

constexpr double kPhase1Box = 1e7;
const std::string kBoxLabel = "phase-1 variable box";

Phase1Problem make_phase1(const ConvexProgram& prog, const Smooth& orig) {
  Phase1Problem ph;
  const int n = prog.n_vars;
  ph.sm.p0 = Eigen::MatrixXd::Zero(n + 1, n + 1);
  ph.sm.q0 = Eigen::VectorXd::Zero(n + 1);
  ph.sm.q0[n] = 1.0;
  ph.sm.r0 = 0.0;
  ph.sm.a.resize(orig.a.rows(), n + 1);
  if (orig.a.rows() > 0) {
    ph.sm.a.leftCols(n) = orig.a;
    ph.sm.a.col(n).setZero();
  }
  ph.sm.d = orig.d;

  ph.padded.reserve(orig.ineqs.size());
  for (const auto& f : orig.ineqs) {
    Ineq g;
    g.q = Eigen::VectorXd::Zero(n + 1);
    g.q.head(n) = f.q;
    g.q[n] = -1.0;
    g.r = f.r;
    g.label = f.label;
    if (f.p) {
      ph.padded.emplace_back(Eigen::MatrixXd::Zero(n + 1, n + 1));
      ph.padded.back().topLeftCorner(n, n) = *f.p;
      g.p = &ph.padded.back();
    }
    ph.sm.ineqs.push_back(std::move(g));
  }
  for (int k = 0; k < n; ++k) {
    for (double sign : {1.0, -1.0}) {
      Ineq g;
      g.q = Eigen::VectorXd::Zero(n + 1);
      g.q[k] = sign;
      g.r = -kPhase1Box;
      g.label = &kBoxLabel;
      ph.sm.ineqs.push_back(std::move(g));
    }
  }
  return ph;
}

}  // namespace

Phase1Result solve_phase1(const ConvexProgram& prog, const SolverSettings& settings) {
  prog.check_well_formed();
  const auto ineqs = flatten(prog);
  const int n = prog.n_vars;
  const Smooth orig = make_smooth(prog, ineqs);

  Phase1Result res;
  if (ineqs.empty()) {
    res.feasible = true;
    res.x = least_squares_start(orig.a, orig.d, n);
    res.margin = kInf;
    res.worst = -kInf;
    return res;
  }

  Phase1Problem ph = make_phase1(prog, orig);
  Eigen::VectorXd z(n + 1);
  z.head(n) = least_squares_start(orig.a, orig.d, n);
  std::size_t arg = 0;
  const double w0 = orig.worst(z.head(n), &arg);
  z[n] = w0 + std::max(1.0, 0.1 * std::abs(w0));

  auto good_enough = [&](const Eigen::VectorXd& cur) {
    return orig.worst(cur.head(n)) <= -settings.slack_margin;
  };
  if (good_enough(z)) {
    res.feasible = true;
    res.x = z.head(n);
    std::size_t wa = 0;
    res.worst = orig.worst(z.head(n), &wa);
    res.margin = -res.worst;
    res.worst_label = *orig.ineqs[wa].label;
    return res;
  }

  const double m = static_cast<double>(ph.sm.ineqs.size());
  double t = 1.0;
  CenterState st;
  st.trace = settings.trace;
  auto finalize = [&](bool feasible) {
    res.feasible = feasible;
    res.x = z.head(n);
    std::size_t wa = 0;
    res.worst = orig.worst(res.x, &wa);
    res.margin = -res.worst;
    res.worst_label = *orig.ineqs[wa].label;
    res.newton_iters = st.iters;
    return res;
  };

  for (int round = 0; round < 64; ++round) {
    const CenterResult cr =
        center(ph.sm, t, z, settings.max_iters, st, good_enough);
    if (settings.trace)
      *settings.trace << "phase1 round=" << round << " t=" << t << " s=" << z[n]
                      << " worst=" << orig.worst(z.head(n)) << " iters=" << st.iters << "\n";
    if (cr == CenterResult::EarlyExit) return finalize(true);
    if (cr == CenterResult::Numerical)
      throw NumericalError("Phase1Breakdown", st.note.empty() ? "centering failed" : st.note);
    if (cr == CenterResult::Budget) {
      finalize(orig.worst(z.head(n)) < 0.0);
      res.newton_iters = st.iters;
      res.worst_label = "budget exhausted: " + res.worst_label;
      return res;
    }
    const double gap = m / t;
    const double s_val = z[n];
    if (s_val - gap > 0.0) return finalize(false);  // certified: min worst > 0
    if (good_enough(z)) return finalize(true);
    if (gap <= 1e-12 * std::max(1.0, std::abs(s_val)))
      return finalize(orig.worst(z.head(n)) < 0.0);
    t *= settings.barrier_factor;
  }
  return finalize(orig.worst(z.head(n)) < 0.0);
}

Solution solve(const ConvexProgram& prog, const SolverSettings& settings) {
  prog.check_well_formed();
  const auto ineqs = flatten(prog);
  const Smooth sm = make_smooth(prog, ineqs);
  const double m = static_cast<double>(ineqs.size());

  Solution sol;
  auto fill_point_info = [&](const Eigen::VectorXd& x, double t) {
    sol.x = x;
    sol.objective = sm.f0(x);
    sol.gap = t > 0.0 ? m / t : 0.0;
    sol.max_equality_residual =
        sm.a.rows() == 0 ? 0.0 : (sm.a * x - sm.d).cwiseAbs().maxCoeff();
    sol.max_inequality_violation = ineqs.empty() ? -kInf : sm.worst(x);
    sol.newton_iters = 0;
  };

  // Strictly feasible start, or an infeasibility certificate.
  Eigen::VectorXd x;
  int spent = 0;
  if (ineqs.empty()) {
    x = least_squares_start(sm.a, sm.d, prog.n_vars);
  } else {
    const auto ph = solve_phase1(prog, settings);
    spent = ph.newton_iters;
    if (ph.worst_label.rfind("budget exhausted", 0) == 0) {
      fill_point_info(ph.x, 0.0);
      sol.status = SolveStatus::IterLimit;
      sol.newton_iters = spent;
      sol.message = "iteration budget exhausted during the feasibility search";
      return sol;
    }
    if (!ph.feasible) {
      fill_point_info(ph.x, 0.0);
      sol.status = SolveStatus::Infeasible;
      sol.newton_iters = spent;
      sol.message = "no strictly feasible point; worst constraint " + ph.worst_label +
                    " violated by " + std::to_string(ph.worst);
      return sol;
    }
    x = ph.x;
  }

  // Scale the initial barrier weight to the starting objective so the first
  // centering does not have to march the whole objective range at the damped
  // Newton rate: phase-1 ignores the objective, and the march from its point
  // costs roughly t0 * (f0 start - f0 center) iterations.
  double t = ineqs.empty() ? 1.0 : std::clamp(m / std::max(1.0, std::abs(sm.f0(x))), 1e-2, 1e4);
  CenterState st;
  st.iters = spent;
  st.trace = settings.trace;
  double gap = ineqs.empty() ? 0.0 : kInf;

  try {
    for (int round = 0; round < 64; ++round) {
      const CenterResult cr = center(sm, t, x, settings.max_iters, st, nullptr);
      if (cr == CenterResult::Numerical) {
        fill_point_info(x, t);
        sol.status = SolveStatus::NumericalFailure;
        sol.newton_iters = st.iters;
        sol.message = st.note;
        return sol;
      }
      if (cr == CenterResult::Budget) {
        fill_point_info(x, t);
        sol.status = SolveStatus::IterLimit;
        sol.newton_iters = st.iters;
        sol.message = "iteration budget exhausted at barrier parameter t=" + std::to_string(t);
        return sol;
      }
      gap = ineqs.empty() ? 0.0 : m / t;
      const double obj = sm.f0(x);
      if (settings.trace)
        *settings.trace << "barrier round=" << round << " t=" << t << " gap=" << gap
                        << " obj=" << obj << " iters=" << st.iters << "\n";
      if (gap <= settings.tol_gap * std::max(1.0, std::abs(obj))) break;
      t *= settings.barrier_factor;
    }
  } catch (const std::exception& e) {
    fill_point_info(x, t);
    sol.status = SolveStatus::NumericalFailure;
    sol.message = e.what();
    return sol;
  }

  fill_point_info(x, t);
  sol.newton_iters = st.iters;

  // First-order optimality at the returned point with the barrier's implied
  // inequality duals 1/(t * slack) and equality duals w / t.
  Eigen::VectorXd stat = 2.0 * (sm.p0 * x) + sm.q0;
  for (const auto& f : ineqs) {
    const double slack = -f.value(x);
    if (slack > 0.0) stat.noalias() += (1.0 / (t * slack)) * f.grad(x);
  }
  if (sm.a.rows() > 0 && st.w.size() == sm.a.rows())
    stat.noalias() += sm.a.transpose() * (st.w / t);
  sol.kkt_stationarity = stat.cwiseAbs().maxCoeff();
  sol.gap = gap;
  sol.status = SolveStatus::Optimal;

  if (sol.max_equality_residual > settings.tol_feas) {
    sol.status = SolveStatus::NumericalFailure;
    sol.message = "equality residual above tolerance at exit";
  }
  return sol;
}

}  // namespace dcshare
