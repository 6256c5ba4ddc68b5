#include "dcshare/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "dcshare/errors.hpp"
#include "dcshare/losses.hpp"

namespace dcshare {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

// Sentinel injection for a branch with no power-balance root at the trial bus
// voltage. Always positive so the bisection moves the bus upward, where roots
// reappear.
constexpr double kOverloadCurrent = 1e30;

// Conductance standing in for a zero-impedance path when an ideal stiff
// branch pins the bus. Only its sign matters to the bisection.
constexpr double kPinConductance = 1e9;

// Tolerance for calling a branch back-fed or below its current floor.
constexpr double kCurrentTol = 1e-9;

// Quadratic in the collapsed loss form Q(is, i) =
//   r1 is^2 + rr i^2 + cx is i + sw is + vd i.
struct LossCoef {
  double r1 = 0.0;
  double rr = 0.0;
  double cx = 0.0;
  double sw = 0.0;
  double vd = 0.0;
};

LossCoef loss_coef(const Branch& b, double v_load) {
  LossCoef c;
  c.r1 = b.rs_ohm + b.rl_ohm + b.rm_ohm + b.alpha * b.rd_ohm;
  c.rr = b.r_cable_ohm;
  c.cx = b.alpha * b.r_cable_ohm - (b.rm_ohm - b.rd_ohm);
  c.sw = b.alpha * (v_load + b.vd_volt);
  c.vd = b.vd_volt;
  return c;
}

// Real roots of a x^2 + b x + c = 0, written to out. The paired root is
// computed as c / q to stay accurate when the roots differ in magnitude.
int quad_roots(double a, double b, double c, double* out) {
  if (std::abs(a) < 1e-300) {
    if (std::abs(b) < 1e-300) return 0;
    out[0] = -c / b;
    return 1;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return 0;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (std::abs(q) < 1e-300) {
    out[0] = 0.0;
    out[1] = -b / a;
  } else {
    out[0] = q / a;
    out[1] = c / q;
  }
  return 2;
}

struct BranchCtx {
  const Branch* b = nullptr;
  std::vector<PwlSegment> segs;
  double f0 = 0.0;      // open-circuit source voltage
  bool pinned = false;  // zero cable resistance and a perfectly flat source
};

std::vector<BranchCtx> make_contexts(const NetworkSpec& net) {
  std::vector<BranchCtx> ctx(net.branches.size());
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const Branch& b = net.branches[k];
    ctx[k].b = &b;
    ctx[k].segs = pwl_envelope(b.source);
    ctx[k].f0 = pwl_eval(b.source, 0.0).v;
    bool flat = b.r_cable_ohm == 0.0;
    for (const auto& seg : ctx[k].segs) {
      flat = flat && std::abs(b.source.pieces[seg.piece].beta - b.rs_ohm) < 1e-15;
    }
    ctx[k].pinned = flat;
  }
  return ctx;
}

struct BranchSim {
  enum class Mode { Off, On, Pinned, NoRoot };
  Mode mode = Mode::Off;
  double vs = 0.0;
  double v_in = 0.0;
  double v_out = 0.0;
  double is = 0.0;
  double i = 0.0;
};

// Branch state at gain g and bus voltage v. Solves the source-curve /
// converter-transform / power-balance system per envelope segment; the
// smallest nonnegative source-current root is the stable operating branch.
BranchSim respond(const BranchCtx& ctx, double g, double v) {
  const Branch& b = *ctx.b;
  const LossCoef c = loss_coef(b, v);
  const double r_cable = b.r_cable_ohm;
  BranchSim st;

  if (ctx.pinned) {
    st.mode = BranchSim::Mode::Pinned;
    st.vs = ctx.f0;
    st.v_in = ctx.f0;
    st.v_out = g * ctx.f0;
    st.i = (g * ctx.f0 - v) * kPinConductance;
    return st;
  }

  const auto off_state = [&] {
    BranchSim off;
    off.mode = BranchSim::Mode::Off;
    off.vs = ctx.f0;
    off.v_in = ctx.f0;
    off.v_out = v;  // no current, so the output node rests at the bus
    return off;
  };

  double best = kInf;
  const PwlPiece* best_piece = nullptr;

  if (r_cable > 0.0) {
    if (g * ctx.f0 - v <= 0.0) return off_state();
    for (const auto& seg : ctx.segs) {
      const PwlPiece& pc = b.source.pieces[seg.piece];
      const double a = g * (pc.beta - b.rs_ohm) / r_cable;
      const double c0 = (g * pc.gamma - v) / r_cable;
      const double qa = pc.beta - c.r1 - c.rr * a * a - c.cx * a;
      const double qb = pc.gamma - 2.0 * c.rr * a * c0 - c.cx * c0 - c.sw - (c.vd + v) * a;
      const double qc = -(c.rr * c0 + c.vd + v) * c0;
      double roots[2];
      const int n = quad_roots(qa, qb, qc, roots);
      const double span = std::isfinite(seg.i_hi) ? seg.i_hi : seg.i_lo;
      const double tol = 1e-9 * (1.0 + seg.i_lo + span);
      for (int t = 0; t < n; ++t) {
        const double r = roots[t];
        if (!(r >= seg.i_lo - tol && r <= seg.i_hi + tol)) continue;
        if (r < 0.0 || r >= best) continue;
        if (pc.beta * r + pc.gamma < -1e-12) continue;          // source voltage sign
        if (pc.beta * r + pc.gamma - b.rs_ohm * r < -1e-12) continue;  // converter input sign
        best = r;
        best_piece = &pc;
      }
    }
    if (!best_piece) {
      st.mode = BranchSim::Mode::NoRoot;
      return st;
    }
    st.mode = BranchSim::Mode::On;
    st.is = std::max(best, 0.0);
    st.vs = best_piece->beta * st.is + best_piece->gamma;
    st.v_in = st.vs - b.rs_ohm * st.is;
    st.v_out = g * st.v_in;
    st.i = (st.v_out - v) / r_cable;
    return st;
  }

  // Zero cable resistance: the converter output sits on the bus, so the input
  // voltage is fixed at v / g and the source current follows from the curve.
  const double target = v / g;
  if (ctx.f0 < target) return off_state();
  for (const auto& seg : ctx.segs) {
    const PwlPiece& pc = b.source.pieces[seg.piece];
    const double slope = pc.beta - b.rs_ohm;
    if (std::abs(slope) < 1e-15) continue;
    const double r = (target - pc.gamma) / slope;
    const double span = std::isfinite(seg.i_hi) ? seg.i_hi : seg.i_lo;
    const double tol = 1e-9 * (1.0 + seg.i_lo + span);
    if (!(r >= seg.i_lo - tol && r <= seg.i_hi + tol)) continue;
    if (r < 0.0 || r >= best) continue;
    if (pc.beta * r + pc.gamma < -1e-12) continue;
    best = r;
    best_piece = &pc;
  }
  if (!best_piece) {
    st.mode = BranchSim::Mode::NoRoot;
    return st;
  }
  st.is = std::max(best, 0.0);
  st.vs = best_piece->beta * st.is + best_piece->gamma;
  st.v_in = target;
  st.v_out = v;
  const double den = v + c.vd + c.cx * st.is;
  if (den <= 1e-12) {
    st.mode = BranchSim::Mode::NoRoot;
    return st;
  }
  st.mode = BranchSim::Mode::On;
  st.i = (st.vs - c.r1 * st.is - c.sw) * st.is / den;
  return st;
}

struct SimOutcome {
  OperatingPoint point;
  int steps = 0;
  double kcl = 0.0;
  double power_rel = 0.0;
  bool ok = false;
  const char* rule = nullptr;
  std::string where;
};

// Bisects the bus voltage on [0, max_k g_k f_k(0)]. The KCL mismatch
// sum_k i_k(v) - v / r_load is continuous and decreasing: every conducting
// branch injects less as the bus rises, off branches inject nothing, and the
// load draw grows. width_tol = 0 bisects down to one ulp.
SimOutcome simulate(const NetworkSpec& net, const std::vector<BranchCtx>& ctx,
                    const std::vector<double>& gains, double width_tol) {
  const std::size_t n = net.branches.size();
  SimOutcome out;

  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, gains[k] * ctx[k].f0);

  std::vector<BranchSim> st(n);
  const auto mismatch_at = [&](double v) {
    double s = -v / net.r_load_ohm;
    for (std::size_t k = 0; k < n; ++k) {
      st[k] = respond(ctx[k], gains[k], v);
      s += st[k].mode == BranchSim::Mode::NoRoot ? kOverloadCurrent : st[k].i;
    }
    return s;
  };

  for (; out.steps < 200; ++out.steps) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (width_tol > 0.0 && hi - lo <= width_tol * (1.0 + hi)) break;
    (mismatch_at(mid) > 0.0 ? lo : hi) = mid;
  }
  double v = 0.5 * (lo + hi);
  double kcl = mismatch_at(v);

  // An ideal stiff branch holds the bus at exactly g * f(0); the bisection
  // only approaches that through the surrogate conductance. Snap to the pin
  // and refresh the other branches there.
  std::size_t pinned = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (st[k].mode != BranchSim::Mode::Pinned) continue;
    const double pin = gains[k] * ctx[k].f0;
    if (pinned > 0 && std::abs(pin - v) > 1e-9 * (1.0 + std::abs(v))) {
      out.rule = "ConflictingStiffBranches";
      out.where = net.branches[k].name;
      return out;
    }
    v = pin;
    ++pinned;
  }
  if (pinned > 0) kcl = mismatch_at(v);

  for (std::size_t k = 0; k < n; ++k) {
    if (st[k].mode == BranchSim::Mode::NoRoot) {
      out.rule = "NoSteadyState";
      out.where = net.branches[k].name;
      return out;
    }
  }

  if (pinned > 0) {
    // Ideal stiff branches supply whatever current the bus balance demands;
    // split it evenly and recover each source current from the power balance.
    double known = 0.0;
    for (const auto& s : st) {
      if (s.mode != BranchSim::Mode::Pinned) known += s.i;
    }
    const double share = (v / net.r_load_ohm - known) / static_cast<double>(pinned);
    for (std::size_t k = 0; k < n; ++k) {
      if (st[k].mode != BranchSim::Mode::Pinned) continue;
      const LossCoef c = loss_coef(*ctx[k].b, v);
      const double qb = c.cx * share + c.sw - st[k].vs;
      const double qc = (c.vd + v) * share;
      double roots[2];
      const int nr = quad_roots(c.r1, qb, qc, roots);
      double is = kInf;
      for (int t = 0; t < nr; ++t) {
        if (roots[t] >= 0.0 && roots[t] < is) is = roots[t];
      }
      if (!std::isfinite(is)) {
        out.rule = "NoSteadyState";
        out.where = net.branches[k].name;
        return out;
      }
      st[k].is = is;
      st[k].i = share;
      st[k].v_out = v;
    }
    kcl = 0.0;  // the share construction balances the bus exactly
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (st[k].mode != BranchSim::Mode::Off && st[k].i < -kCurrentTol) {
      out.rule = "NegativeBranchCurrent";
      out.where = net.branches[k].name;
      return out;
    }
  }

  out.point.v_load = v;
  out.point.vs.resize(n);
  out.point.v_in.resize(n);
  out.point.v_out.resize(n);
  out.point.is.resize(n);
  out.point.i.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.point.vs[k] = st[k].vs;
    out.point.v_in[k] = st[k].v_in;
    out.point.v_out[k] = st[k].v_out;
    out.point.is[k] = st[k].is;
    out.point.i[k] = st[k].i;
    const double in = st[k].vs * st[k].is;
    const double res = in - branch_loss(net.branches[k], st[k].is, st[k].i, v) - v * st[k].i;
    out.power_rel = std::max(out.power_rel, std::abs(res) / std::max(1.0, std::abs(in)));
  }
  out.kcl = kcl;
  out.ok = true;
  return out;
}

void require_gains(const NetworkSpec& net, const std::vector<double>& gains) {
  if (gains.size() != net.branches.size()) {
    throw ValidationError("SizeMismatch",
                          "expected " + std::to_string(net.branches.size()) + " gains, got " +
                              std::to_string(gains.size()));
  }
  for (std::size_t k = 0; k < gains.size(); ++k) {
    if (!std::isfinite(gains[k]) || gains[k] < 1.0) {
      throw ValidationError("BadGain", "branch " + net.branches[k].name +
                                           ": gain must be finite and at least 1, got " +
                                           std::to_string(gains[k]));
    }
  }
}

}  // namespace

SteadyState steady_state(const NetworkSpec& net, const std::vector<double>& gains) {
  require_valid(net);
  require_gains(net, gains);
  const auto ctx = make_contexts(net);
  SimOutcome sim = simulate(net, ctx, gains, 0.0);
  if (!sim.ok) {
    throw OracleError(sim.rule, "branch " + sim.where + " at the settled bus voltage");
  }
  SteadyState res;
  res.point = std::move(sim.point);
  res.bisection_steps = sim.steps;
  res.kcl_residual = sim.kcl;
  res.power_residual = sim.power_rel;
  return res;
}

GridSearchResult grid_search(const NetworkSpec& net, double v_load_lo, int resolution) {
  require_valid(net);
  const std::size_t n = net.branches.size();
  if (n > 3) {
    throw ValidationError("TooManyBranches",
                          "grid search is capped at 3 branches, got " + std::to_string(n));
  }
  if (resolution < 1) {
    throw ValidationError("BadResolution",
                          "need at least 1 grid point per axis, got " + std::to_string(resolution));
  }

  const auto ctx = make_contexts(net);
  const auto res = static_cast<std::size_t>(resolution);
  std::vector<std::vector<double>> axes(n);
  for (std::size_t k = 0; k < n; ++k) {
    axes[k].resize(res);
    const double g_max = net.branches[k].g_max;
    for (std::size_t t = 0; t < res; ++t) {
      axes[k][t] = res == 1 ? 1.0
                            : 1.0 + (g_max - 1.0) * static_cast<double>(t) /
                                        static_cast<double>(res - 1);
    }
  }
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t k = n; k-- > 1;) stride[k - 1] = stride[k] * res;
  const std::size_t total = stride[0] * res;

  struct Chunk {
    double cost = kInf;
    std::size_t idx = kNoNode;
    std::vector<double> gains;
    OperatingPoint point;
    std::size_t feasible = 0;
    std::exception_ptr err;
  };

  const auto scan = [&](std::size_t begin, std::size_t end, Chunk& c) {
    std::vector<double> g(n);
    for (std::size_t idx = begin; idx < end; ++idx) {
      for (std::size_t k = 0; k < n; ++k) g[k] = axes[k][(idx / stride[k]) % res];
      const SimOutcome sim = simulate(net, ctx, g, 1e-9);
      if (!sim.ok) continue;
      const double v = sim.point.v_load;
      if (v < v_load_lo - 1e-9 || v > net.v_load_max + 1e-9) continue;
      bool feasible = true;
      for (std::size_t k = 0; k < n && feasible; ++k) {
        const double floor = resolved_i_min(net.branches[k], v, net.fs_hz);
        feasible = sim.point.i[k] >= floor - kCurrentTol &&
                   sim.point.is[k] >= sim.point.i[k] - kCurrentTol;
      }
      if (!feasible) continue;
      ++c.feasible;
      const double cost = operating_cost(net, sim.point);
      if (cost < c.cost || (cost == c.cost && idx < c.idx)) {
        c.cost = cost;
        c.idx = idx;
        c.gains = g;
        c.point = sim.point;
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = std::clamp<std::size_t>(hw == 0 ? 1 : hw, 1, 8);
  if (total < 512) workers = 1;
  std::vector<Chunk> chunks(workers);
  if (workers == 1) {
    scan(0, total, chunks[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          scan(total * t / workers, total * (t + 1) / workers, chunks[t]);
        } catch (...) {
          chunks[t].err = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& c : chunks) {
      if (c.err) std::rethrow_exception(c.err);
    }
  }

  // Lexicographic (cost, flat index) minimum; identical for any chunking.
  const Chunk* best = nullptr;
  std::size_t feasible = 0;
  for (const auto& c : chunks) {
    feasible += c.feasible;
    if (c.idx == kNoNode) continue;
    if (!best || c.cost < best->cost || (c.cost == best->cost && c.idx < best->idx)) best = &c;
  }
  if (!best) {
    throw OracleError("AllInfeasible", "no gain combination met the bus window and current floors");
  }
  GridSearchResult out;
  out.gains = best->gains;
  out.point = best->point;
  out.cost = best->cost;
  out.feasible_nodes = feasible;
  out.total_nodes = total;
  return out;
}

PointDeviation compare_points(const OperatingPoint& a, const OperatingPoint& b) {
  const std::size_t n = a.is.size();
  if (a.v_in.size() != n || a.v_out.size() != n || a.i.size() != n || b.is.size() != n ||
      b.v_in.size() != n || b.v_out.size() != n || b.i.size() != n) {
    throw ValidationError("SizeMismatch", "operating points describe different branch counts");
  }
  const auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(x), 1e-9); };
  PointDeviation dev{rel(a.v_load, b.v_load), "v_load"};
  const auto take = [&](double value, const char* field, std::size_t k) {
    if (value > dev.worst) dev = {value, field + ("[" + std::to_string(k) + "]")};
  };
  for (std::size_t k = 0; k < n; ++k) {
    take(rel(a.is[k], b.is[k]), "is", k);
    take(rel(a.i[k], b.i[k]), "i", k);
    take(rel(a.v_in[k], b.v_in[k]), "v_in", k);
    take(rel(a.v_out[k], b.v_out[k]), "v_out", k);
  }
  return dev;
}

double operating_cost(const NetworkSpec& net, const OperatingPoint& pt) {
  const std::size_t n = net.branches.size();
  if (pt.is.size() != n || pt.i.size() != n || pt.v_out.size() != n) {
    throw ValidationError("SizeMismatch", "operating point does not match the network");
  }
  std::vector<double> cables(n);
  for (std::size_t k = 0; k < n; ++k) cables[k] = net.branches[k].r_cable_ohm;
  const auto ic = circulating_currents(pt.v_out, cables);
  double cost = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Branch& b = net.branches[k];
    cost += b.lambda * branch_loss(b, pt.is[k], pt.i[k], pt.v_load) + b.mu * std::abs(ic[k]);
  }
  return cost;
}

}  // namespace dcshare
