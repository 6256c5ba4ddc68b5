#include "dcshare/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dcshare/errors.hpp"

namespace dcshare {

EffectiveResistances effective_resistances(const Branch& b) {
  const double dr = std::abs(b.rm_ohm - b.rd_ohm);
  EffectiveResistances r;
  r.r1 = b.rs_ohm + b.rl_ohm + b.rm_ohm + b.alpha * b.rd_ohm;
  r.r2 = dr / 2.0 + b.alpha * b.alpha * b.r_cable_ohm / 2.0;
  r.r3 = (b.r_cable_ohm - dr) / 2.0;
  return r;
}

GateResult convexity_gate(const Branch& b) {
  const auto r = effective_resistances(b);
  GateResult g;
  g.margin1 = r.r1 - r.r2;
  g.margin2 = r.r3;
  g.pass = g.margin1 >= 0.0 && g.margin2 >= 0.0;
  return g;
}

std::vector<GateResult> convexity_gate(const NetworkSpec& net) {
  std::vector<GateResult> out;
  out.reserve(net.branches.size());
  for (const auto& b : net.branches) out.push_back(convexity_gate(b));
  return out;
}

void require_convex(const NetworkSpec& net) {
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto g = convexity_gate(net.branches[k]);
    if (!g.pass) {
      std::ostringstream os;
      os << "branch " << net.branches[k].name << ": loss not convex (margins " << g.margin1
         << ", " << g.margin2 << ")";
      throw GateError("ConvexityGateFailed", os.str());
    }
  }
}

namespace {

void check_point(const char* op, double is, double i) {
  if (!(is >= 0.0) || !(i >= 0.0) || i > is) {
    std::ostringstream os;
    os << op << ": (is, i) = (" << is << ", " << i << ") is not a physical boost state";
    throw ValidationError("NonPhysicalPoint", os.str());
  }
}

}  // namespace

double branch_loss(const Branch& b, double is, double i, double v_load) {
  check_point("branch_loss", is, i);
  const auto r = effective_resistances(b);
  const double dr = std::abs(b.rm_ohm - b.rd_ohm);
  const double s = b.rm_ohm >= b.rd_ohm ? 1.0 : -1.0;
  const double boosted = i + b.alpha * is;
  const double ripple = is - s * i;
  return is * is * (r.r1 - r.r2) + boosted * boosted * b.r_cable_ohm / 2.0 +
         ripple * ripple * dr / 2.0 + b.alpha * v_load * is + b.vd_volt * boosted +
         i * i * r.r3;
}

LossBreakdown branch_loss_parts(const Branch& b, double is, double i, double v_load) {
  check_point("branch_loss_parts", is, i);
  LossBreakdown d;
  d.source_and_inductor = is * is * (b.rs_ohm + b.rl_ohm);
  d.mosfet_conduction = is * (is - i) * b.rm_ohm;
  d.diode_conduction = b.vd_volt * i + is * i * b.rd_ohm;
  d.cable = i * i * b.r_cable_ohm;
  d.switching = b.alpha * ((v_load + b.vd_volt) * is + is * i * b.r_cable_ohm +
                           is * is * b.rd_ohm);
  return d;
}

double switching_alpha(double tau_on_s, double tau_off_s, double fs_hz) {
  if (!(tau_on_s >= 0.0) || !(tau_off_s >= 0.0))
    throw ValidationError("BadAlpha", "transition times must be >= 0");
  if (!(fs_hz > 0.0)) throw ValidationError("BadFrequency", "fs_hz must be > 0");
  const double alpha = 0.5 * (tau_on_s + tau_off_s) * fs_hz;
  if (alpha >= 1.0)
    throw ValidationError("BadAlpha", "transition times overlap the whole switching period");
  return alpha;
}

double ccm_min_source_current(const PwlCurve& curve, double fs_hz, double l_henry) {
  if (!(l_henry > 0.0))
    throw FitError("MissingInductance", "continuous-conduction floor needs l_henry > 0");
  if (!(fs_hz > 0.0)) throw ValidationError("BadFrequency", "fs_hz must be > 0");
  return 5.0 * pwl_eval(curve, 0.0).v / (fs_hz * l_henry);
}

double min_output_current(const Branch& b, double is_min, double v_load) {
  if (is_min < 0.0) throw ValidationError("BadCurrentFloor", "is_min must be >= 0");
  if (is_min == 0.0) return 0.0;

  // Power balance at is = is_min, loss written as
  //   Q(is, i) = r1 is^2 + R i^2 + (alpha R - (R_M - R_D)) is i
  //            + alpha (v_load + V_D) is + V_D i
  // so f(is) is = Q + v_load i becomes a i^2 + b i + c = 0 with
  const auto r = effective_resistances(b);
  const double f = pwl_eval(b.source, is_min).v;
  const double a = b.r_cable_ohm;
  const double bb = (b.alpha * b.r_cable_ohm - (b.rm_ohm - b.rd_ohm)) * is_min +
                    b.vd_volt + v_load;
  const double c = is_min * (r.r1 * is_min + b.alpha * (v_load + b.vd_volt) - f);

  if (c >= 0.0) return 0.0;  // source cannot push past its own fixed losses
  if (a == 0.0) return bb > 0.0 ? -c / bb : 0.0;
  const double disc = bb * bb - 4.0 * a * c;
  // c < 0 makes the discriminant positive and the roots straddle zero; the
  // stable form of the positive root avoids cancellation for small a.
  return -2.0 * c / (bb + std::sqrt(disc));
}

double resolved_i_min(const Branch& b, double v_load, double fs_hz) {
  if (b.i_min_amp) return *b.i_min_amp;
  if (b.is_min_amp) return min_output_current(b, *b.is_min_amp, v_load);
  if (b.l_henry)
    return min_output_current(b, ccm_min_source_current(b.source, fs_hz, *b.l_henry), v_load);
  return 0.0;
}

namespace {

double gain_at_duty(const Branch& b, double r_load, double d) {
  const double dp = 1.0 - d;
  const double c = b.r_cable_ohm + r_load;
  const double den = dp * dp * c + dp * b.rd_ohm + d * b.rm_ohm + b.rl_ohm;
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return 0.95 * dp * c / den;
}

}  // namespace

double max_gain_bound(const Branch& b, double r_load_ohm) {
  if (!(r_load_ohm > 0.0)) throw ValidationError("NonPositiveLoad", "r_load_ohm must be > 0");
  constexpr double kCap = 50.0;
  constexpr double kGolden = 0.6180339887498949;
  double lo = 1e-6, hi = 1.0 - 1e-6;
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = gain_at_duty(b, r_load_ohm, x1);
  double f2 = gain_at_duty(b, r_load_ohm, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = gain_at_duty(b, r_load_ohm, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = gain_at_duty(b, r_load_ohm, x1);
    }
  }
  const double g = std::max(f1, f2);
  return std::min(g, kCap);
}

std::vector<double> circulating_currents(const std::vector<double>& v_out,
                                         const std::vector<double>& r_cable) {
  if (v_out.size() != r_cable.size())
    throw ValidationError("SizeMismatch", "v_out and r_cable must have equal length");
  const std::size_t n = v_out.size();
  std::vector<double> ic(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const double rsum = r_cable[k] + r_cable[j];
      if (!(rsum > 0.0))
        throw ValidationError("NonPositiveLoad", "pairwise cable resistance must be > 0");
      ic[k] += (v_out[k] - v_out[j]) / rsum;
    }
  }
  return ic;
}

DiodeFit fit_diode(const std::vector<DiodeSample>& samples) {
  // Normal equations for P = vd * i + rd * i^2 over the basis (i, i^2).
  double s2 = 0, s3 = 0, s4 = 0, p1 = 0, p2 = 0;
  for (const auto& s : samples) {
    const double i = s.i_amp;
    s2 += i * i;
    s3 += i * i * i;
    s4 += i * i * i * i;
    p1 += s.p_watt * i;
    p2 += s.p_watt * i * i;
  }
  const double det = s2 * s4 - s3 * s3;
  const double scale = std::max(s2 * s4, s3 * s3);
  if (!(det > 1e-12 * std::max(scale, 1e-300)))
    throw FitError("DegenerateFit",
                   "need at least two samples at distinct nonzero currents");
  return {(s4 * p1 - s3 * p2) / det, (s2 * p2 - s3 * p1) / det};
}

double estimate_alpha(double p_loss_watt, double v_load, double r_load_ohm,
                      double rm_ohm, double r_cable_ohm, double rd_ohm, double vd_volt) {
  if (!(r_load_ohm > 0.0)) throw ValidationError("NonPositiveLoad", "r_load_ohm must be > 0");
  if (!(v_load > 0.0)) throw ValidationError("BadVoltageWindow", "v_load must be > 0");
  const double i = v_load / (3.0 * r_load_ohm);
  const double conduction = 0.5 * i * i * rm_ohm;
  const double drive = (v_load + vd_volt + i * (r_cable_ohm + rd_ohm)) * i;
  const double alpha = (p_loss_watt - conduction) / drive;
  if (alpha < 0.0)
    throw FitError("NegativeAlpha", "loss measurement is below the conduction-only floor");
  return alpha;
}

}  // namespace dcshare
