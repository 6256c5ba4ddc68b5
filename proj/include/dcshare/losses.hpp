#pragma once

#include <vector>

#include "dcshare/network.hpp"

namespace dcshare {

/// Lumped resistances of one branch's averaged conduction model.
///   r1 = Rs + R_L + R_M + alpha * R_D
///   r2 = |R_M - R_D| / 2 + alpha^2 * R / 2
///   r3 = (R - |R_M - R_D|) / 2
struct EffectiveResistances {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
};

EffectiveResistances effective_resistances(const Branch& b);

/// The branch loss is jointly convex in (is, i) iff both margins are nonnegative.
struct GateResult {
  bool pass = false;
  double margin1 = 0.0;  // r1 - r2
  double margin2 = 0.0;  // r3
};

GateResult convexity_gate(const Branch& b);
std::vector<GateResult> convexity_gate(const NetworkSpec& net);

/// Throws GateError naming the first failing branch.
void require_convex(const NetworkSpec& net);

/// Time-averaged branch loss, component by component:
///   source_and_inductor = is^2 (Rs + R_L)
///   mosfet_conduction   = is (is - i) R_M
///   diode_conduction    = V_D i + is i R_D
///   cable               = i^2 R
///   switching           = alpha ((V_load + V_D) is + is i R + is^2 R_D)
struct LossBreakdown {
  double source_and_inductor = 0.0;
  double mosfet_conduction = 0.0;
  double diode_conduction = 0.0;
  double cable = 0.0;
  double switching = 0.0;
  double total() const {
    return source_and_inductor + mosfet_conduction + diode_conduction + cable + switching;
  }
};

/// Same loss in the completed-square form used by the convex program:
///   is^2 (r1 - r2) + (i + alpha is)^2 R/2 + (is - s i)^2 |R_M - R_D|/2
///   + alpha V_load is + V_D (i + alpha is) + i^2 r3,  s = sign(R_M - R_D).
/// Agrees with LossBreakdown::total() identically.
double branch_loss(const Branch& b, double is, double i, double v_load);
LossBreakdown branch_loss_parts(const Branch& b, double is, double i, double v_load);

/// alpha = (tau_on + tau_off) * fs / 2. Rejects parameters outside [0, 1).
double switching_alpha(double tau_on_s, double tau_off_s, double fs_hz);

/// Source current floor keeping the inductor in continuous conduction:
/// is_min = 5 f(0) / (fs L). Throws FitError("MissingInductance") without L.
double ccm_min_source_current(const PwlCurve& curve, double fs_hz, double l_henry);

/// Output current floor induced by a source-side floor: with is fixed at
/// is_min, the loss-tight power balance f(is) is = Q(is, i) + v_load i is a
/// quadratic in i; the positive root (when one exists) is the floor.
/// Returns 0 for is_min = 0 or when no positive root exists.
double min_output_current(const Branch& b, double is_min, double v_load);

/// Output floor resolved from whichever of i_min / is_min / l_henry is set.
double resolved_i_min(const Branch& b, double v_load, double fs_hz);

/// Tight upper bound on the realizable converter gain over duty cycles,
///   g(D) = 0.95 D' (R + R_load) / (D'^2 (R + R_load) + D' R_D + D R_M + R_L),
/// maximized over D in (0, 1) and capped at 50 for near-lossless branches.
double max_gain_bound(const Branch& b, double r_load_ohm);

/// Pairwise circulating currents between converter outputs:
/// ic_k = sum_{j != k} (v_out_k - v_out_j) / (R_k + R_j). Sums to ~0.
std::vector<double> circulating_currents(const std::vector<double>& v_out,
                                         const std::vector<double>& r_cable);

/// Least-squares fit of diode conduction loss P(i) = V_D i + R_D i^2.
struct DiodeFit {
  double vd_volt = 0.0;
  double rd_ohm = 0.0;
};

struct DiodeSample {
  double i_amp = 0.0;
  double p_watt = 0.0;
};

/// Throws FitError("DegenerateFit") when the samples cannot pin both
/// parameters (fewer than two distinct nonzero currents).
DiodeFit fit_diode(const std::vector<DiodeSample>& samples);

/// Switching-loss fraction backed out of a single loss measurement taken at
/// i_test = v_load / (3 r_load) with the converter near unit duty:
///   alpha = (p_loss - i^2 R_M / 2) / ((v_load + V_D + i (R + R_D)) i).
/// Throws FitError("NegativeAlpha") when the measurement is below the
/// conduction-only floor.
double estimate_alpha(double p_loss_watt, double v_load, double r_load_ohm,
                      double rm_ohm, double r_cable_ohm, double rd_ohm, double vd_volt);

}  // namespace dcshare
