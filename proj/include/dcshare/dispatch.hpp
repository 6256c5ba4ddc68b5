#ifndef DCSHARE_DISPATCH_HPP
#define DCSHARE_DISPATCH_HPP

#include <string>
#include <vector>

#include "dcshare/losses.hpp"
#include "dcshare/network.hpp"

namespace dcshare {

/// Lifts each branch's source voltage onto its curve: vs_k becomes f_k(is_k)
/// and v_in_k moves by the same amount, preserving the input loop equation.
/// The cost of a point does not depend on vs or v_in, so this never changes
/// the objective. Throws ValidationError (GainBelowOne) if a lifted input
/// voltage ends up above its output voltage, since a boost stage cannot
/// step down.
OperatingPoint restore_vi_tightness(const NetworkSpec& net, OperatingPoint point);

/// Per-branch relative power-balance slack (vs*is - loss - v_load*i) / (vs*is).
/// Zero means the branch's power accounting is exact; positive slack means the
/// point under-reports loss and is not a faithful converter operating point.
struct TightnessAudit {
  std::vector<double> rel_slack;
  double worst_abs = 0.0;
  std::string worst_branch;

  bool within(double tol) const { return worst_abs <= tol; }
};

TightnessAudit audit_power_tightness(const NetworkSpec& net, const OperatingPoint& point);

/// Voltage gains v_out/v_in. Throws ValidationError (DivideByZeroVoltage)
/// when an input voltage is too small to divide by.
std::vector<double> extract_gains(const OperatingPoint& point);

/// Boost duty ratios 1 - i/is from the averaged current transfer. Throws
/// ValidationError (NonPhysicalPoint) when currents are outside 0 <= i <= is
/// or a source current is not positive.
std::vector<double> extract_duties(const OperatingPoint& point);

/// Rounds each duty ratio to the nearest multiple of 1/counter_resolution,
/// clamped to [0, 1). Resolution must be positive.
std::vector<double> quantize_duties(const std::vector<double>& duties, int counter_resolution);

/// Everything a caller needs to act on a solved operating point.
struct DispatchPlan {
  OperatingPoint point;  // tightness-restored
  std::vector<double> gains;
  std::vector<double> duties;
  std::vector<double> duties_quantized;  // empty unless quantization was requested
  std::vector<LossBreakdown> losses;
  std::vector<double> circulating;
  TightnessAudit audit;
  double total_loss = 0.0;       // sum of branch losses, unweighted
  double total_cost = 0.0;       // weighted loss plus weighted circulating magnitudes
  double delivered_power = 0.0;  // v_load^2 / r_load
  double source_power = 0.0;     // sum of vs*is
  double efficiency = 0.0;       // delivered / source
  double kcl_residual = 0.0;     // |sum(i) - v_load / r_load|
};

/// Restores tightness, audits it, and derives gains, duties, losses, and
/// totals. counter_resolution > 0 additionally fills duties_quantized.
DispatchPlan build_plan(const NetworkSpec& net, const OperatingPoint& raw,
                        int counter_resolution = 0);

}  // namespace dcshare

#endif
