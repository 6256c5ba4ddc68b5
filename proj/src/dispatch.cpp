#include "dcshare/dispatch.hpp"

#include <algorithm>
#include <cmath>

#include "dcshare/errors.hpp"

namespace dcshare {

namespace {

void require_branch_count(const NetworkSpec& net, const OperatingPoint& point) {
  const std::size_t n = net.branches.size();
  if (point.vs.size() != n || point.v_in.size() != n || point.v_out.size() != n ||
      point.is.size() != n || point.i.size() != n)
    throw ValidationError("SizeMismatch", "operating point does not match the network's " +
                                              std::to_string(n) + " branches");
}

}  // namespace

OperatingPoint restore_vi_tightness(const NetworkSpec& net, OperatingPoint point) {
  require_branch_count(net, point);
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const double on_curve = pwl_eval(net.branches[k].source, point.is[k]).v;
    const double lift = on_curve - point.vs[k];
    point.vs[k] += lift;
    point.v_in[k] += lift;
    if (point.v_out[k] < point.v_in[k])
      throw ValidationError(
          "GainBelowOne",
          net.branches[k].name + ": lifting the source voltage onto its curve puts the " +
              "converter input above its output (" + std::to_string(point.v_in[k]) + " > " +
              std::to_string(point.v_out[k]) + "); the point is not implementable");
  }
  return point;
}

TightnessAudit audit_power_tightness(const NetworkSpec& net, const OperatingPoint& point) {
  require_branch_count(net, point);
  TightnessAudit audit;
  audit.rel_slack.reserve(net.branches.size());
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const double in_power = point.vs[k] * point.is[k];
    const double loss = branch_loss(net.branches[k], point.is[k], point.i[k], point.v_load);
    const double out_power = point.v_load * point.i[k];
    const double slack = in_power - loss - out_power;
    const double rel = in_power > 0.0 ? slack / in_power : slack;
    audit.rel_slack.push_back(rel);
    if (std::abs(rel) > audit.worst_abs) {
      audit.worst_abs = std::abs(rel);
      audit.worst_branch = net.branches[k].name;
    }
  }
  return audit;
}

std::vector<double> extract_gains(const OperatingPoint& point) {
  std::vector<double> gains;
  gains.reserve(point.v_in.size());
  for (std::size_t k = 0; k < point.v_in.size(); ++k) {
    if (!(point.v_in[k] > 1e-12))
      throw ValidationError("DivideByZeroVoltage",
                            "branch " + std::to_string(k) + " has input voltage " +
                                std::to_string(point.v_in[k]) + "; gain is undefined");
    gains.push_back(point.v_out[k] / point.v_in[k]);
  }
  return gains;
}

std::vector<double> extract_duties(const OperatingPoint& point) {
  std::vector<double> duties;
  duties.reserve(point.is.size());
  for (std::size_t k = 0; k < point.is.size(); ++k) {
    if (!(point.is[k] > 0.0) || point.i[k] < 0.0 || point.i[k] > point.is[k])
      throw ValidationError("NonPhysicalPoint",
                            "branch " + std::to_string(k) + " currents (is=" +
                                std::to_string(point.is[k]) + ", i=" +
                                std::to_string(point.i[k]) +
                                ") do not describe a boost stage in steady state");
    duties.push_back(1.0 - point.i[k] / point.is[k]);
  }
  return duties;
}

std::vector<double> quantize_duties(const std::vector<double>& duties, int counter_resolution) {
  if (counter_resolution <= 0)
    throw ValidationError("BadCounterResolution",
                          "counter resolution must be positive, got " +
                              std::to_string(counter_resolution));
  std::vector<double> out;
  out.reserve(duties.size());
  const double res = static_cast<double>(counter_resolution);
  for (double d : duties) {
    const double ticks = std::round(d * res);
    const double clamped = std::clamp(ticks, 0.0, res - 1.0);
    out.push_back(clamped / res);
  }
  return out;
}

DispatchPlan build_plan(const NetworkSpec& net, const OperatingPoint& raw,
                        int counter_resolution) {
  DispatchPlan plan;
  plan.point = restore_vi_tightness(net, raw);
  plan.audit = audit_power_tightness(net, plan.point);
  plan.gains = extract_gains(plan.point);
  plan.duties = extract_duties(plan.point);
  if (counter_resolution > 0)
    plan.duties_quantized = quantize_duties(plan.duties, counter_resolution);

  std::vector<double> cables;
  cables.reserve(net.branches.size());
  for (const auto& b : net.branches) cables.push_back(b.r_cable_ohm);
  plan.circulating = circulating_currents(plan.point.v_out, cables);

  double current_sum = 0.0;
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto breakdown =
        branch_loss_parts(net.branches[k], plan.point.is[k], plan.point.i[k], plan.point.v_load);
    plan.losses.push_back(breakdown);
    plan.total_loss += breakdown.total();
    plan.total_cost += net.branches[k].lambda * breakdown.total() +
                       net.branches[k].mu * std::abs(plan.circulating[k]);
    plan.source_power += plan.point.vs[k] * plan.point.is[k];
    current_sum += plan.point.i[k];
  }
  plan.delivered_power = plan.point.v_load * plan.point.v_load / net.r_load_ohm;
  plan.efficiency = plan.source_power > 0.0 ? plan.delivered_power / plan.source_power : 0.0;
  plan.kcl_residual = std::abs(current_sum - plan.point.v_load / net.r_load_ohm);
  return plan;
}

}  // namespace dcshare
