#include "dcshare/network.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dcshare/errors.hpp"

namespace dcshare {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(double x) { return std::isfinite(x); }

}  // namespace

PwlValue pwl_eval(const PwlCurve& curve, double i) {
  if (curve.pieces.empty()) throw ValidationError("EmptyCurve", "cannot evaluate a curve with no pieces");
  PwlValue best{curve.pieces[0].beta * i + curve.pieces[0].gamma, 0};
  for (std::size_t j = 1; j < curve.pieces.size(); ++j) {
    const double v = curve.pieces[j].beta * i + curve.pieces[j].gamma;
    if (v < best.v) best = {v, j};
  }
  return best;
}

std::vector<PwlSegment> pwl_envelope(const PwlCurve& curve) {
  if (curve.pieces.empty()) throw ValidationError("EmptyCurve", "cannot trace a curve with no pieces");
  const auto& p = curve.pieces;

  // Winner at i = 0+: lowest gamma, then steepest slope, then lowest index.
  std::size_t cur = 0;
  for (std::size_t j = 1; j < p.size(); ++j) {
    if (p[j].gamma < p[cur].gamma ||
        (p[j].gamma == p[cur].gamma && p[j].beta < p[cur].beta)) {
      cur = j;
    }
  }

  std::vector<PwlSegment> segs;
  double start = 0.0;
  for (;;) {
    // First current beyond `start` where some steeper piece undercuts `cur`.
    double best_x = kInf;
    std::size_t best_j = cur;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j == cur || p[j].beta >= p[cur].beta) continue;
      const double x = (p[j].gamma - p[cur].gamma) / (p[cur].beta - p[j].beta);
      if (x <= start) continue;
      if (x < best_x || (x == best_x && p[j].beta < p[best_j].beta)) {
        best_x = x;
        best_j = j;
      }
    }
    if (!finite(best_x)) {
      segs.push_back({cur, start, kInf});
      return segs;
    }
    segs.push_back({cur, start, best_x});
    cur = best_j;
    start = best_x;
  }
}

namespace {

void check_branch(const Branch& b, const NetworkSpec& net, ValidationReport& rep) {
  auto add = [&](const char* rule, const std::string& detail) {
    rep.violations.push_back({rule, b.name, detail});
  };
  std::ostringstream os;

  if (b.source.pieces.empty()) {
    add("EmptyCurve", "source curve has no pieces");
    return;  // nothing else about the curve is checkable
  }
  for (std::size_t j = 0; j < b.source.pieces.size(); ++j) {
    const auto& pc = b.source.pieces[j];
    if (!finite(pc.beta) || !finite(pc.gamma)) {
      add("NonFiniteValue", "curve piece " + std::to_string(j) + " is not finite");
      return;
    }
    if (pc.beta > 0.0) {
      os.str("");
      os << "piece " << j << " has positive slope " << pc.beta;
      add("NonConcaveCurve", os.str());
    }
    if (pc.gamma <= 0.0) {
      os.str("");
      os << "piece " << j << " has nonpositive intercept " << pc.gamma;
      add("NonPositiveIntercept", os.str());
    }
  }

  const double open_circuit = pwl_eval(b.source, 0.0).v;
  if (open_circuit >= net.v_load_min) {
    os.str("");
    os << "open-circuit voltage " << open_circuit << " must stay below v_load_min "
       << net.v_load_min << " for a boost-only branch";
    add("OpenCircuitAboveVloadMin", os.str());
  }

  for (auto [r, label] : {std::pair{b.rs_ohm, "rs_ohm"},
                          {b.rl_ohm, "rl_ohm"},
                          {b.rm_ohm, "rm_ohm"},
                          {b.rd_ohm, "rd_ohm"},
                          {b.r_cable_ohm, "r_cable_ohm"}}) {
    if (!finite(r) || r < 0.0) add("NegativeResistance", std::string(label) + " must be finite and >= 0");
  }
  if (!finite(b.vd_volt) || b.vd_volt < 0.0) add("BadDiodeDrop", "vd_volt must be finite and >= 0");
  if (!finite(b.alpha) || b.alpha < 0.0 || b.alpha >= 1.0) add("BadAlpha", "alpha must lie in [0, 1)");
  if (!finite(b.g_max) || b.g_max <= 1.0) add("BadGainBound", "g_max must exceed 1");
  if (!finite(b.lambda) || b.lambda <= 0.0) add("BadWeight", "lambda must be > 0");
  if (!finite(b.mu) || b.mu < 0.0) add("BadWeight", "mu must be >= 0");
  if (b.i_min_amp && (!finite(*b.i_min_amp) || *b.i_min_amp < 0.0))
    add("BadCurrentFloor", "i_min_amp must be finite and >= 0");
  if (b.is_min_amp && (!finite(*b.is_min_amp) || *b.is_min_amp < 0.0))
    add("BadCurrentFloor", "is_min_amp must be finite and >= 0");
  if (b.l_henry && (!finite(*b.l_henry) || *b.l_henry <= 0.0))
    add("BadInductance", "l_henry must be finite and > 0");

  // Redundant pieces are legal but usually a data-entry slip.
  if (rep.violations.empty()) {
    std::vector<bool> active(b.source.pieces.size(), false);
    for (const auto& seg : pwl_envelope(b.source)) active[seg.piece] = true;
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (!active[j]) {
        rep.warnings.push_back("branch " + b.name + ": piece " + std::to_string(j) +
                               " is never the envelope minimum (RedundantPiece)");
      }
    }
  }
}

}  // namespace

ValidationReport validate_network(const NetworkSpec& net) {
  ValidationReport rep;
  if (net.branches.empty()) {
    rep.violations.push_back({"EmptyNetwork", "network", "at least one branch is required"});
    return rep;
  }
  if (!finite(net.r_load_ohm) || net.r_load_ohm <= 0.0)
    rep.violations.push_back({"NonPositiveLoad", "network", "r_load_ohm must be > 0"});
  if (!finite(net.v_load_min) || net.v_load_min <= 0.0)
    rep.violations.push_back({"BadVoltageWindow", "network", "v_load_min must be > 0"});
  else if (!finite(net.v_load_max) || net.v_load_max < net.v_load_min)
    rep.violations.push_back({"BadVoltageWindow", "network", "v_load_max must be >= v_load_min"});
  if (!finite(net.fs_hz) || net.fs_hz <= 0.0)
    rep.violations.push_back({"BadFrequency", "network", "fs_hz must be > 0"});

  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& b = net.branches[k];
    if (b.name.empty())
      rep.violations.push_back({"UnnamedBranch", "branch " + std::to_string(k), "name must be nonempty"});
    for (std::size_t j = 0; j < k; ++j) {
      if (!b.name.empty() && net.branches[j].name == b.name) {
        rep.violations.push_back({"DuplicateName", b.name, "branch name appears more than once"});
        break;
      }
    }
    check_branch(b, net, rep);
  }
  return rep;
}

void require_valid(const NetworkSpec& net) {
  const auto rep = validate_network(net);
  if (!rep.ok()) {
    const auto& v = rep.violations.front();
    throw ValidationError(v.rule, v.where + ": " + v.detail +
                          (rep.violations.size() > 1
                               ? " (+" + std::to_string(rep.violations.size() - 1) + " more)"
                               : ""));
  }
}

}  // namespace dcshare
