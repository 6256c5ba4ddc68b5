#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dcshare {

/// One affine piece v = beta * i + gamma of a source characteristic.
struct PwlPiece {
  double beta = 0.0;   // slope in V/A, nonpositive for a valid source
  double gamma = 0.0;  // intercept in V, positive
};

/// Concave nonincreasing V-I source curve: f(i) = min_j (beta_j * i + gamma_j).
/// A stiff (constant-voltage) source is a single piece with beta = 0.
struct PwlCurve {
  std::vector<PwlPiece> pieces;
};

struct PwlValue {
  double v = 0.0;
  std::size_t piece = 0;  // index of the active piece; ties keep the lowest index
};

/// Evaluates the lower envelope at current i by scanning all pieces.
PwlValue pwl_eval(const PwlCurve& curve, double i);

/// Maximal interval [i_lo, i_hi) on which one piece is the envelope argmin.
/// The last segment extends to +infinity.
struct PwlSegment {
  std::size_t piece = 0;
  double i_lo = 0.0;
  double i_hi = 0.0;
};

/// Active segments of the envelope over i >= 0, in increasing current order.
/// Pieces that never win are absent.
std::vector<PwlSegment> pwl_envelope(const PwlCurve& curve);

/// One source + boost converter + cable leg feeding the common load bus.
struct Branch {
  std::string name;
  PwlCurve source;
  double rs_ohm = 0.0;      // source series resistance
  double rl_ohm = 0.0;      // inductor ESR
  double rm_ohm = 0.0;      // switch on-resistance
  double rd_ohm = 0.0;      // diode incremental resistance
  double vd_volt = 0.0;     // diode forward drop
  double r_cable_ohm = 0.0; // converter output to load bus
  double alpha = 0.0;       // switching-loss fraction, 0 <= alpha < 1
  double g_max = 0.0;       // converter gain ceiling, > 1
  double lambda = 1.0;      // loss weight in the objective, > 0
  double mu = 0.0;          // circulating-current weight, >= 0

  // Output-current floor, either given directly or derived from the
  // source-side floor (itself derivable from the inductance) once the bus
  // voltage is known. Unset fields fall through in that order.
  std::optional<double> i_min_amp;
  std::optional<double> is_min_amp;
  std::optional<double> l_henry;
};

struct NetworkSpec {
  std::vector<Branch> branches;
  double r_load_ohm = 0.0;
  double v_load_min = 0.0;
  double v_load_max = 0.0;
  double fs_hz = 0.0;  // switching frequency shared by all converters
};

/// Electrical state of every branch plus the bus voltage.
/// vs: source terminal, v_in: converter input, v_out: converter output,
/// is: source-side current, i: injected output current.
struct OperatingPoint {
  std::vector<double> vs;
  std::vector<double> v_in;
  std::vector<double> v_out;
  std::vector<double> is;
  std::vector<double> i;
  double v_load = 0.0;
};

struct Violation {
  std::string rule;   // stable identifier, e.g. "OpenCircuitAboveVloadMin"
  std::string where;  // branch name or "network"
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

/// Structural checks every downstream operation relies on: nonempty network,
/// curves nonincreasing with positive intercepts, every branch open-circuit
/// voltage strictly below v_load_min, positive load and voltage window, field
/// ranges. Redundant curve pieces only warn. Validation mutates nothing and is
/// idempotent.
ValidationReport validate_network(const NetworkSpec& net);

/// Throws ValidationError with the first violation if the report is not clean.
void require_valid(const NetworkSpec& net);

}  // namespace dcshare
