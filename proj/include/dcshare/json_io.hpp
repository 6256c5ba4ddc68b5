#pragma once

#include <string>
#include <vector>

#include "dcshare/dispatch.hpp"
#include "dcshare/network.hpp"

namespace dcshare {

struct ParsedNetwork {
  NetworkSpec net;
  std::vector<std::string> warnings;  // lenient-mode unknown keys, in document order
};

/// Parses a network document of the form
///   { "fs_hz": ..., "load": {"r_ohm", "v_min", "v_max"},
///     "branches": [ {"name", "source", "rs", "r_cable", "rl", "rm", "rd",
///                    "vd", "alpha", "lambda", "mu",
///                    "l_h"?, "is_min"? | "i_min"?, "g_max"?}, ... ] }
/// where "source" is {"pieces": [{"beta", "gamma"}, ...]} or {"constant_v": v}
/// and "alpha" is a number or {"tau_on_s", "tau_off_s"} converted through the
/// switching frequency. A missing "g_max" derives from the realizable-gain
/// bound. "meta" keys are allowed anywhere and ignored.
///
/// Unknown keys throw ValidationError("UnknownKey") in strict mode and become
/// warnings in lenient mode. Both current floors at once throw
/// ValidationError("ConflictingKeys"). The assembled network is validated;
/// the first violation is rethrown as ValidationError with its rule id.
ParsedNetwork parse_network(const std::string& text, bool lenient = false);

/// Canonical document for a network: alpha in its number form, g_max always
/// explicit. parse_network(emit_network(net)).net reproduces net.
std::string emit_network(const NetworkSpec& net);

/// Machine form of a plan. parse_plan(emit_plan(p)) equals p field for field;
/// doubles survive the round trip exactly.
std::string emit_plan(const DispatchPlan& plan);
DispatchPlan parse_plan(const std::string& text);

}  // namespace dcshare
