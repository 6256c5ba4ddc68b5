#include "dcshare/json_io.hpp"

#include <json.hpp>
#include <initializer_list>
#include <string>

#include "dcshare/errors.hpp"
#include "dcshare/losses.hpp"

namespace dcshare {

namespace {

using nlohmann::json;

json parse_text(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw ValidationError("BadJson", "document is not valid JSON");
  }
  return doc;
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("MissingKey", path + " lacks \"" + key + "\"");
  }
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw ValidationError("BadType", path + " must be a number");
  }
  return j.get<double>();
}

double number_at(const json& obj, const std::string& key, const std::string& path) {
  return number(member(obj, key, path), path + "." + key);
}

const json& object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ValidationError("BadType", path + " must be an object");
  }
  return j;
}

/// Flags keys outside the allowed set. "meta" carries free-form annotations
/// and always passes.
void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path, bool lenient, std::vector<std::string>& warnings) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = key == "meta";
    for (const char* a : allowed) known = known || key == a;
    if (known) continue;
    const std::string text = "unknown key \"" + key + "\" at " + path;
    if (!lenient) throw ValidationError("UnknownKey", text);
    warnings.push_back(text + " (ignored)");
  }
}

PwlCurve parse_source(const json& j, const std::string& path, bool lenient,
                      std::vector<std::string>& warnings) {
  const json& src = object(j, path);
  check_keys(src, {"pieces", "constant_v"}, path, lenient, warnings);
  const bool has_pieces = src.contains("pieces");
  const bool has_const = src.contains("constant_v");
  if (has_pieces == has_const) {
    throw ValidationError(has_pieces ? "ConflictingKeys" : "MissingKey",
                          path + " needs exactly one of \"pieces\" and \"constant_v\"");
  }
  PwlCurve curve;
  if (has_const) {
    curve.pieces.push_back({0.0, number_at(src, "constant_v", path)});
    return curve;
  }
  const json& pieces = src["pieces"];
  if (!pieces.is_array() || pieces.empty()) {
    throw ValidationError("BadType", path + ".pieces must be a nonempty array");
  }
  for (std::size_t j2 = 0; j2 < pieces.size(); ++j2) {
    const std::string ppath = path + ".pieces[" + std::to_string(j2) + "]";
    const json& piece = object(pieces[j2], ppath);
    check_keys(piece, {"beta", "gamma"}, ppath, lenient, warnings);
    curve.pieces.push_back({number_at(piece, "beta", ppath), number_at(piece, "gamma", ppath)});
  }
  return curve;
}

double parse_alpha(const json& j, const std::string& path, double fs_hz, bool lenient,
                   std::vector<std::string>& warnings) {
  if (j.is_number()) return j.get<double>();
  const json& pair = object(j, path);
  check_keys(pair, {"tau_on_s", "tau_off_s"}, path, lenient, warnings);
  return switching_alpha(number_at(pair, "tau_on_s", path), number_at(pair, "tau_off_s", path),
                         fs_hz);
}

Branch parse_branch(const json& j, const std::string& path, double fs_hz, double r_load_ohm,
                    bool lenient, std::vector<std::string>& warnings) {
  const json& obj = object(j, path);
  check_keys(obj,
             {"name", "source", "rs", "r_cable", "rl", "rm", "rd", "vd", "alpha", "lambda", "mu",
              "l_h", "is_min", "i_min", "g_max"},
             path, lenient, warnings);

  Branch b;
  const json& name = member(obj, "name", path);
  if (!name.is_string()) {
    throw ValidationError("BadType", path + ".name must be a string");
  }
  b.name = name.get<std::string>();
  b.source = parse_source(member(obj, "source", path), path + ".source", lenient, warnings);
  b.rs_ohm = number_at(obj, "rs", path);
  b.r_cable_ohm = number_at(obj, "r_cable", path);
  b.rl_ohm = number_at(obj, "rl", path);
  b.rm_ohm = number_at(obj, "rm", path);
  b.rd_ohm = number_at(obj, "rd", path);
  b.vd_volt = number_at(obj, "vd", path);
  b.alpha = parse_alpha(member(obj, "alpha", path), path + ".alpha", fs_hz, lenient, warnings);
  b.lambda = number_at(obj, "lambda", path);
  b.mu = number_at(obj, "mu", path);

  if (obj.contains("l_h")) b.l_henry = number_at(obj, "l_h", path);
  if (obj.contains("is_min") && obj.contains("i_min")) {
    throw ValidationError("ConflictingKeys",
                          path + " sets both \"is_min\" and \"i_min\"; give at most one");
  }
  if (obj.contains("is_min")) b.is_min_amp = number_at(obj, "is_min", path);
  if (obj.contains("i_min")) b.i_min_amp = number_at(obj, "i_min", path);

  b.g_max = obj.contains("g_max") ? number_at(obj, "g_max", path)
                                  : max_gain_bound(b, r_load_ohm);
  return b;
}

std::vector<double> number_array(const json& obj, const std::string& key,
                                 const std::string& path) {
  const json& arr = member(obj, key, path);
  if (!arr.is_array()) {
    throw ValidationError("BadType", path + "." + key + " must be an array");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) {
    out.push_back(number(arr[k], path + "." + key + "[" + std::to_string(k) + "]"));
  }
  return out;
}

}  // namespace

ParsedNetwork parse_network(const std::string& text, bool lenient) {
  ParsedNetwork out;
  const json doc = parse_text(text);
  const json& top = object(doc, "document");
  check_keys(top, {"fs_hz", "load", "branches"}, "document", lenient, out.warnings);

  out.net.fs_hz = number_at(top, "fs_hz", "document");
  const json& load = object(member(top, "load", "document"), "load");
  check_keys(load, {"r_ohm", "v_min", "v_max"}, "load", lenient, out.warnings);
  out.net.r_load_ohm = number_at(load, "r_ohm", "load");
  out.net.v_load_min = number_at(load, "v_min", "load");
  out.net.v_load_max = number_at(load, "v_max", "load");

  const json& branches = member(top, "branches", "document");
  if (!branches.is_array() || branches.empty()) {
    throw ValidationError("BadType", "document.branches must be a nonempty array");
  }
  for (std::size_t k = 0; k < branches.size(); ++k) {
    out.net.branches.push_back(parse_branch(branches[k],
                                            "branches[" + std::to_string(k) + "]", out.net.fs_hz,
                                            out.net.r_load_ohm, lenient, out.warnings));
  }

  const auto report = validate_network(out.net);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw ValidationError(v.rule, v.where + ": " + v.detail);
  }
  return out;
}

std::string emit_network(const NetworkSpec& net) {
  json top;
  top["fs_hz"] = net.fs_hz;
  top["load"] = {{"r_ohm", net.r_load_ohm}, {"v_min", net.v_load_min}, {"v_max", net.v_load_max}};
  top["branches"] = json::array();
  for (const auto& b : net.branches) {
    json jb;
    jb["name"] = b.name;
    if (b.source.pieces.size() == 1 && b.source.pieces[0].beta == 0.0) {
      jb["source"] = {{"constant_v", b.source.pieces[0].gamma}};
    } else {
      json pieces = json::array();
      for (const auto& p : b.source.pieces) {
        pieces.push_back({{"beta", p.beta}, {"gamma", p.gamma}});
      }
      jb["source"] = {{"pieces", std::move(pieces)}};
    }
    jb["rs"] = b.rs_ohm;
    jb["r_cable"] = b.r_cable_ohm;
    jb["rl"] = b.rl_ohm;
    jb["rm"] = b.rm_ohm;
    jb["rd"] = b.rd_ohm;
    jb["vd"] = b.vd_volt;
    jb["alpha"] = b.alpha;
    jb["lambda"] = b.lambda;
    jb["mu"] = b.mu;
    if (b.l_henry) jb["l_h"] = *b.l_henry;
    if (b.is_min_amp) jb["is_min"] = *b.is_min_amp;
    if (b.i_min_amp) jb["i_min"] = *b.i_min_amp;
    jb["g_max"] = b.g_max;
    top["branches"].push_back(std::move(jb));
  }
  return top.dump(2) + "\n";
}

std::string emit_plan(const DispatchPlan& plan) {
  json j;
  j["point"] = {{"vs", plan.point.vs},   {"v_in", plan.point.v_in}, {"v_out", plan.point.v_out},
                {"is", plan.point.is},   {"i", plan.point.i},       {"v_load", plan.point.v_load}};
  j["gains"] = plan.gains;
  j["duties"] = plan.duties;
  j["duties_quantized"] = plan.duties_quantized;
  j["losses"] = json::array();
  for (const auto& l : plan.losses) {
    j["losses"].push_back({{"source_and_inductor", l.source_and_inductor},
                           {"mosfet_conduction", l.mosfet_conduction},
                           {"diode_conduction", l.diode_conduction},
                           {"cable", l.cable},
                           {"switching", l.switching}});
  }
  j["circulating"] = plan.circulating;
  j["audit"] = {{"rel_slack", plan.audit.rel_slack},
                {"worst_abs", plan.audit.worst_abs},
                {"worst_branch", plan.audit.worst_branch}};
  j["total_loss"] = plan.total_loss;
  j["total_cost"] = plan.total_cost;
  j["delivered_power"] = plan.delivered_power;
  j["source_power"] = plan.source_power;
  j["efficiency"] = plan.efficiency;
  j["kcl_residual"] = plan.kcl_residual;
  return j.dump(2) + "\n";
}

DispatchPlan parse_plan(const std::string& text) {
  const json doc = parse_text(text);
  const json& top = object(doc, "plan");
  std::vector<std::string> warnings;  // plans are machine output, always strict
  check_keys(top,
             {"point", "gains", "duties", "duties_quantized", "losses", "circulating", "audit",
              "total_loss", "total_cost", "delivered_power", "source_power", "efficiency",
              "kcl_residual"},
             "plan", false, warnings);

  DispatchPlan plan;
  const json& point = object(member(top, "point", "plan"), "plan.point");
  check_keys(point, {"vs", "v_in", "v_out", "is", "i", "v_load"}, "plan.point", false, warnings);
  plan.point.vs = number_array(point, "vs", "plan.point");
  plan.point.v_in = number_array(point, "v_in", "plan.point");
  plan.point.v_out = number_array(point, "v_out", "plan.point");
  plan.point.is = number_array(point, "is", "plan.point");
  plan.point.i = number_array(point, "i", "plan.point");
  plan.point.v_load = number_at(point, "v_load", "plan.point");

  plan.gains = number_array(top, "gains", "plan");
  plan.duties = number_array(top, "duties", "plan");
  plan.duties_quantized = number_array(top, "duties_quantized", "plan");

  const json& losses = member(top, "losses", "plan");
  if (!losses.is_array()) {
    throw ValidationError("BadType", "plan.losses must be an array");
  }
  for (std::size_t k = 0; k < losses.size(); ++k) {
    const std::string path = "plan.losses[" + std::to_string(k) + "]";
    const json& l = object(losses[k], path);
    check_keys(l, {"source_and_inductor", "mosfet_conduction", "diode_conduction", "cable",
                   "switching"},
               path, false, warnings);
    LossBreakdown parts;
    parts.source_and_inductor = number_at(l, "source_and_inductor", path);
    parts.mosfet_conduction = number_at(l, "mosfet_conduction", path);
    parts.diode_conduction = number_at(l, "diode_conduction", path);
    parts.cable = number_at(l, "cable", path);
    parts.switching = number_at(l, "switching", path);
    plan.losses.push_back(parts);
  }

  plan.circulating = number_array(top, "circulating", "plan");

  const json& audit = object(member(top, "audit", "plan"), "plan.audit");
  check_keys(audit, {"rel_slack", "worst_abs", "worst_branch"}, "plan.audit", false, warnings);
  plan.audit.rel_slack = number_array(audit, "rel_slack", "plan.audit");
  plan.audit.worst_abs = number_at(audit, "worst_abs", "plan.audit");
  const json& worst_branch = member(audit, "worst_branch", "plan.audit");
  if (!worst_branch.is_string()) {
    throw ValidationError("BadType", "plan.audit.worst_branch must be a string");
  }
  plan.audit.worst_branch = worst_branch.get<std::string>();

  plan.total_loss = number_at(top, "total_loss", "plan");
  plan.total_cost = number_at(top, "total_cost", "plan");
  plan.delivered_power = number_at(top, "delivered_power", "plan");
  plan.source_power = number_at(top, "source_power", "plan");
  plan.efficiency = number_at(top, "efficiency", "plan");
  plan.kcl_residual = number_at(top, "kcl_residual", "plan");
  return plan;
}

}  // namespace dcshare
