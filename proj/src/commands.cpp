#include "dcshare/commands.hpp"

#include <json.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dcshare/dispatch.hpp"
#include "dcshare/errors.hpp"
#include "dcshare/json_io.hpp"
#include "dcshare/losses.hpp"
#include "dcshare/oracle.hpp"
#include "dcshare/relaxation.hpp"
#include "dcshare/solver.hpp"

namespace dcshare {

namespace {

using nlohmann::json;

bool read_file(const std::string& path, std::string& text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  text = buf.str();
  return true;
}

std::string sig6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string full(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

/// Left-aligns the first column, right-aligns the rest to the widest cell.
void print_table(const std::vector<std::vector<std::string>>& rows, std::ostream& out) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      const int pad = static_cast<int>(width[c] - row[c].size());
      if (c == 0) {
        out << row[c] << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << row[c];
      }
    }
    out << "\n";
  }
}

void report_table(const NetworkSpec& net, const DispatchPlan& plan, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"branch", "is", "v_in", "v_out", "i", "gain", "duty", "loss"});
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    rows.push_back({net.branches[k].name, sig6(plan.point.is[k]), sig6(plan.point.v_in[k]),
                    sig6(plan.point.v_out[k]), sig6(plan.point.i[k]), sig6(plan.gains[k]),
                    sig6(plan.duties[k]), sig6(plan.losses[k].total())});
  }
  print_table(rows, out);
  out << "\n";
  print_table({{"v_load", sig6(plan.point.v_load)},
               {"total_loss", sig6(plan.total_loss)},
               {"total_cost", sig6(plan.total_cost)},
               {"delivered_power", sig6(plan.delivered_power)},
               {"source_power", sig6(plan.source_power)},
               {"efficiency", sig6(plan.efficiency)},
               {"kcl_residual", sig6(plan.kcl_residual)},
               {"worst_slack", sig6(plan.audit.worst_abs) + " (" + plan.audit.worst_branch + ")"}},
              out);
}

void report_csv(const NetworkSpec& net, const DispatchPlan& plan, std::ostream& out) {
  out << "branch,is,v_in,v_out,i,gain,duty,loss\n";
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    out << net.branches[k].name << ',' << full(plan.point.is[k]) << ','
        << full(plan.point.v_in[k]) << ',' << full(plan.point.v_out[k]) << ','
        << full(plan.point.i[k]) << ',' << full(plan.gains[k]) << ',' << full(plan.duties[k])
        << ',' << full(plan.losses[k].total()) << "\n";
  }
}

/// Writes the report to out_path when set, the stream otherwise.
int deliver(const std::string& body, const std::string& out_path, std::ostream& out,
            std::ostream& err) {
  if (out_path.empty()) {
    out << body;
    return kExitOk;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file || !(file << body) || !file.flush()) {
    err << "error: cannot write " << out_path << "\n";
    return kExitBadInput;
  }
  return kExitOk;
}

int load_network(const std::string& path, bool lenient, NetworkSpec& net, std::ostream& err) {
  std::string text;
  if (!read_file(path, text)) {
    err << "error: cannot read " << path << "\n";
    return kExitBadInput;
  }
  try {
    auto parsed = parse_network(text, lenient);
    print_warnings(parsed.warnings, err);
    net = std::move(parsed.net);
  } catch (const ValidationError& e) {
    err << "error: " << path << ": " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitOk;
}

/// "min" or a number inside the document's bus-voltage window.
int pick_vload(const NetworkSpec& net, const std::string& flag, double& v, std::ostream& err) {
  if (flag == "min") {
    v = net.v_load_min;
    return kExitOk;
  }
  char* end = nullptr;
  v = std::strtod(flag.c_str(), &end);
  if (end == flag.c_str() || *end != '\0' || !std::isfinite(v)) {
    err << "error: --vload wants \"min\" or a number, got \"" << flag << "\"\n";
    return kExitBadInput;
  }
  if (v < net.v_load_min - 1e-9 || v > net.v_load_max + 1e-9) {
    err << "error: --vload " << sig6(v) << " outside the document window ["
        << sig6(net.v_load_min) << ", " << sig6(net.v_load_max) << "]\n";
    return kExitBadInput;
  }
  return kExitOk;
}

struct SolveOutcome {
  int exit = kExitOk;
  DispatchPlan plan;
};

SolveOutcome solve_once(const NetworkSpec& net, double v_load, bool circulating, double tol_gap,
                        std::ostream& err) {
  SolveOutcome r;
  SolveRequest req;
  req.v_load = v_load;
  req.include_circulating = circulating;
  const auto rel = build_program(net, req);
  SolverSettings settings;
  settings.tol_gap = tol_gap;
  const auto sol = solve(rel.program, settings);
  if (sol.status == SolveStatus::Infeasible) {
    err << "error: infeasible: " << sol.message << "\n";
    r.exit = kExitInfeasible;
    return r;
  }
  if (sol.status != SolveStatus::Optimal) {
    err << "error: " << to_string(sol.status) << ": " << sol.message << "\n";
    r.exit = kExitNumerical;
    return r;
  }
  r.plan = build_plan(net, unpack_point(rel.vars, sol.x, v_load));
  if (!r.plan.audit.within(1e-6)) {
    err << "error: tightness audit failed: slack " << sig6(r.plan.audit.worst_abs)
        << " on branch " << r.plan.audit.worst_branch << "\n";
    r.exit = kExitNumerical;
  }
  return r;
}

}  // namespace

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  NetworkSpec net;
  if (const int rc = load_network(args.doc_path, args.lenient, net, err)) return rc;
  try {
    require_convex(net);
  } catch (const GateError& e) {
    err << "error: " << e.what() << "\n";
    return kExitGate;
  }
  double v_load = 0.0;
  if (const int rc = pick_vload(net, args.vload, v_load, err)) return rc;

  const auto r = solve_once(net, v_load, args.circulating, args.tol_gap, err);
  if (r.exit != kExitOk) return r.exit;

  std::ostringstream body;
  switch (args.format) {
    case ReportFormat::kTable:
      report_table(net, r.plan, body);
      break;
    case ReportFormat::kJson:
      body << emit_plan(r.plan);
      break;
    case ReportFormat::kCsv:
      report_csv(net, r.plan, body);
      break;
  }
  return deliver(body.str(), args.out_path, out, err);
}

int cmd_verify(const std::string& doc_path, const std::string& plan_path, bool lenient,
               std::ostream& out, std::ostream& err) {
  NetworkSpec net;
  if (const int rc = load_network(doc_path, lenient, net, err)) return rc;

  std::string text;
  if (!read_file(plan_path, text)) {
    err << "error: cannot read " << plan_path << "\n";
    return kExitBadInput;
  }
  DispatchPlan plan;
  try {
    plan = parse_plan(text);
  } catch (const ValidationError& e) {
    err << "error: " << plan_path << ": " << e.what() << "\n";
    return kExitBadInput;
  }

  SteadyState sim;
  try {
    sim = steady_state(net, plan.gains);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const OracleError& e) {
    err << "error: " << e.what() << "\n";
    return kExitOracle;
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"entry", "plan", "simulated"});
  rows.push_back({"v_load", sig6(plan.point.v_load), sig6(sim.point.v_load)});
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const std::string suffix = "[" + std::to_string(k) + "]";
    rows.push_back({"is" + suffix, sig6(plan.point.is[k]), sig6(sim.point.is[k])});
    rows.push_back({"i" + suffix, sig6(plan.point.i[k]), sig6(sim.point.i[k])});
    rows.push_back({"v_in" + suffix, sig6(plan.point.v_in[k]), sig6(sim.point.v_in[k])});
    rows.push_back({"v_out" + suffix, sig6(plan.point.v_out[k]), sig6(sim.point.v_out[k])});
  }
  print_table(rows, out);

  const auto dev = compare_points(plan.point, sim.point);
  out << "\nworst relative deviation " << sig6(dev.worst) << " at " << dev.where << "\n";
  return dev.worst <= 1e-3 ? kExitOk : kExitMismatch;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  NetworkSpec net;
  if (const int rc = load_network(args.doc_path, args.lenient, net, err)) return rc;
  if (args.grid < 2) {
    err << "error: --vload-grid wants at least 2 points, got " << args.grid << "\n";
    return kExitBadInput;
  }
  try {
    require_convex(net);
  } catch (const GateError& e) {
    err << "error: " << e.what() << "\n";
    return kExitGate;
  }

  std::ostringstream body;
  body << "v_load,cost";
  for (std::size_t k = 0; k < net.branches.size(); ++k) body << ",i_" << k + 1;
  body << "\n";

  int solved = 0;
  double prev_cost = 0.0;
  bool have_prev = false;
  for (int j = 0; j < args.grid; ++j) {
    const double v = net.v_load_min + (net.v_load_max - net.v_load_min) *
                                          static_cast<double>(j) /
                                          static_cast<double>(args.grid - 1);
    const auto r = solve_once(net, v, args.circulating, args.tol_gap, err);
    if (r.exit != kExitOk) {
      body << full(v) << ",FAILED";
      for (std::size_t k = 0; k < net.branches.size(); ++k) body << ',';
      body << "\n";
      continue;
    }
    ++solved;
    body << full(v) << ',' << full(r.plan.total_cost);
    for (const double i : r.plan.point.i) body << ',' << full(i);
    body << "\n";
    if (have_prev && r.plan.total_cost < prev_cost - 1e-9 * std::max(1.0, std::abs(prev_cost))) {
      err << "warning: cost decreases toward v_load " << sig6(v) << "\n";
    }
    prev_cost = r.plan.total_cost;
    have_prev = true;
  }
  if (solved == 0) {
    err << "error: every sweep row failed\n";
    return kExitNumerical;
  }
  return deliver(body.str(), args.out_path, out, err);
}

namespace {

int fit_diode_csv(const std::string& path, std::ostream& out, std::ostream& err) {
  std::string text;
  if (!read_file(path, text)) {
    err << "error: cannot read " << path << "\n";
    return kExitBadInput;
  }
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) || line.substr(0, line.find_last_not_of("\r") + 1) !=
                                        "current,power") {
    err << "error: " << path << ": first line must be the header current,power\n";
    return kExitBadInput;
  }
  std::vector<DiodeSample> samples;
  for (int lineno = 2; std::getline(lines, line); ++lineno) {
    const auto end = line.find_last_not_of("\r\n \t");
    if (end == std::string::npos) continue;  // blank line
    line.resize(end + 1);
    const auto comma = line.find(',');
    char* tail = nullptr;
    DiodeSample s;
    s.i_amp = std::strtod(line.c_str(), &tail);
    if (comma == std::string::npos || tail != line.c_str() + comma) {
      err << "error: " << path << " line " << lineno << ": want current,power\n";
      return kExitBadInput;
    }
    s.p_watt = std::strtod(line.c_str() + comma + 1, &tail);
    if (tail != line.c_str() + line.size()) {
      err << "error: " << path << " line " << lineno << ": want current,power\n";
      return kExitBadInput;
    }
    samples.push_back(s);
  }
  try {
    const auto fit = fit_diode(samples);
    json j;
    j["vd"] = fit.vd_volt;
    j["rd"] = fit.rd_ohm;
    out << j.dump(2) << "\n";
  } catch (const FitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFit;
  }
  return kExitOk;
}

int fit_alpha_json(const std::string& path, std::ostream& out, std::ostream& err) {
  std::string text;
  if (!read_file(path, text)) {
    err << "error: cannot read " << path << "\n";
    return kExitBadInput;
  }
  double p_loss = 0, v_load = 0, r_load = 0, rm = 0, r_cable = 0, rd = 0, vd = 0;
  try {
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw ValidationError("BadJson", "measurement is not a JSON object");
    }
    const auto want = [&](const char* key) -> double {
      const auto it = doc.find(key);
      if (it == doc.end()) {
        throw ValidationError("MissingKey", std::string("measurement lacks \"") + key + "\"");
      }
      if (!it->is_number()) {
        throw ValidationError("BadType", std::string("measurement.") + key + " must be a number");
      }
      return it->get<double>();
    };
    for (const auto& [key, value] : doc.items()) {
      (void)value;
      if (key != "p_loss" && key != "v_load" && key != "r_load" && key != "rm" &&
          key != "r_cable" && key != "rd" && key != "vd" && key != "meta") {
        throw ValidationError("UnknownKey", "unknown key \"" + key + "\" in measurement");
      }
    }
    p_loss = want("p_loss");
    v_load = want("v_load");
    r_load = want("r_load");
    rm = want("rm");
    r_cable = want("r_cable");
    rd = want("rd");
    vd = want("vd");
  } catch (const ValidationError& e) {
    err << "error: " << path << ": " << e.what() << "\n";
    return kExitBadInput;
  }
  try {
    json j;
    j["alpha"] = estimate_alpha(p_loss, v_load, r_load, rm, r_cable, rd, vd);
    out << j.dump(2) << "\n";
  } catch (const FitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFit;
  }
  return kExitOk;
}

}  // namespace

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  const bool diode = !args.diode_csv.empty();
  const bool alpha = !args.alpha_json.empty();
  if (diode == alpha) {
    err << "error: give exactly one of --diode and --alpha\n";
    return kExitBadInput;
  }
  return diode ? fit_diode_csv(args.diode_csv, out, err)
               : fit_alpha_json(args.alpha_json, out, err);
}

}  // namespace dcshare
