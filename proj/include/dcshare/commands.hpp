#pragma once

#include <iosfwd>
#include <string>

namespace dcshare {

/// Exit codes shared by every subcommand. These are the scripting contract;
/// success prints no status text.
enum ExitCode : int {
  kExitOk = 0,          // solved with a tight audit, or verified within tolerance
  kExitMismatch = 1,    // verification deviation above tolerance
  kExitInfeasible = 2,  // constraint set has no strictly feasible point
  kExitGate = 3,        // loss model failed the convexity gate
  kExitBadInput = 4,    // unreadable, malformed, or invalid input
  kExitNumerical = 5,   // solver breakdown, iteration limit, or loose audit
  kExitOracle = 6,      // simulator could not settle the network
  kExitFit = 7,         // parameter fit failed
};

enum class ReportFormat { kTable, kJson, kCsv };

struct SolveArgs {
  std::string doc_path;
  std::string vload = "min";  // "min" or a voltage inside the document's window
  bool circulating = true;    // weigh circulating currents in the objective
  double tol_gap = 1e-7;
  std::string out_path;       // empty: write the report to `out`
  ReportFormat format = ReportFormat::kTable;
  bool lenient = false;
};

/// Validates, gates, builds, solves, tightens, audits, reports. Data goes to
/// the output stream (or out_path), diagnostics to the error stream.
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

/// Re-simulates the plan's gains from scratch and compares the settled point
/// against the plan. Success means the worst relative deviation is at most
/// 1e-3.
int cmd_verify(const std::string& doc_path, const std::string& plan_path, bool lenient,
               std::ostream& out, std::ostream& err);

struct SweepArgs {
  std::string doc_path;
  int grid = 5;  // evenly spaced bus voltages across the document's window
  bool circulating = true;
  double tol_gap = 1e-7;
  std::string out_path;
  bool lenient = false;
};

/// CSV of (v_load, optimal cost, per-branch injected currents), ascending in
/// v_load. A failing row reads FAILED and the sweep continues; a decreasing
/// cost column is reported on the error stream.
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

struct FitArgs {
  std::string diode_csv;   // CSV with header current,power
  std::string alpha_json;  // {"p_loss","v_load","r_load","rm","r_cable","rd","vd"}
};

/// Fits diode parameters or the switching-loss fraction; exactly one input
/// path must be set. Emits the fitted parameters as JSON.
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);

}  // namespace dcshare
