// dcshare: optimal source dispatch for a multi-converter DC bus.
//
// Subcommands:
//   solve   compute a dispatch plan for one bus voltage
//   verify  replay a plan through the averaged-circuit simulator
//   sweep   solve across a grid of bus voltages, emit CSV
//   fit     recover loss-model parameters from measurements

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>

#include "dcshare/commands.hpp"

int main(int argc, char** argv) {
  using dcshare::ReportFormat;

  CLI::App app{"optimal source dispatch for a multi-converter DC bus"};
  app.require_subcommand(1);

  dcshare::SolveArgs solve_args;
  std::string solve_mu = "on";
  auto* solve = app.add_subcommand("solve", "compute a dispatch plan");
  solve->add_option("doc", solve_args.doc_path, "network document (JSON)")->required();
  solve->add_option("--vload", solve_args.vload, "bus voltage: \"min\" or a volt value")
      ->capture_default_str();
  solve->add_option("--mu", solve_mu, "circulating-current penalty: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  solve->add_option("--tol", solve_args.tol_gap, "relative duality-gap tolerance")
      ->capture_default_str();
  solve->add_option("--out", solve_args.out_path, "write the report here instead of stdout");
  solve
      ->add_option("--format", solve_args.format, "report format: table, json, or csv")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ReportFormat>{{"table", ReportFormat::kTable},
                                              {"json", ReportFormat::kJson},
                                              {"csv", ReportFormat::kCsv}}))
      ->default_str("table");
  solve->add_flag("--lenient", solve_args.lenient, "warn on unknown document keys");

  std::string verify_doc;
  std::string verify_plan;
  bool verify_lenient = false;
  auto* verify = app.add_subcommand("verify", "replay a plan through the simulator");
  verify->add_option("doc", verify_doc, "network document (JSON)")->required();
  verify->add_option("plan", verify_plan, "dispatch plan (JSON)")->required();
  verify->add_flag("--lenient", verify_lenient, "warn on unknown document keys");

  dcshare::SweepArgs sweep_args;
  std::string sweep_mu = "on";
  auto* sweep = app.add_subcommand("sweep", "solve across a bus-voltage grid");
  sweep->add_option("doc", sweep_args.doc_path, "network document (JSON)")->required();
  sweep->add_option("--vload-grid", sweep_args.grid, "number of grid points (at least 2)")
      ->capture_default_str();
  sweep->add_option("--mu", sweep_mu, "circulating-current penalty: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  sweep->add_option("--tol", sweep_args.tol_gap, "relative duality-gap tolerance")
      ->capture_default_str();
  sweep->add_option("--out", sweep_args.out_path, "write the CSV here instead of stdout");
  sweep->add_flag("--lenient", sweep_args.lenient, "warn on unknown document keys");

  dcshare::FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "recover loss-model parameters");
  fit->add_option("--diode", fit_args.diode_csv,
                  "current,power CSV; fits forward drop and slope resistance");
  fit->add_option("--alpha", fit_args.alpha_json,
                  "single-point loss measurement (JSON); backs out the switching fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dcshare::kExitBadInput;
  }

  if (*solve) {
    solve_args.circulating = solve_mu == "on";
    return dcshare::cmd_solve(solve_args, std::cout, std::cerr);
  }
  if (*verify) {
    return dcshare::cmd_verify(verify_doc, verify_plan, verify_lenient, std::cout, std::cerr);
  }
  if (*sweep) {
    sweep_args.circulating = sweep_mu == "on";
    return dcshare::cmd_sweep(sweep_args, std::cout, std::cerr);
  }
  return dcshare::cmd_fit(fit_args, std::cout, std::cerr);
}
