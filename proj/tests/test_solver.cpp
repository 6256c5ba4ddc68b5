#include "dcshare/solver.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "cases.hpp"
#include "dcshare/errors.hpp"
#include "dcshare/relaxation.hpp"
#include "random_networks.hpp"

using namespace dcshare;
using namespace dcshare::testing;
using Catch::Approx;

namespace {

ConvexProgram empty_program(int n) {
  ConvexProgram prog;
  prog.n_vars = n;
  prog.var_names.resize(n);
  for (int k = 0; k < n; ++k) prog.var_names[k] = "x" + std::to_string(k);
  prog.p0 = Eigen::MatrixXd::Zero(n, n);
  prog.q0 = Eigen::VectorXd::Zero(n);
  prog.r0 = 0.0;
  return prog;
}

LinearConstraint row(std::initializer_list<double> coeffs, double rhs, ConstraintKind kind,
                     const std::string& label) {
  LinearConstraint c;
  c.a = Eigen::VectorXd(static_cast<long>(coeffs.size()));
  long k = 0;
  for (double v : coeffs) c.a[k++] = v;
  c.rhs = rhs;
  c.kind = kind;
  c.label = label;
  return c;
}

}  // namespace

TEST_CASE("unconstrained quadratic minimum is found exactly", "[solver][newton]") {
  auto prog = empty_program(1);
  prog.p0(0, 0) = 1.0;
  prog.q0[0] = -4.0;
  prog.r0 = 7.0;  // (x - 2)^2 + 3

  const auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == Approx(2.0).margin(1e-9));
  CHECK(sol.objective == Approx(3.0).margin(1e-9));
  CHECK(sol.gap == 0.0);
  CHECK(sol.kkt_stationarity < 1e-8);
}

TEST_CASE("equality-constrained quadratic lands on the projected optimum", "[solver][equality]") {
  auto prog = empty_program(2);
  prog.p0 = Eigen::MatrixXd::Identity(2, 2);
  prog.q0 = Eigen::VectorXd(2);
  prog.q0 << -4.0, -6.0;
  prog.r0 = 13.0;  // (x - 2)^2 + (y - 3)^2
  prog.equalities.push_back(row({1.0, 1.0}, 4.0, ConstraintKind::Kcl, "sum"));

  const auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == Approx(1.5).margin(1e-9));
  CHECK(sol.x[1] == Approx(2.5).margin(1e-9));
  CHECK(sol.objective == Approx(0.5).margin(1e-9));
  CHECK(sol.max_equality_residual < 1e-10);
}

TEST_CASE("active linear bound pins the solution to the boundary", "[solver][barrier]") {
  SECTION("one variable, x >= 3") {
    auto prog = empty_program(1);
    prog.p0(0, 0) = 1.0;  // x^2
    prog.inequalities.push_back(row({-1.0}, -3.0, ConstraintKind::Nonnegative, "floor"));

    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.x[0] == Approx(3.0).margin(1e-6));
    CHECK(sol.objective == Approx(9.0).margin(1e-5));
    CHECK(sol.x[0] >= 3.0 - 1e-12);  // interior-point iterates never cross
    CHECK(sol.kkt_stationarity < 1e-4);
  }

  SECTION("equality plus active inequality") {
    auto prog = empty_program(2);
    prog.p0 = Eigen::MatrixXd::Identity(2, 2);
    prog.q0 = Eigen::VectorXd(2);
    prog.q0 << -4.0, -6.0;
    prog.r0 = 13.0;
    prog.equalities.push_back(row({1.0, 1.0}, 4.0, ConstraintKind::Kcl, "sum"));
    prog.inequalities.push_back(row({1.0, 0.0}, 1.0, ConstraintKind::GainCeiling, "cap"));

    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.x[0] == Approx(1.0).margin(1e-6));
    CHECK(sol.x[1] == Approx(3.0).margin(1e-6));
    CHECK(sol.objective == Approx(1.0).margin(1e-5));
  }
}

TEST_CASE("active quadratic constraint is handled", "[solver][quadratic]") {
  auto prog = empty_program(2);
  prog.q0 = Eigen::VectorXd(2);
  prog.q0 << 1.0, 1.0;  // minimize x + y
  QuadConstraint ball;
  ball.p = Eigen::MatrixXd::Identity(2, 2);
  ball.q = Eigen::VectorXd::Zero(2);
  ball.r = -2.0;  // x^2 + y^2 <= 2
  ball.kind = ConstraintKind::PowerBalance;
  ball.label = "ball";
  prog.quadratics.push_back(ball);

  const auto sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == Approx(-1.0).margin(1e-5));
  CHECK(sol.x[1] == Approx(-1.0).margin(1e-5));
  CHECK(sol.objective == Approx(-2.0).margin(1e-5));
  CHECK(sol.x.squaredNorm() <= 2.0 + 1e-12);
}

TEST_CASE("contradictory constraints are certified infeasible", "[solver][infeasible]") {
  auto prog = empty_program(1);
  prog.equalities.push_back(row({1.0}, 1.0, ConstraintKind::Kcl, "pin"));
  prog.inequalities.push_back(row({-1.0}, -5.0, ConstraintKind::CurrentFloor, "floor"));

  SECTION("feasibility search reports the violated row") {
    const auto ph = solve_phase1(prog);
    CHECK_FALSE(ph.feasible);
    CHECK(ph.worst == Approx(4.0).margin(1e-6));
    CHECK(ph.worst_label == "floor");
  }

  SECTION("full solve returns the Infeasible status") {
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Infeasible);
    CHECK(sol.message.find("floor") != std::string::npos);
  }
}

TEST_CASE("feasibility search finds a strict interior point of a benchmark program",
          "[solver][phase1]") {
  const auto ref = case_pv();
  const auto rel = build_program(ref.net, {ref.v_load});

  const auto ph = solve_phase1(rel.program);
  REQUIRE(ph.feasible);
  CHECK(ph.margin >= 1e-6);

  const auto res = rel.program.constraint_residuals(ph.x);
  CHECK(res.max_inequality_violation < 0.0);
  CHECK(res.max_equality_abs < 1e-8);
}

TEST_CASE("benchmark programs solve to feasible optima", "[solver][benchmark]") {
  for (const auto& ref : {case_pv(), case_stiff(), case_mixed()}) {
    const auto rel = build_program(ref.net, {ref.v_load});
    const auto sol = solve(rel.program);
    INFO("case with " << ref.net.branches.size() << " branches, v_load " << ref.v_load);
    REQUIRE(sol.status == SolveStatus::Optimal);

    const auto res = rel.program.constraint_residuals(sol.x);
    CHECK(res.max_equality_abs < 1e-7);
    CHECK(res.max_inequality_violation < 1e-9);
    CHECK(sol.kkt_stationarity < 1e-3);
    CHECK(sol.objective > 0.0);

    OperatingPoint ref_point;
    ref_point.v_load = ref.v_load;
    ref_point.is = ref.is;
    ref_point.i = ref.i;
    ref_point.v_in = ref.v_in;
    ref_point.v_out = ref.v_out;
    ref_point.vs.resize(ref.is.size());
    for (std::size_t k = 0; k < ref.is.size(); ++k)
      ref_point.vs[k] = ref.v_in[k] + ref.net.branches[k].rs_ohm * ref.is[k];
    const auto packed = pack_point(ref.net, rel.vars, ref_point);
    const double ref_cost = rel.program.objective_value(packed);
    CHECK(sol.objective <= ref_cost + 0.01);
  }
}

TEST_CASE("solves are deterministic", "[solver][determinism]") {
  const auto ref = case_stiff();
  const auto rel = build_program(ref.net, {ref.v_load});

  const auto a = solve(rel.program);
  const auto b = solve(rel.program);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  REQUIRE(a.x.size() == b.x.size());
  for (long k = 0; k < a.x.size(); ++k) CHECK(a.x[k] == b.x[k]);
  CHECK(a.objective == b.objective);
  CHECK(a.newton_iters == b.newton_iters);
}

TEST_CASE("exhausted iteration budget is reported, not hidden", "[solver][budget]") {
  const auto ref = case_pv();
  const auto rel = build_program(ref.net, {ref.v_load});

  SolverSettings tight;
  tight.max_iters = 1;
  const auto sol = solve(rel.program, tight);
  CHECK(sol.status == SolveStatus::IterLimit);
  CHECK(sol.message.find("budget") != std::string::npos);
  CHECK(sol.x.size() == rel.program.n_vars);
}

TEST_CASE("trace stream receives progress lines when requested", "[solver][trace]") {
  auto prog = empty_program(1);
  prog.p0(0, 0) = 1.0;
  prog.inequalities.push_back(row({-1.0}, -3.0, ConstraintKind::Nonnegative, "floor"));

  std::ostringstream trace;
  SolverSettings st;
  st.trace = &trace;
  const auto sol = solve(prog, st);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(trace.str().find("barrier round=") != std::string::npos);
  CHECK(trace.str().find("gap=") != std::string::npos);
}

TEST_CASE("random gate-passing networks solve cleanly", "[solver][property]") {
  for (unsigned seed = 500; seed < 510; ++seed) {
    NetworkGen gen(seed);
    const auto net = gen.network(2 + seed % 3, 3, true);
    const double v_load = net.v_load_min;
    const auto rel = build_program(net, {v_load});
    const auto sol = solve(rel.program);
    INFO("seed " << seed);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const auto res = rel.program.constraint_residuals(sol.x);
    CHECK(res.max_equality_abs < 1e-7);
    CHECK(res.max_inequality_violation < 1e-9);
  }
}
