#include "dcshare/dispatch.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "cases.hpp"
#include "dcshare/errors.hpp"
#include "dcshare/relaxation.hpp"
#include "dcshare/solver.hpp"
#include "random_networks.hpp"

using namespace dcshare;
using namespace dcshare::testing;
using Catch::Approx;

namespace {

OperatingPoint reference_point(const ReferenceCase& ref) {
  OperatingPoint p;
  p.v_load = ref.v_load;
  p.is = ref.is;
  p.i = ref.i;
  p.v_in = ref.v_in;
  p.v_out = ref.v_out;
  p.vs.resize(ref.is.size());
  for (std::size_t k = 0; k < ref.is.size(); ++k)
    p.vs[k] = ref.v_in[k] + ref.net.branches[k].rs_ohm * ref.is[k];
  return p;
}

OperatingPoint solved_point(const ReferenceCase& ref) {
  const auto rel = build_program(ref.net, {ref.v_load});
  const auto sol = solve(rel.program);
  REQUIRE(sol.status == SolveStatus::Optimal);
  return unpack_point(rel.vars, sol.x, ref.v_load);
}

}  // namespace

TEST_CASE("restoration lifts sagging source voltages onto the curve", "[dispatch][restore]") {
  const auto ref = case_pv();
  auto p = reference_point(ref);
  const double sag = 0.75;
  p.vs[1] -= sag;
  p.v_in[1] -= sag;

  const auto restored = restore_vi_tightness(ref.net, p);
  for (std::size_t k = 0; k < 3; ++k) {
    const double on_curve = pwl_eval(ref.net.branches[k].source, restored.is[k]).v;
    CHECK(restored.vs[k] == Approx(on_curve).margin(1e-12));
    CHECK(restored.vs[k] - restored.v_in[k] ==
          Approx(ref.net.branches[k].rs_ohm * restored.is[k]).margin(1e-9));
  }
  CHECK(restored.v_in[1] > p.v_in[1]);

  SECTION("idempotent") {
    const auto twice = restore_vi_tightness(ref.net, restored);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(twice.vs[k] == restored.vs[k]);
      CHECK(twice.v_in[k] == restored.v_in[k]);
    }
  }

  SECTION("objective is untouched by the lift") {
    const auto rel = build_program(ref.net, {ref.v_load});
    const auto before = rel.program.objective_value(pack_point(ref.net, rel.vars, p));
    const auto after = rel.program.objective_value(pack_point(ref.net, rel.vars, restored));
    CHECK(std::abs(before - after) <= 1e-12 * std::max(1.0, std::abs(before)));
  }
}

TEST_CASE("restoration rejects points a boost stage cannot realize", "[dispatch][restore]") {
  const auto ref = case_pv();
  auto p = reference_point(ref);
  p.v_out[0] = p.v_in[0] - 5.0;  // output below the lifted input
  try {
    restore_vi_tightness(ref.net, p);
    FAIL("expected GainBelowOne");
  } catch (const ValidationError& e) {
    CHECK(e.rule() == "GainBelowOne");
  }
}

TEST_CASE("power audit is tight at solved optima", "[dispatch][audit]") {
  for (const auto& ref : {case_pv(), case_stiff(), case_mixed()}) {
    const auto plan = build_plan(ref.net, solved_point(ref));
    INFO("worst branch " << plan.audit.worst_branch);
    CHECK(plan.audit.within(1e-6));
  }
}

TEST_CASE("power audit flags an under-reported loss", "[dispatch][audit]") {
  const auto ref = case_pv();
  auto p = reference_point(ref);
  p.is[2] *= 1.05;  // extra source current without matching output
  p.vs[2] = pwl_eval(ref.net.branches[2].source, p.is[2]).v;

  const auto audit = audit_power_tightness(ref.net, p);
  CHECK_FALSE(audit.within(1e-4));
  CHECK(audit.worst_branch == ref.net.branches[2].name);
}

TEST_CASE("gains and duties match the benchmark tables", "[dispatch][extract]") {
  SECTION("constant-voltage sources") {
    const auto ref = case_stiff();
    const auto p = reference_point(ref);
    const auto gains = extract_gains(p);
    const auto duties = extract_duties(p);
    CHECK(gains[0] == Approx(71.1108 / 45.5677).epsilon(1e-9));
    CHECK(gains[0] == Approx(1.56055).margin(5e-6));
    CHECK(duties[0] == Approx(1.0 - 5.5540 / 8.8644).epsilon(1e-9));
    CHECK(duties[0] == Approx(0.37345).margin(1e-5));
  }
  SECTION("photovoltaic sources") {
    const auto ref = case_pv();
    const auto p = reference_point(ref);
    CHECK(extract_gains(p)[2] == Approx(50.5120 / 21.0780).epsilon(1e-9));
    CHECK(extract_gains(p)[2] == Approx(2.3964).margin(5e-5));
    CHECK(extract_duties(p)[0] == Approx(0.3558).margin(5e-5));
  }
}

TEST_CASE("extraction rejects degenerate points", "[dispatch][extract]") {
  OperatingPoint p;
  p.v_load = 50.0;
  p.vs = {40.0};
  p.v_in = {0.0};
  p.v_out = {50.0};
  p.is = {5.0};
  p.i = {3.0};
  try {
    extract_gains(p);
    FAIL("expected DivideByZeroVoltage");
  } catch (const ValidationError& e) {
    CHECK(e.rule() == "DivideByZeroVoltage");
  }

  p.v_in = {25.0};
  p.i = {6.0};  // above the source current
  try {
    extract_duties(p);
    FAIL("expected NonPhysicalPoint");
  } catch (const ValidationError& e) {
    CHECK(e.rule() == "NonPhysicalPoint");
  }
}

TEST_CASE("duty quantization snaps to the counter grid", "[dispatch][quantize]") {
  const std::vector<double> duties = {0.37344, 0.0004, 0.9999};
  const auto q = quantize_duties(duties, 1000);
  CHECK(q[0] == Approx(0.373).margin(1e-15));
  CHECK(q[1] == Approx(0.0).margin(1e-15));
  CHECK(q[2] == Approx(0.999).margin(1e-15));  // clamped below 1

  CHECK_THROWS_AS(quantize_duties(duties, 0), ValidationError);
}

TEST_CASE("a full plan carries consistent totals", "[dispatch][plan]") {
  const auto ref = case_stiff();
  const auto plan = build_plan(ref.net, solved_point(ref), 1000);

  REQUIRE(plan.gains.size() == 3);
  REQUIRE(plan.duties_quantized.size() == 3);
  CHECK(plan.kcl_residual < 1e-7);
  CHECK(plan.audit.within(1e-6));

  double loss_sum = 0.0;
  for (const auto& b : plan.losses) loss_sum += b.total();
  CHECK(plan.total_loss == Approx(loss_sum).epsilon(1e-12));

  // Conservation: everything the sources inject is either lost or delivered.
  CHECK(plan.source_power ==
        Approx(plan.total_loss + plan.delivered_power).epsilon(1e-6));
  CHECK(plan.efficiency > 0.8);
  CHECK(plan.efficiency < 1.0);

  // The weighted cost matches the relaxation objective at the same point.
  const auto rel = build_program(ref.net, {ref.v_load});
  const double packed_cost =
      rel.program.objective_value(pack_point(ref.net, rel.vars, plan.point));
  CHECK(plan.total_cost == Approx(packed_cost).epsilon(1e-9));

  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(plan.gains[k] >= 1.0);
    CHECK(plan.gains[k] <= ref.net.branches[k].g_max + 1e-9);
    CHECK(plan.duties[k] > 0.0);
    CHECK(plan.duties[k] < 1.0);
    CHECK(std::abs(plan.duties_quantized[k] - plan.duties[k]) <= 0.5 / 1000 + 1e-12);
  }
}

TEST_CASE("plans from random solved networks stay physical", "[dispatch][property]") {
  for (unsigned seed = 700; seed < 712; ++seed) {
    NetworkGen gen(seed);
    const auto net = gen.network(2 + seed % 2, 3, true);
    const auto rel = build_program(net, {net.v_load_min});
    const auto sol = solve(rel.program);
    INFO("seed " << seed);
    REQUIRE(sol.status == SolveStatus::Optimal);

    const auto plan = build_plan(net, unpack_point(rel.vars, sol.x, net.v_load_min));
    CHECK(plan.audit.within(1e-5));
    CHECK(plan.kcl_residual < 1e-7);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
      CHECK(plan.gains[k] >= 1.0 - 1e-9);
      CHECK(plan.gains[k] <= net.branches[k].g_max + 1e-6);
      CHECK(plan.duties[k] >= 0.0);
      CHECK(plan.duties[k] < 1.0);
      CHECK(plan.losses[k].total() > 0.0);
    }
  }
}
