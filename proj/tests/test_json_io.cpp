#include "dcshare/json_io.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <fstream>
#include <sstream>
#include <string>

#include "cases.hpp"
#include "dcshare/dispatch.hpp"
#include "dcshare/errors.hpp"
#include "dcshare/losses.hpp"
#include "dcshare/relaxation.hpp"
#include "dcshare/solver.hpp"
#include "random_networks.hpp"

using namespace dcshare;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Exact comparison; both sides come from the same double literals.
void require_same_net(const NetworkSpec& a, const NetworkSpec& b) {
  REQUIRE(a.branches.size() == b.branches.size());
  CHECK(a.r_load_ohm == b.r_load_ohm);
  CHECK(a.v_load_min == b.v_load_min);
  CHECK(a.v_load_max == b.v_load_max);
  CHECK(a.fs_hz == b.fs_hz);
  for (std::size_t k = 0; k < a.branches.size(); ++k) {
    const Branch& x = a.branches[k];
    const Branch& y = b.branches[k];
    INFO("branch " << k);
    CHECK(x.name == y.name);
    REQUIRE(x.source.pieces.size() == y.source.pieces.size());
    for (std::size_t j = 0; j < x.source.pieces.size(); ++j) {
      CHECK(x.source.pieces[j].beta == y.source.pieces[j].beta);
      CHECK(x.source.pieces[j].gamma == y.source.pieces[j].gamma);
    }
    CHECK(x.rs_ohm == y.rs_ohm);
    CHECK(x.rl_ohm == y.rl_ohm);
    CHECK(x.rm_ohm == y.rm_ohm);
    CHECK(x.rd_ohm == y.rd_ohm);
    CHECK(x.vd_volt == y.vd_volt);
    CHECK(x.r_cable_ohm == y.r_cable_ohm);
    CHECK(x.alpha == y.alpha);
    CHECK(x.g_max == y.g_max);
    CHECK(x.lambda == y.lambda);
    CHECK(x.mu == y.mu);
    CHECK(x.i_min_amp == y.i_min_amp);
    CHECK(x.is_min_amp == y.is_min_amp);
    CHECK(x.l_henry == y.l_henry);
  }
}

/// Minimal valid document the error tests mutate.
std::string tiny_doc() {
  return R"({
    "fs_hz": 100000.0,
    "load": {"r_ohm": 4.0, "v_min": 15.0, "v_max": 25.0},
    "branches": [
      {"name": "b1", "source": {"constant_v": 10.0},
       "rs": 0.1, "r_cable": 0.05, "rl": 0.02, "rm": 0.01, "rd": 0.01,
       "vd": 0.4, "alpha": 0.002, "lambda": 1.0, "mu": 0.5, "g_max": 3.0}
    ]
  })";
}

}  // namespace

TEST_CASE("shipped documents reproduce the built-in benchmarks") {
  const struct {
    const char* file;
    NetworkSpec net;
  } cases[] = {
      {"pv_three_branch.json", testing::case_pv().net},
      {"stiff_three_branch.json", testing::case_stiff().net},
      {"mixed_three_branch.json", testing::case_mixed().net},
  };
  for (const auto& c : cases) {
    INFO(c.file);
    const auto parsed = parse_network(slurp(std::string(DCSHARE_DATA_DIR) + "/" + c.file));
    CHECK(parsed.warnings.empty());
    require_same_net(parsed.net, c.net);
  }
}

TEST_CASE("network emit then parse is the identity") {
  const NetworkSpec nets[] = {
      testing::case_pv().net,
      testing::case_stiff().net,
      testing::case_mixed().net,
      testing::NetworkGen(11).converter_network(3),
  };
  for (const auto& net : nets) {
    const auto parsed = parse_network(emit_network(net));
    CHECK(parsed.warnings.empty());
    require_same_net(parsed.net, net);
  }
}

TEST_CASE("plan emit then parse preserves every field exactly") {
  const auto ref = testing::case_stiff();
  SolveRequest req;
  req.v_load = ref.v_load;
  const auto rel = build_program(ref.net, req);
  const auto sol = solve(rel.program, {});
  REQUIRE(sol.status == SolveStatus::Optimal);
  const auto plan = build_plan(ref.net, unpack_point(rel.vars, sol.x, ref.v_load));

  const auto back = parse_plan(emit_plan(plan));
  CHECK(back.point.v_load == plan.point.v_load);
  REQUIRE(back.gains.size() == plan.gains.size());
  REQUIRE(back.duties_quantized == plan.duties_quantized);
  REQUIRE(back.circulating == plan.circulating);
  for (std::size_t k = 0; k < plan.gains.size(); ++k) {
    CHECK(back.point.vs[k] == plan.point.vs[k]);
    CHECK(back.point.v_in[k] == plan.point.v_in[k]);
    CHECK(back.point.v_out[k] == plan.point.v_out[k]);
    CHECK(back.point.is[k] == plan.point.is[k]);
    CHECK(back.point.i[k] == plan.point.i[k]);
    CHECK(back.gains[k] == plan.gains[k]);
    CHECK(back.duties[k] == plan.duties[k]);
    CHECK(back.losses[k].source_and_inductor == plan.losses[k].source_and_inductor);
    CHECK(back.losses[k].mosfet_conduction == plan.losses[k].mosfet_conduction);
    CHECK(back.losses[k].diode_conduction == plan.losses[k].diode_conduction);
    CHECK(back.losses[k].cable == plan.losses[k].cable);
    CHECK(back.losses[k].switching == plan.losses[k].switching);
  }
  CHECK(back.audit.rel_slack == plan.audit.rel_slack);
  CHECK(back.audit.worst_abs == plan.audit.worst_abs);
  CHECK(back.audit.worst_branch == plan.audit.worst_branch);
  CHECK(back.total_loss == plan.total_loss);
  CHECK(back.total_cost == plan.total_cost);
  CHECK(back.delivered_power == plan.delivered_power);
  CHECK(back.source_power == plan.source_power);
  CHECK(back.efficiency == plan.efficiency);
  CHECK(back.kcl_residual == plan.kcl_residual);
}

TEST_CASE("constant_v expands to a single flat piece") {
  const auto parsed = parse_network(tiny_doc());
  REQUIRE(parsed.net.branches[0].source.pieces.size() == 1);
  CHECK(parsed.net.branches[0].source.pieces[0].beta == 0.0);
  CHECK(parsed.net.branches[0].source.pieces[0].gamma == 10.0);
}

TEST_CASE("alpha accepts a transition-time pair") {
  std::string doc = tiny_doc();
  const auto pos = doc.find("\"alpha\": 0.002");
  doc.replace(pos, 14, "\"alpha\": {\"tau_on_s\": 10e-9, \"tau_off_s\": 30e-9}");
  const auto parsed = parse_network(doc);
  CHECK(parsed.net.branches[0].alpha == switching_alpha(10e-9, 30e-9, 100000.0));
}

TEST_CASE("missing g_max derives from the realizable gain bound") {
  std::string doc = tiny_doc();
  const auto pos = doc.find(", \"g_max\": 3.0");
  doc.erase(pos, 14);
  const auto parsed = parse_network(doc);
  Branch expect = parsed.net.branches[0];
  expect.g_max = 0.0;
  CHECK(parsed.net.branches[0].g_max == max_gain_bound(expect, 4.0));
  CHECK(parsed.net.branches[0].g_max > 1.0);
}

TEST_CASE("meta keys are allowed and ignored everywhere") {
  std::string doc = tiny_doc();
  doc.insert(doc.find("\"fs_hz\""), "\"meta\": {\"note\": \"top\"}, ");
  doc.insert(doc.find("\"name\""), "\"meta\": \"branch note\", ");
  const auto parsed = parse_network(doc);
  CHECK(parsed.warnings.empty());
  CHECK(parsed.net.branches[0].name == "b1");
}

TEST_CASE("unknown keys reject in strict mode and warn in lenient mode") {
  std::string doc = tiny_doc();
  doc.insert(doc.find("\"rs\""), "\"rss\": 0.1, ");
  CHECK_THROWS_MATCHES(parse_network(doc), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("UnknownKey") &&
                                                       ContainsSubstring("\"rss\"")));
  const auto parsed = parse_network(doc, true);
  REQUIRE(parsed.warnings.size() == 1);
  CHECK_THAT(parsed.warnings[0], ContainsSubstring("rss") && ContainsSubstring("ignored"));
  CHECK(parsed.net.branches[0].rs_ohm == 0.1);
}

TEST_CASE("both current floors at once conflict") {
  std::string doc = tiny_doc();
  doc.insert(doc.find("\"g_max\""), "\"is_min\": 0.5, \"i_min\": 0.2, ");
  CHECK_THROWS_MATCHES(parse_network(doc), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("ConflictingKeys")));
}

TEST_CASE("source with pieces and constant_v conflicts") {
  std::string doc = tiny_doc();
  const auto pos = doc.find("{\"constant_v\": 10.0}");
  doc.replace(pos, 20,
              "{\"constant_v\": 10.0, \"pieces\": [{\"beta\": 0.0, \"gamma\": 10.0}]}");
  CHECK_THROWS_MATCHES(parse_network(doc), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("ConflictingKeys")));
}

TEST_CASE("malformed text and wrong shapes carry rule ids") {
  CHECK_THROWS_MATCHES(parse_network("{nope"), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("BadJson")));
  CHECK_THROWS_MATCHES(parse_network("[1, 2]"), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("BadType")));
  CHECK_THROWS_MATCHES(
      parse_network(R"({"fs_hz": 1.0, "load": {"r_ohm": 1, "v_min": 1, "v_max": 2}})"),
      ValidationError, Catch::Matchers::MessageMatches(ContainsSubstring("MissingKey")));
  std::string doc = tiny_doc();
  const auto pos = doc.find("\"rs\": 0.1");
  doc.replace(pos, 9, "\"rs\": \"thin\"");
  CHECK_THROWS_MATCHES(parse_network(doc), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("BadType") &&
                                                       ContainsSubstring("rs")));
}

TEST_CASE("validation violations surface with their rule id") {
  std::string doc = tiny_doc();
  const auto pos = doc.find("\"constant_v\": 10.0");
  doc.replace(pos, 18, "\"constant_v\": 40.0");
  CHECK_THROWS_MATCHES(
      parse_network(doc), ValidationError,
      Catch::Matchers::MessageMatches(ContainsSubstring("OpenCircuitAboveVloadMin")));
}

TEST_CASE("plan parsing is always strict") {
  const auto ref = testing::case_pv();
  SolveRequest req;
  req.v_load = ref.v_load;
  const auto rel = build_program(ref.net, req);
  const auto sol = solve(rel.program, {});
  REQUIRE(sol.status == SolveStatus::Optimal);
  auto text = emit_plan(build_plan(ref.net, unpack_point(rel.vars, sol.x, ref.v_load)));
  text.insert(text.find("\"gains\""), "\"surplus\": 1, ");
  CHECK_THROWS_MATCHES(parse_plan(text), ValidationError,
                       Catch::Matchers::MessageMatches(ContainsSubstring("UnknownKey")));
}
