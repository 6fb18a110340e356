#include <algorithm>
#include <functional>
#include <map>
#include <regex>
#include <set>

#include "cosma/encoder.hpp"
#include "cosma/error.hpp"
#include "cosma/pipeline.hpp"
#include "cosma/simulator.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cosma;

namespace {

DataflowGraph one_op() {
  GraphDescription d;
  d.name = "one_op";
  d.tensors = {{"a0", 4, TensorKind::GraphInput}, {"a1", 8, TensorKind::GraphOutput}};
  d.operators = {{"op1", {"a0"}, {"a1"}, 0}};
  return DataflowGraph::build(d);
}

std::set<std::string> names(const MilpInstance& m) {
  std::set<std::string> out;
  for (const auto& v : m.variables()) out.insert(v.name);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return ErrorCode::ParseError;
}

Assignment solved(const DataflowGraph& g, const Encoding& enc) {
  SolveResult r = solve_internal(g, enc, support::internal_config());
  REQUIRE(r.has_solution());
  return r.assignment;
}

}  // namespace

TEST_CASE("single operator, minimum-peak mode: hand-counted instance") {
  DataflowGraph g = one_op();
  Encoding enc = encode(g, compute_windows(g), Mpmf{});
  // C_a0_0, P_a0_1, C_a1_1, Mpeak. The peak rows are implied by Mpeak's
  // bounds [12, 12] and dropped; what stays is a0's preserve rule, the two
  // single-create rows, op1's input rule and one row per timestep.
  CHECK(names(enc.instance) == std::set<std::string>{"C_a0_0", "P_a0_1", "C_a1_1", "Mpeak"});
  InstanceStats s = instance_stats(enc.instance);
  CHECK(s.num_vars == 4);
  CHECK(s.num_constraints == 6);
  CHECK(solve_mpmf(g, support::internal_config()).peak == 12);
}

TEST_CASE("single operator at the exact budget moves nothing") {
  DataflowGraph g = one_op();
  PlanSolution s = solve_plan(g, MinAccess{12}, support::internal_config());
  REQUIRE(s.plan);
  CHECK(*s.result.objective == 0);
  CHECK(s.plan->timestep_count() == 2);
  CHECK(s.metrics->non_compulsory_bytes == 0);
  for (const auto& step : s.plan->events)
    for (const auto& e : step) CHECK((e.action != Action::Spill && e.action != Action::Retrieve));
}

TEST_CASE("chain peak is 12") {
  CHECK(solve_mpmf(support::fixture("chain"), support::internal_config()).peak == 12);
}

TEST_CASE("encode errors") {
  DataflowGraph g = support::fixture("chain");
  CHECK(code_of([&] { encode(g, compute_windows(g), MinAccess{11}); }) == ErrorCode::BudgetTooSmall);
  CHECK(code_of([&] { encode(g, compute_windows(g), FixedSchedule{12, {1, 0, 2}}); }) == ErrorCode::InvalidOrder);
  CHECK(code_of([&] { encode(g, compute_windows(g), FixedSchedule{12, {0, 1}}); }) == ErrorCode::InvalidOrder);
  EncodeOptions odd;
  odd.alignment = 4;  // a2 has 2 bytes
  CHECK(code_of([&] { encode(g, compute_windows(g), MinAccess{12}, odd); }) == ErrorCode::BudgetTooSmall);
}

TEST_CASE("variable names follow the grammar and are unique") {
  const std::regex grammar(R"((C|P|S|R|L|V)_[A-Za-z0-9_]+_\d+|(u|d)_[A-Za-z0-9_]+__[A-Za-z0-9_]+_\d+|Mpeak)");
  for (const char* name : support::kFixtures) {
    DataflowGraph g = support::fixture(name);
    Encoding enc = encode(g, compute_windows(g), MinAccess{compute_min_budget(g)});
    std::set<std::string> seen;
    for (const auto& v : enc.instance.variables()) {
      CHECK_MESSAGE(std::regex_match(v.name, grammar), v.name);
      CHECK(seen.insert(v.name).second);
    }
  }
}

TEST_CASE("chain: no ordering variables for tensors whose lifetimes cannot meet") {
  DataflowGraph g = support::fixture("chain");
  Encoding enc = encode(g, compute_windows(g), MinAccess{12});
  for (const auto& v : enc.instance.variables()) CHECK(v.name.find("a0__a2") == std::string::npos);
  bool a0_a1 = false;
  for (const auto& v : enc.instance.variables()) a0_a1 = a0_a1 || v.name.rfind("u_a0__a1_", 0) == 0;
  CHECK(a0_a1);
}

TEST_CASE("objective: one term per spill and retrieve variable, weighted by size") {
  for (const char* name : support::kFixtures) {
    DataflowGraph g = support::fixture(name);
    Encoding enc = encode(g, compute_windows(g), MinAccess{compute_min_budget(g)});
    int sr = 0;
    for (const auto& v : enc.instance.variables()) sr += (v.name[0] == 'S' || v.name[0] == 'R') ? 1 : 0;
    CHECK(static_cast<int>(enc.instance.objective().size()) == sr);
    for (const Term& t : enc.instance.objective()) CHECK(t.coef > 0);
  }
}

TEST_CASE("pruning never adds variables or constraints") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    DataflowGraph g = support::random_case(seed);
    const Bytes b = compute_min_budget(g);
    for (const EncodeMode& mode : {EncodeMode{MinAccess{b}}, EncodeMode{Mpmf{}}}) {
      InstanceStats pruned = instance_stats(encode(g, compute_windows(g), mode).instance);
      InstanceStats full = instance_stats(encode(g, TimestepWindows::unpruned(g), mode).instance);
      CHECK(pruned.num_vars <= full.num_vars);
      CHECK(pruned.num_constraints <= full.num_constraints);
    }
  }
}

TEST_CASE("LP text is read back losslessly") {
  std::vector<std::pair<DataflowGraph, EncodeMode>> cases;
  for (const char* name : {"chain", "diamond", "fig1", "nas_small"}) {
    DataflowGraph g = support::fixture(name);
    const Bytes b = compute_min_budget(g);
    cases.push_back({g, MinAccess{b}});
    cases.push_back({g, Mpmf{}});
    cases.push_back({g, FixedSchedule{b, g.default_schedule()}});
  }
  for (const auto& [g, mode] : cases) {
    CAPTURE(g.name());
    const MilpInstance m = encode(g, compute_windows(g), mode).instance;
    const oracle::LpModel lp = oracle::read_lp(lp_text(m));

    std::map<std::string, long long> obj;
    for (const Term& t : m.objective()) obj[m.variables()[t.var].name] += t.coef;
    CHECK(lp.objective == obj);

    REQUIRE(lp.rows.size() == m.constraints().size());
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
      const Constraint& c = m.constraints()[i];
      std::map<std::string, long long> terms;
      for (const Term& t : c.terms) terms[m.variables()[t.var].name] += t.coef;
      CHECK(lp.rows[i].name == "c" + std::to_string(i));
      CHECK(lp.rows[i].terms == terms);
      CHECK(lp.rows[i].rel == std::string(to_string(c.rel)));
      CHECK(lp.rows[i].rhs == c.rhs);
    }
    std::size_t binaries = 0, generals = 0;
    for (const auto& v : m.variables()) {
      if (v.domain == VarDomain::Binary) {
        ++binaries;
        CHECK(std::count(lp.binaries.begin(), lp.binaries.end(), v.name) == 1);
      } else {
        ++generals;
        CHECK(std::count(lp.generals.begin(), lp.generals.end(), v.name) == 1);
        REQUIRE(lp.bounds.count(v.name));
        CHECK(lp.bounds.at(v.name) == std::pair<long long, long long>{v.lo, v.hi});
      }
    }
    CHECK(lp.binaries.size() == binaries);
    CHECK(lp.generals.size() == generals);
  }
}

TEST_CASE("decode rejects fractional and inconsistent assignments") {
  DataflowGraph g = support::fixture("chain");
  Encoding enc = encode(g, compute_windows(g), MinAccess{12});
  Assignment good = solved(g, enc);
  CHECK(decode(g, enc, good).timestep_count() == 3);

  Assignment half = good;
  half[*enc.instance.find("C_a0_0")] = 0.5;
  CHECK(code_of([&] { decode(g, enc, half); }) == ErrorCode::NonIntegralSolution);

  Assignment near = good;
  near[*enc.instance.find("C_a0_0")] = 1.0 - 1e-9;
  CHECK(decode(g, enc, near) == decode(g, enc, good));

  Assignment broken = good;
  broken[*enc.instance.find("C_a0_0")] = 0;
  CHECK(code_of([&] { decode(g, enc, broken); }) == ErrorCode::InconsistentAssignment);

  Encoding peak = encode(g, compute_windows(g), Mpmf{});
  CHECK(code_of([&] { decode(g, peak, solved(g, peak)); }) == ErrorCode::InvalidMode);
}

TEST_CASE("plan -> assignment -> plan is the identity and keeps the objective") {
  for (const char* name : {"diamond", "fig1", "belady_gap", "nas_small"}) {
    CAPTURE(name);
    DataflowGraph g = support::fixture(name);
    Encoding enc = encode(g, compute_windows(g), MinAccess{compute_min_budget(g)});
    Assignment x = solved(g, enc);
    ExecutionPlan plan = decode(g, enc, x);
    Assignment back = assignment_from_plan(g, enc, plan);
    CHECK_FALSE(enc.instance.first_violation(back, 1e-9).has_value());
    CHECK(decode(g, enc, back) == plan);
    CHECK(integral_objective(enc.instance, back, 1e-9) == validate(g, plan).non_compulsory_bytes);
  }
}

TEST_CASE("fig1 at budget 8: frozen optimum, spills a strict subset of {a2, a3, a4}") {
  DataflowGraph g = support::fixture("fig1");
  CHECK(compute_min_budget(g) == 8);
  // Frozen from the brute-force search in tests/oracles.cpp.
  const auto reference = oracle::min_traffic(g, 8);
  REQUIRE(reference);
  CHECK(*reference == 8);

  PlanSolution s = solve_plan(g, MinAccess{8}, support::internal_config());
  REQUIRE(s.plan);
  CHECK(*s.result.objective == 8);
  CHECK(s.metrics->non_compulsory_bytes == 8);
  std::set<std::string> spilled;
  for (const auto& step : s.plan->events)
    for (const auto& e : step)
      if (e.action == Action::Spill) spilled.insert(e.tensor);
  CHECK_FALSE(spilled.empty());
  CHECK(spilled.size() < 3);
  for (const auto& id : spilled) CHECK(std::set<std::string>{"a2", "a3", "a4"}.count(id) == 1);
}

TEST_CASE("minimum-peak optimum equals exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    DataflowGraph g = support::random_case(seed);
    PeakSolution p = solve_mpmf(g, support::internal_config());
    CHECK(p.peak == oracle::min_peak(g));
    CHECK(oracle::peak_of(g, p.order) == p.peak);
  }
}

TEST_CASE("more budget never costs more") {
  for (const char* name : support::kFixtures) {
    DataflowGraph g = support::fixture(name);
    BudgetTriple t = compute_budget_triple(g, support::internal_config());
    Bytes prev = -1;
    for (Bytes b : {t.m_r, t.m_h, t.m_p}) {
      PlanSolution s = solve_plan(g, MinAccess{b}, support::internal_config());
      REQUIRE(s.result.objective);
      if (prev >= 0) CHECK(*s.result.objective <= prev);
      prev = *s.result.objective;
    }
  }
}

TEST_CASE("alignment: sizes and budget in units") {
  GraphDescription d;
  d.name = "aligned";
  d.tensors = {{"a0", 8, TensorKind::GraphInput}, {"a1", 16, TensorKind::Activation}, {"a2", 8, TensorKind::GraphOutput}};
  d.operators = {{"op1", {"a0"}, {"a1"}, 0}, {"op2", {"a1"}, {"a2"}, 1}};
  DataflowGraph g = DataflowGraph::build(d);
  EncodeOptions opt;
  opt.alignment = 8;
  PlanSolution s = solve_plan(g, MinAccess{24}, support::internal_config(), opt);
  REQUIRE(s.plan);
  CHECK(*s.result.objective == 0);
  for (const auto& step : s.plan->events)
    for (const auto& e : step)
      if (e.addr) CHECK(*e.addr % 8 == 0);
}
