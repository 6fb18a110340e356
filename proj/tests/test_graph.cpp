#include <sstream>

#include "cosma/error.hpp"
#include "cosma/graph.hpp"
#include "cosma/pipeline.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cosma;

namespace {

ErrorCode load_error(const std::string& text) {
  try {
    graph_from_json(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("graph loaded");
  return ErrorCode::ParseError;
}

std::string tiny(const std::string& tensors, const std::string& ops) {
  return R"({"name":"t","tensors":[)" + tensors + R"(],"operators":[)" + ops + "]}";
}

}  // namespace

TEST_CASE("chain fixture gets one virtual source and a straight schedule") {
  DataflowGraph g = support::fixture("chain");
  REQUIRE(g.op_count() == 3);
  CHECK(g.op(0).id == "src_a0");
  CHECK(g.op(0).is_virtual_source);
  CHECK(g.default_schedule() == std::vector<int>{0, 1, 2});
  CHECK(compute_min_budget(g) == 12);
  CHECK(g.is_valid_schedule({0, 1, 2}));
  CHECK_FALSE(g.is_valid_schedule({1, 0, 2}));
  CHECK_FALSE(g.is_valid_schedule({0, 1}));
}

TEST_CASE("load errors carry their codes") {
  const std::string a = R"({"id":"a","size":1,"kind":"activation"})", b = R"({"id":"b","size":1,"kind":"activation"})";
  CHECK(load_error("{") == ErrorCode::ParseError);
  CHECK(load_error(tiny(a + "," + a, "")) == ErrorCode::DuplicateId);
  CHECK(load_error(tiny(a, R"({"id":"x","inputs":["zz"],"outputs":["a"],"order":0})")) ==
        ErrorCode::DanglingReference);
  CHECK(load_error(tiny(a + "," + b, R"({"id":"x","inputs":["b"],"outputs":["a"],"order":0},)"
                                     R"({"id":"y","inputs":["a"],"outputs":["b"],"order":1})")) ==
        ErrorCode::CycleError);
  CHECK(load_error(tiny(R"({"id":"a","size":0})", "")) == ErrorCode::ParseError);
  CHECK_THROWS_AS(load_graph_file("/nonexistent/graph.json"), Error);
}

TEST_CASE("graph JSON survives write, read, write") {
  for (const char* name : support::kFixtures) {
    CAPTURE(name);
    DataflowGraph g = support::fixture(name);
    const std::string once = graph_to_json(g);
    CHECK(graph_to_json(graph_from_json(once)) == once);
  }
}

TEST_CASE("windows: asap/alap from ancestor and descendant counts") {
  DataflowGraph g = support::fixture("diamond");  // s; b1, b2 after s; j after both
  TimestepWindows w = compute_windows(g);
  const int s = g.op_index("s"), b1 = g.op_index("b1"), b2 = g.op_index("b2"), j = g.op_index("j");
  CHECK(w.asap[s] == 0);
  CHECK(w.alap[s] == 0);
  CHECK(w.asap[b1] == 1);
  CHECK(w.alap[b1] == 2);
  CHECK(w.asap[b2] == 1);
  CHECK(w.alap[b2] == 2);
  CHECK(w.asap[j] == 3);
  CHECK(w.alap[j] == 3);
  CHECK(w.tensor_window[g.tensor_index("d0")] == std::pair{0, 2});
  CHECK(w.tensor_window[g.tensor_index("d1")] == std::pair{1, 3});
  CHECK(w.tensor_window[g.tensor_index("d3")] == std::pair{3, 3});
}

TEST_CASE("every oracle schedule lies inside the windows") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    DataflowGraph g = support::random_case(seed);
    TimestepWindows w = compute_windows(g);
    for (const auto& order : oracle::all_schedules(g)) {
      REQUIRE(g.is_valid_schedule(order));
      for (int t = 0; t < static_cast<int>(order.size()); ++t) {
        CHECK(w.asap[order[t]] <= t);
        CHECK(t <= w.alap[order[t]]);
      }
    }
  }
}

TEST_CASE("budget triples") {
  SolverConfig cfg = support::internal_config();
  BudgetTriple chain = compute_budget_triple(support::fixture("chain"), cfg);
  CHECK(chain.m_r == 12);
  CHECK(chain.m_p == 12);
  CHECK(chain.m_h == 12);

  DataflowGraph d = support::fixture("diamond");
  BudgetTriple diamond = compute_budget_triple(d, cfg);
  CHECK(diamond.m_p == oracle::min_peak(d));
  CHECK(diamond.m_r == 8);
  CHECK(diamond.m_p == 10);
  CHECK(diamond.m_h == 9);

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    BudgetTriple t = compute_budget_triple(support::random_case(seed), cfg);
    CHECK(t.m_r <= t.m_h);
    CHECK(t.m_h <= t.m_p);
    CHECK(t.m_h == (t.m_r + t.m_p) / 2);
  }
}
