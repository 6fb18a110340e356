#include <functional>

#include "cosma/error.hpp"
#include "cosma/generators.hpp"
#include "cosma/partition.hpp"
#include "cosma/pipeline.hpp"
#include "cosma/simulator.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace cosma;

namespace {

DataflowGraph chain6() {
  GeneratorSpec spec;
  spec.family = Family::Chain;
  spec.length = 7;
  spec.sizes = {3, 2, 4, 5, 1, 2, 3};
  return generate(spec);
}

// a chain op1..op6 whose op2 result is read again by op5
DataflowGraph skip_chain() {
  GraphDescription d;
  d.name = "skip_chain";
  d.tensors.push_back({"a0", 1, TensorKind::GraphInput});
  for (int i = 1; i <= 6; ++i) d.tensors.push_back({"a" + std::to_string(i), 1, i == 6 ? TensorKind::GraphOutput : TensorKind::Activation});
  for (int i = 1; i <= 6; ++i) {
    GraphDescription::Op op{"op" + std::to_string(i), {"a" + std::to_string(i - 1)}, {"a" + std::to_string(i)}, i};
    if (i == 5) op.inputs.push_back("a2");
    d.operators.push_back(op);
  }
  return DataflowGraph::build(d);
}

ErrorCode split_error(const DataflowGraph& g, std::vector<std::string> breaks) {
  try {
    split(g, PartitionSpec{std::move(breaks)});
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("split accepted");
  return ErrorCode::ParseError;
}

}  // namespace

TEST_CASE("six-operator chain cut after op3") {
  DataflowGraph g = chain6();
  auto pieces = split(g, PartitionSpec{{"op3"}});
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].operators == std::vector<std::string>{"op1", "op2", "op3"});
  CHECK(pieces[1].operators == std::vector<std::string>{"op4", "op5", "op6"});
  CHECK(pieces[0].boundary_outputs == std::vector<std::string>{"a3"});
  CHECK(pieces[1].boundary_inputs == std::vector<std::string>{"a3"});
  CHECK(pieces[1].graph.op(0).id == "src_a3");
}

TEST_CASE("ample budget: the cut costs one store and one load of the boundary tensor") {
  DataflowGraph g = chain6();
  SolverConfig cfg = support::internal_config();
  const Bytes budget = 20;
  PlanSolution mono = solve_plan(g, MinAccess{budget}, cfg);
  CHECK(*mono.result.objective == 0);
  StitchedPlan s = solve_partitioned(g, PartitionSpec{{"op3"}}, budget, cfg);
  const Bytes boundary = g.tensor(g.tensor_index("a3")).size;
  CHECK(s.boundary_tensors == std::vector<std::string>{"a3"});
  CHECK(s.boundary_bytes == 2 * boundary);
  CHECK(s.total_bytes - *mono.result.objective == 2 * boundary);
  CHECK(validate(g, s.combined).non_compulsory_bytes == s.total_bytes);

  auto report = nlohmann::json::parse(partition_report_json(s));
  CHECK(report["total_bytes"] == s.total_bytes);
  CHECK(report["subgraphs"].size() == 2);
}

TEST_CASE("stitched plans validate and never beat the monolithic optimum") {
  SolverConfig cfg = support::internal_config();
  struct Case {
    const char* fixture;
    std::vector<std::string> breaks;
  };
  for (const Case& c : {Case{"diamond", {"s"}}, Case{"fig1", {"n1"}}, Case{"chain", {"op1"}}, Case{"resnet_like3", {"b0_add"}},
                        Case{"resnet_like3", {"b0_add", "b1_add"}}, Case{"nas_small", {}}}) {
    CAPTURE(c.fixture);
    DataflowGraph g = support::fixture(c.fixture);
    BudgetTriple t = compute_budget_triple(g, cfg);
    for (Bytes b : {t.m_r, t.m_h, t.m_p}) {
      StitchedPlan s = solve_partitioned(g, PartitionSpec{c.breaks}, b, cfg);
      CHECK(validate(g, s.combined).non_compulsory_bytes == s.total_bytes);
      CHECK(s.total_bytes >= *solve_plan(g, MinAccess{b}, cfg).result.objective);
    }
  }
}

TEST_CASE("automatic cut points") {
  PartitionSpec chain = auto_breaks(chain6(), 3);
  CHECK(chain.breaks == std::vector<std::string>{"op3"});

  DataflowGraph skip = skip_chain();
  // Cutting at op3 or op4 would leave a2 crossing without coming from the cut.
  CHECK(split_error(skip, {"op3"}) == ErrorCode::InvalidBreaks);
  CHECK(split_error(skip, {"op4"}) == ErrorCode::InvalidBreaks);
  CHECK(auto_breaks(skip, 3).breaks == std::vector<std::string>{"op2"});

  CHECK(auto_breaks(chain6(), 10).breaks.empty());
}

TEST_CASE("bad cut lists") {
  DataflowGraph g = chain6();
  CHECK(split_error(g, {"nope"}) == ErrorCode::InvalidBreaks);
  CHECK(split_error(g, {"op3", "op3"}) == ErrorCode::InvalidBreaks);
  CHECK(split_error(g, {"op3", "op2"}) == ErrorCode::InvalidBreaks);
  CHECK(split_error(g, {"src_a0"}) == ErrorCode::InvalidBreaks);
}
