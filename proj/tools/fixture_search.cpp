// Seeded searches that produced two of the bundled fixtures.
//
//   fixture_search fig1         first 6-operator wiring of a0..a6 (sizes
//                               4,2,2,4,2,2,2) whose optimum at budget 8 = M_R
//                               spills a strict subset of {a2,a3,a4} and beats
//                               every baseline scheme
//   fixture_search belady_gap   first random graph (seed order) where greedy
//                               moves fewer bytes than belady on the default
//                               schedule at one of its three budgets

#include <algorithm>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "cosma/baselines.hpp"
#include "cosma/error.hpp"
#include "cosma/generators.hpp"
#include "cosma/pipeline.hpp"

using namespace cosma;

namespace {

std::optional<Bytes> baseline_bytes(const DataflowGraph& g, const std::vector<int>& order, Bytes budget, Policy p) {
  try {
    return validate(g, run_baseline(g, order, budget, p)).non_compulsory_bytes;
  } catch (const Error&) {
    return std::nullopt;
  }
}

int search_fig1() {
  const std::vector<Bytes> sizes{4, 2, 2, 4, 2, 2, 2};
  const Bytes budget = 8;
  SolverConfig cfg;
  // Operator i (1..6) produces a<i> from one or two earlier tensors.
  std::vector<std::vector<std::vector<int>>> choices(7);
  for (int i = 1; i <= 6; ++i) {
    for (int x = 0; x < i; ++x) choices[i].push_back({x});
    for (int x = 0; x < i; ++x)
      for (int y = x + 1; y < i; ++y) choices[i].push_back({x, y});
  }
  std::vector<int> pick(7, 0);
  long tried = 0;
  while (true) {
    ++tried;
    GraphDescription d;
    d.name = "fig1";
    for (int i = 0; i <= 6; ++i)
      d.tensors.push_back({"a" + std::to_string(i), sizes[i], i == 0 ? TensorKind::GraphInput : TensorKind::Activation});
    std::set<int> read;
    for (int i = 1; i <= 6; ++i) {
      GraphDescription::Op op{"n" + std::to_string(i), {}, {"a" + std::to_string(i)}, i - 1};
      for (int x : choices[i][pick[i]]) {
        op.inputs.push_back("a" + std::to_string(x));
        read.insert(x);
      }
      d.operators.push_back(op);
    }
    bool ok = static_cast<int>(read.size()) == 6 && !read.count(6);
    if (ok) {
      d.tensors[6].kind = TensorKind::GraphOutput;
      DataflowGraph g = DataflowGraph::build(d);
      if (compute_min_budget(g) == budget) {
        BudgetTriple tr = compute_budget_triple(g, cfg);
        PlanSolution s = tr.m_p > budget ? solve_plan(g, MinAccess{budget}, cfg) : PlanSolution{};
        if (s.plan && *s.result.objective > 0) {
          std::set<std::string> spilled;
          for (const auto& step : s.plan->events)
            for (const auto& e : step)
              if (e.action == Action::Spill) spilled.insert(e.tensor);
          const std::set<std::string> allowed{"a2", "a3", "a4"};
          bool subset = spilled.size() < 3 && std::includes(allowed.begin(), allowed.end(), spilled.begin(), spilled.end());
          Bytes best = -1;
          bool all_ran = true;
          for (const auto& order : {default_schedule(g), mpmf_schedule(g, cfg)})
            for (Policy p : {Policy::Belady, Policy::Greedy}) {
              auto b = baseline_bytes(g, order, budget, p);
              if (!b) all_ran = false;
              else if (best < 0 || *b < best) best = *b;
            }
          if (subset && all_ran && *s.result.objective < best) {
            std::cerr << "tried " << tried << " wirings; optimum " << *s.result.objective << ", best baseline " << best
                      << ", M_P " << tr.m_p << "\n";
            save_graph(g, std::cout);
            return 0;
          }
        }
      }
    }
    int i = 6;
    while (i >= 1 && ++pick[i] == static_cast<int>(choices[i].size())) pick[i--] = 0;
    if (i == 0) break;
  }
  std::cerr << "no wiring found\n";
  return 1;
}

int search_belady_gap() {
  SolverConfig cfg;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    GeneratorSpec spec;
    spec.family = Family::Random;
    spec.seed = seed;
    spec.ops = 6;
    DataflowGraph g = generate(spec);
    BudgetTriple tr = compute_budget_triple(g, cfg);
    const auto order = default_schedule(g);
    for (Bytes budget : {tr.m_r, tr.m_h, tr.m_p}) {
      auto belady = baseline_bytes(g, order, budget, Policy::Belady);
      auto greedy = baseline_bytes(g, order, budget, Policy::Greedy);
      if (!belady || !greedy || *greedy >= *belady) continue;
      PlanSolution opt = solve_plan(g, FixedSchedule{budget, order}, cfg);
      std::cerr << "seed " << seed << " budget " << budget << ": greedy " << *greedy << ", belady " << *belady
                << ", fixed-order optimum " << *opt.result.objective << "\n";
      save_graph(g, std::cout);
      return 0;
    }
  }
  std::cerr << "no gap found\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string what = argc > 1 ? argv[1] : "";
  try {
    if (what == "fig1") return search_fig1();
    if (what == "belady_gap") return search_belady_gap();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "usage: fixture_search fig1|belady_gap\n";
  return 1;
}
