// cosma: command-line front end.
//
// Exit codes: 0 ok, 1 error, 2 infeasible / budget too small, 3 timeout.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cosma/baselines.hpp"
#include "cosma/error.hpp"
#include "cosma/generators.hpp"
#include "cosma/partition.hpp"
#include "cosma/pipeline.hpp"
#include "cosma/render.hpp"
#include "cosma/report.hpp"

using namespace cosma;

namespace {

struct Options {
  std::string graph;
  std::string plan;
  std::string budget = "mr";
  std::vector<std::string> budgets;
  std::string mode = "min_access";
  std::string schedule = "default";
  std::string policy = "belady";
  std::vector<std::string> breaks;
  int auto_breaks = 0;
  std::string solver_cmd;
  std::string backend;
  double time_limit = 600.0;
  int max_ops = InternalCaps{}.max_ops;
  int max_cells = InternalCaps{}.max_cells;
  long long alignment = 1;
  std::string out;
  std::string metrics;
  std::string format;

  GeneratorSpec gen;
  std::string family = "chain";
  std::vector<long long> sizes;
};

SolverConfig solver_config(const Options& o) {
  SolverConfig cfg = SolverConfig::from_environment();
  if (!o.solver_cmd.empty()) {
    cfg.command_template = o.solver_cmd;
    cfg.backend = Backend::External;
  }
  if (o.backend == "internal") cfg.backend = Backend::Internal;
  if (o.backend == "external") {
    if (cfg.command_template.empty())
      throw Error(ErrorCode::SolverError, "external backend needs --solver-cmd or COSMA_SOLVER_CMD");
    cfg.backend = Backend::External;
  }
  cfg.time_limit = o.time_limit;
  cfg.internal_caps = {o.max_ops, o.max_cells};
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
}

Bytes budget_of(const DataflowGraph& g, const std::string& text, const SolverConfig& cfg) {
  if (text == "mr") return compute_min_budget(g);
  if (text == "mh" || text == "mp") return resolve_budget(text, compute_budget_triple(g, cfg));
  return resolve_budget(text, {});
}

std::vector<int> schedule_of(const DataflowGraph& g, const std::string& text, const SolverConfig& cfg) {
  if (text == "default") return default_schedule(g);
  if (text == "mpmf") return mpmf_schedule(g, cfg);
  // Comma-separated operator ids.
  std::vector<int> order;
  std::stringstream ss(text);
  for (std::string id; std::getline(ss, id, ',');) order.push_back(g.op_index(id));
  return order;
}

int status_exit(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
    case SolveStatus::Feasible: return 0;
    case SolveStatus::Infeasible: return 2;
    case SolveStatus::Timeout: return 3;
    case SolveStatus::Error: return 1;
  }
  return 1;
}

int cmd_solve(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  SolverConfig cfg = solver_config(o);
  if (o.mode == "mpmf") {
    PeakSolution s = solve_mpmf(g, cfg);
    std::ostringstream os;
    os << "{\n  \"peak\": " << s.peak << ",\n  \"schedule\": [";
    for (std::size_t i = 0; i < s.order.size(); ++i) os << (i ? ", " : "") << '"' << g.op(s.order[i]).id << '"';
    os << "]\n}\n";
    emit(o.out, os.str());
    std::cerr << "status=" << to_string(s.result.status) << " peak=" << s.peak << "\n";
    return 0;
  }
  const Bytes budget = budget_of(g, o.budget, cfg);
  EncodeMode mode = MinAccess{budget};
  if (o.mode == "fixed_schedule")
    mode = FixedSchedule{budget, schedule_of(g, o.schedule, cfg)};
  else if (o.mode != "min_access")
    throw Error(ErrorCode::InvalidMode, "unknown mode '" + o.mode + "'");
  EncodeOptions options;
  options.alignment = o.alignment;
  PlanSolution s = solve_plan(g, mode, cfg, options);
  std::cerr << "status=" << to_string(s.result.status);
  if (s.plan) {
    emit(o.out, plan_to_json(*s.plan));
    if (!o.metrics.empty()) emit(o.metrics, metrics_to_json(*s.metrics));
    std::cerr << " budget=" << budget << " bytes=" << s.metrics->non_compulsory_bytes
              << " peak=" << s.metrics->peak_footprint;
  }
  std::cerr << " seconds=" << s.result.solve_seconds << "\n";
  return status_exit(s.result.status);
}

int cmd_validate(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  ExecutionPlan p = load_plan_file(o.plan);
  try {
    emit(o.out, metrics_to_json(validate(g, p)));
  } catch (const ValidationError& e) {
    std::cerr << to_string(e.code()) << " t=" << e.timestep();
    for (const std::string& id : e.tensors()) std::cerr << " " << id;
    std::cerr << "\n" << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_baseline(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  SolverConfig cfg = solver_config(o);
  const Bytes budget = budget_of(g, o.budget, cfg);
  ExecutionPlan p = run_baseline(g, schedule_of(g, o.schedule, cfg), budget, policy_from_string(o.policy));
  TrafficMetrics m = validate(g, p);
  emit(o.out, plan_to_json(p));
  if (!o.metrics.empty()) emit(o.metrics, metrics_to_json(m));
  std::cerr << "budget=" << budget << " bytes=" << m.non_compulsory_bytes << " peak=" << m.peak_footprint << "\n";
  return 0;
}

std::optional<PartitionSpec> partition_of(const DataflowGraph& g, const Options& o) {
  if (!o.breaks.empty()) return PartitionSpec{o.breaks};
  if (o.auto_breaks > 0) return auto_breaks(g, o.auto_breaks);
  return std::nullopt;
}

int cmd_compare(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  CompareOptions options;
  if (!o.budgets.empty()) options.budgets = o.budgets;
  options.partition = partition_of(g, o);
  CompareReport report = run_compare(g, solver_config(o), options);
  if (o.format == "csv") {
    emit(o.out, compare_csv(report));
  } else {
    std::cout << compare_table(report);
    if (o.out.empty())
      std::cout << "\n" << compare_csv(report);
    else
      emit(o.out, compare_csv(report));
  }
  for (const CompareRow& r : report.rows)
    if (r.scheme == "cosma" && r.status != "optimal" && r.status != "feasible") return 1;
  return 0;
}

int cmd_partition(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  SolverConfig cfg = solver_config(o);
  PartitionSpec spec = partition_of(g, o).value_or(PartitionSpec{});
  StitchedPlan s = solve_partitioned(g, spec, budget_of(g, o.budget, cfg), cfg);
  TrafficMetrics m = validate(g, s.combined);
  std::cout << partition_report_json(s);
  if (!o.out.empty()) emit(o.out, plan_to_json(s.combined));
  std::cerr << "bytes=" << m.non_compulsory_bytes << " boundary_bytes=" << s.boundary_bytes << "\n";
  return 0;
}

int cmd_budgets(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  BudgetTriple b = compute_budget_triple(g, solver_config(o));
  std::cout << "M_R=" << b.m_r << " M_P=" << b.m_p << " M_H=" << b.m_h << "\n";
  return 0;
}

int cmd_render(const Options& o) {
  DataflowGraph g = load_graph_file(o.graph);
  ExecutionPlan p = load_plan_file(o.plan);
  emit(o.out, render_memory_map(g, p, render_format_from_string(o.format.empty() ? "svg" : o.format), o.alignment));
  return 0;
}

int cmd_gen(Options o) {
  o.gen.family = family_from_string(o.family);
  o.gen.sizes.assign(o.sizes.begin(), o.sizes.end());
  emit(o.out, graph_to_json(generate(o.gen)));
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::BudgetTooSmall:
    case ErrorCode::Infeasible: return 2;
    case ErrorCode::Timeout: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cosma: joint scheduling, allocation and spilling for scratchpad accelerators"};
  app.set_config("--config", "", "key = value file mirroring the flags; flags win");
  app.require_subcommand(1);
  Options o;

  auto graph = [&](CLI::App* c) { c->add_option("--graph", o.graph, "graph JSON")->required(); };
  auto solver = [&](CLI::App* c) {
    c->add_option("--solver-cmd", o.solver_cmd, "external solver command with {lp} and {sol}");
    c->add_option("--backend", o.backend, "internal or external")->check(CLI::IsMember({"internal", "external"}));
    c->add_option("--time-limit", o.time_limit, "seconds");
    c->add_option("--max-ops", o.max_ops, "internal backend: largest operator count");
    c->add_option("--max-cells", o.max_cells, "internal backend: largest budget in alignment units (<= 64)");
  };

  auto* solve = app.add_subcommand("solve", "optimal plan for a budget");
  graph(solve);
  solver(solve);
  solve->add_option("--budget", o.budget, "bytes, or mr / mh / mp");
  solve->add_option("--mode", o.mode, "min_access, mpmf or fixed_schedule");
  solve->add_option("--schedule", o.schedule, "fixed_schedule order: default, mpmf or op ids");
  solve->add_option("--alignment", o.alignment, "address granularity in bytes");
  solve->add_option("--out", o.out, "plan JSON (default stdout)");
  solve->add_option("--metrics", o.metrics, "metrics JSON");

  auto* val = app.add_subcommand("validate", "check a plan and report its traffic");
  graph(val);
  val->add_option("--plan", o.plan, "plan JSON")->required();
  val->add_option("--out", o.out, "metrics JSON (default stdout)");

  auto* base = app.add_subcommand("baseline", "first-fit allocation with a replacement policy");
  graph(base);
  solver(base);
  base->add_option("--budget", o.budget, "bytes, or mr / mh / mp");
  base->add_option("--schedule", o.schedule, "default, mpmf or op ids");
  base->add_option("--policy", o.policy, "belady or greedy");
  base->add_option("--out", o.out, "plan JSON (default stdout)");
  base->add_option("--metrics", o.metrics, "metrics JSON");

  auto* cmp = app.add_subcommand("compare", "all schemes at several budgets");
  graph(cmp);
  solver(cmp);
  cmp->add_option("--budgets", o.budgets, "comma-separated bytes or mr / mh / mp")->delimiter(',');
  cmp->add_option("--breaks", o.breaks, "break operators for the divide-and-conquer row")->delimiter(',');
  cmp->add_option("--auto-breaks", o.auto_breaks, "target sub-graph size for automatic breaks");
  cmp->add_option("--format", o.format, "table or csv");
  cmp->add_option("--out", o.out, "CSV file");

  auto* part = app.add_subcommand("partition", "divide and conquer at break operators");
  graph(part);
  solver(part);
  part->add_option("--budget", o.budget, "bytes, or mr / mh / mp");
  part->add_option("--breaks", o.breaks, "break operators")->delimiter(',');
  part->add_option("--auto-breaks", o.auto_breaks, "target sub-graph size");
  part->add_option("--out", o.out, "stitched plan JSON");

  auto* bud = app.add_subcommand("budgets", "print M_R, M_P and M_H");
  graph(bud);
  solver(bud);

  auto* ren = app.add_subcommand("render", "memory map of a plan");
  graph(ren);
  ren->add_option("--plan", o.plan, "plan JSON")->required();
  ren->add_option("--format", o.format, "svg or ascii");
  ren->add_option("--alignment", o.alignment, "bytes per ASCII row");
  ren->add_option("--out", o.out, "output file (default stdout)");

  auto* gen = app.add_subcommand("gen", "generate a graph");
  gen->add_option("--family", o.family, "chain, diamond, resnet_like, nas_like or random");
  gen->add_option("--seed", o.gen.seed, "RNG seed");
  gen->add_option("--length", o.gen.length, "chain tensors");
  gen->add_option("--blocks", o.gen.blocks, "resnet_like blocks");
  gen->add_option("--branches", o.gen.branches, "nas_like branches");
  gen->add_option("--cells", o.gen.cells, "nas_like cells");
  gen->add_option("--ops", o.gen.ops, "random: operators including sources");
  gen->add_option("--min-size", o.gen.min_size, "smallest tensor");
  gen->add_option("--max-size", o.gen.max_size, "largest tensor");
  gen->add_option("--sizes", o.sizes, "explicit sizes")->delimiter(',');
  gen->add_option("--out", o.out, "graph JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (val->parsed()) return cmd_validate(o);
    if (base->parsed()) return cmd_baseline(o);
    if (cmp->parsed()) return cmd_compare(o);
    if (part->parsed()) return cmd_partition(o);
    if (bud->parsed()) return cmd_budgets(o);
    if (ren->parsed()) return cmd_render(o);
    if (gen->parsed()) return cmd_gen(o);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
