#include "cosma/pipeline.hpp"

#include "cosma/error.hpp"

namespace cosma {

PeakSolution solve_mpmf(const DataflowGraph& g, const SolverConfig& cfg) {
  Encoding enc = encode(g, compute_windows(g), Mpmf{});
  PeakSolution out;
  out.result = solve(g, enc, cfg);
  if (!out.result.has_solution())
    throw Error(ErrorCode::SolverError,
                "minimum-peak solve ended with status " + std::string(to_string(out.result.status)));
  out.order = decode_schedule(g, enc, out.result.assignment, cfg.tolerance);
  out.peak = schedule_peak(g, out.order);
  // The solver's Mpeak may sit above the schedule's true peak only when not optimal.
  if (out.result.status == SolveStatus::Optimal && out.peak != *out.result.objective)
    throw Error(ErrorCode::InconsistentAssignment, "schedule peak " + std::to_string(out.peak) +
                                                       " differs from solved peak " +
                                                       std::to_string(*out.result.objective));
  return out;
}

BudgetTriple compute_budget_triple(const DataflowGraph& g, const SolverConfig& cfg) {
  BudgetTriple b;
  b.m_r = compute_min_budget(g);
  b.m_p = solve_mpmf(g, cfg).peak;
  b.m_h = (b.m_r + b.m_p) / 2;
  return b;
}

PlanSolution solve_plan(const DataflowGraph& g, const EncodeMode& mode, const SolverConfig& cfg,
                        const EncodeOptions& options) {
  Encoding enc = encode(g, compute_windows(g), mode, options);
  PlanSolution out;
  out.result = solve(g, enc, cfg);
  if (!out.result.has_solution()) return out;
  out.plan = decode(g, enc, out.result.assignment, cfg.tolerance);
  out.metrics = validate(g, *out.plan);
  Bytes charged = out.metrics->non_compulsory_bytes;
  // Free spills (sub-graph inputs) are traffic the caller accounts for itself.
  for (const TrafficEvent& e : out.metrics->event_log)
    if (e.action == Action::Spill && enc.free_spill[g.tensor_index(e.tensor)]) charged -= e.bytes;
  if (charged != *out.result.objective)
    throw Error(ErrorCode::InconsistentAssignment, "simulator counts " + std::to_string(charged) +
                                                       " bytes, objective is " +
                                                       std::to_string(*out.result.objective));
  return out;
}

}  // namespace cosma
