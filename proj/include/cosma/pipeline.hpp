#pragma once

// Encode -> solve -> decode -> validate, shared by the CLI, the comparison
// report and the partitioned solver.

#include <optional>
#include <vector>

#include "cosma/encoder.hpp"
#include "cosma/simulator.hpp"
#include "cosma/solver.hpp"

namespace cosma {

struct BudgetTriple {
  Bytes m_r = 0;
  Bytes m_p = 0;
  Bytes m_h = 0;
};

struct PeakSolution {
  Bytes peak = 0;
  std::vector<int> order;
  SolveResult result;
};

/// Minimum-peak schedule via the Mpmf encoding. Throws SolverError when the
/// backend returns no solution.
PeakSolution solve_mpmf(const DataflowGraph& g, const SolverConfig& cfg);

BudgetTriple compute_budget_triple(const DataflowGraph& g, const SolverConfig& cfg);

struct PlanSolution {
  SolveResult result;
  std::optional<ExecutionPlan> plan;  // present when the result has a solution
  std::optional<TrafficMetrics> metrics;
};

/// Solves an allocation mode and validates the decoded plan. The simulator's
/// byte count must equal the objective; a mismatch throws
/// InconsistentAssignment.
PlanSolution solve_plan(const DataflowGraph& g, const EncodeMode& mode, const SolverConfig& cfg,
                        const EncodeOptions& options = {});

}  // namespace cosma
