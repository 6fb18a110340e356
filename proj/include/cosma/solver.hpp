#pragma once

// MILP backends: an external solver driven through LP/solution files, and an
// exact internal search over plans for tiny instances.

#include <istream>
#include <optional>
#include <string>

#include "cosma/encoder.hpp"
#include "cosma/graph.hpp"
#include "cosma/milp.hpp"

namespace cosma {

enum class Backend { External, Internal };
enum class SolveStatus { Optimal, Feasible, Infeasible, Timeout, Error };

std::string_view to_string(SolveStatus status);
std::string_view to_string(Backend backend);

struct InternalCaps {
  int max_ops = 8;
  int max_cells = 64;
};

struct SolverConfig {
  Backend backend = Backend::Internal;
  std::string command_template;  // "{lp}" and "{sol}" are substituted
  double time_limit = 600.0;     // seconds
  double tolerance = 1e-6;
  InternalCaps internal_caps;

  /// Internal backend, or external when COSMA_SOLVER_CMD is set.
  static SolverConfig from_environment();
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::optional<std::int64_t> objective;
  Assignment assignment;  // empty unless optimal / feasible
  double solve_seconds = 0.0;
  std::string message;

  bool has_solution() const { return status == SolveStatus::Optimal || status == SolveStatus::Feasible; }
};

/// Parses a solution file: "name value" lines, "status <word>" header,
/// blank lines and lines starting with '#' or '=' ignored. Unmentioned
/// variables are 0. Values are not rounded. Throws UnknownVariable,
/// MalformedLine.
SolveResult read_solution(std::istream& in, const MilpInstance& m);

/// Runs the configured command on a temporary LP file. Throws SolverError
/// (failed command, missing file, constraint violated beyond tolerance),
/// Timeout, and read_solution errors.
SolveResult solve_external(const MilpInstance& m, const SolverConfig& cfg);

/// Exact search over plans (MinAccess, FixedSchedule) or schedules (Mpmf).
/// Throws TooLarge when the graph exceeds the caps.
SolveResult solve_internal(const DataflowGraph& g, const Encoding& enc, const SolverConfig& cfg);

/// Dispatches on cfg.backend.
SolveResult solve(const DataflowGraph& g, const Encoding& enc, const SolverConfig& cfg);

/// Integer objective of `values`, with values within `tolerance` of an
/// integer snapped first.
std::int64_t integral_objective(const MilpInstance& m, const Assignment& values, double tolerance);

}  // namespace cosma
