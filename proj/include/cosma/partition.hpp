#pragma once

// Divide and conquer: cut the graph at break operators, solve each piece on
// its own with memory empty at entry, and stitch the pieces into one plan.

#include <string>
#include <vector>

#include "cosma/graph.hpp"
#include "cosma/plan.hpp"
#include "cosma/solver.hpp"

namespace cosma {

struct PartitionSpec {
  std::vector<std::string> breaks;  // operator ids, in sub-graph order
};

struct SubGraph {
  DataflowGraph graph;
  std::vector<std::string> operators;        // user operators, original ids
  std::vector<std::string> boundary_inputs;  // tensors loaded from host at entry
  std::vector<std::string> boundary_outputs; // tensors later pieces need
};

/// Piece i holds the break operator i and its not-yet-taken ancestors; the
/// last piece holds the rest. Tensors passed between pieces must be outputs
/// of the break that closes the producing piece, or graph inputs. Throws
/// InvalidBreaks.
std::vector<SubGraph> split(const DataflowGraph& g, const PartitionSpec& spec);

/// Heuristic cut points: pieces of roughly `target_ops` operators, preferring
/// cuts crossed by few tensors. Empty when the graph is small enough.
PartitionSpec auto_breaks(const DataflowGraph& g, int target_ops);

struct StitchedPlan {
  std::vector<SubGraph> pieces;
  std::vector<ExecutionPlan> sub_plans;
  std::vector<Bytes> sub_objectives;
  std::vector<std::string> boundary_tensors;
  ExecutionPlan combined;
  Bytes boundary_bytes = 0;  // boundary stores and loads
  Bytes total_bytes = 0;     // sum of sub objectives + boundary_bytes
};

/// Throws SolverError naming the piece when a sub-solve has no solution.
StitchedPlan solve_partitioned(const DataflowGraph& g, const PartitionSpec& spec, Bytes budget,
                               const SolverConfig& cfg);

std::string partition_report_json(const StitchedPlan& stitched);

}  // namespace cosma
