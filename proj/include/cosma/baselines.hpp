#pragma once

// Comparison schemes: schedule providers, an online first-fit allocator and
// two replacement policies.

#include <string_view>
#include <vector>

#include "cosma/graph.hpp"
#include "cosma/plan.hpp"
#include "cosma/solver.hpp"

namespace cosma {

enum class Policy { Belady, Greedy };

std::string_view to_string(Policy policy);
Policy policy_from_string(std::string_view text);

std::vector<int> default_schedule(const DataflowGraph& g);
std::vector<int> mpmf_schedule(const DataflowGraph& g, const SolverConfig& cfg);

struct AllocatorState {
  struct Block {
    int tensor = -1;
    Bytes base = 0;
    Bytes size = 0;
  };
  Bytes budget = 0;
  std::vector<Block> live;  // sorted by base

  bool contains(int tensor) const;
  Bytes base_of(int tensor) const;
  void release(int tensor);
  /// Occupies [base, base+size); the caller guarantees the range is free.
  void place(int tensor, Bytes base, Bytes size);
};

/// First fit at the lowest base. Throws NoSpace.
Bytes linear_allocate(AllocatorState& state, int tensor, Bytes size);

/// Simulates `schedule` with the first-fit allocator, evicting by `policy`
/// whenever an allocation does not fit. Throws Stuck when no sequence of
/// evictions, relocations and restarts gets the schedule through.
ExecutionPlan run_baseline(const DataflowGraph& g, const std::vector<int>& schedule, Bytes budget, Policy policy);

}  // namespace cosma
