#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cosma/graph.hpp"

namespace cosma {

enum class Action { Create, Preserve, Spill, Retrieve, Drop };

std::string_view to_string(Action action);
Action action_from_string(std::string_view text);

struct PlanEvent {
  std::string tensor;
  Action action = Action::Preserve;
  std::optional<Bytes> addr;  // create / preserve / retrieve only

  bool operator==(const PlanEvent&) const = default;
};

/// One operator per timestep plus the tensor actions at that timestep. A
/// schedule entry without an operator is a transfer-only step (used when
/// stitching partitioned plans): tensors may move, nothing is computed.
struct ExecutionPlan {
  Bytes budget = 0;
  std::vector<std::optional<std::string>> schedule;
  std::vector<std::vector<PlanEvent>> events;

  int timestep_count() const { return static_cast<int>(schedule.size()); }
  bool operator==(const ExecutionPlan&) const = default;
};

std::string plan_to_json(const ExecutionPlan& plan);
ExecutionPlan plan_from_json(const std::string& text);
ExecutionPlan load_plan_file(const std::string& path);

/// Operator indices of the plan's schedule (transfer steps skipped).
std::vector<int> plan_operator_order(const DataflowGraph& g, const ExecutionPlan& plan);

}  // namespace cosma
