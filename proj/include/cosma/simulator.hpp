#pragma once

#include <string>
#include <vector>

#include "cosma/graph.hpp"
#include "cosma/plan.hpp"

namespace cosma {

struct TrafficEvent {
  int t = 0;
  std::string tensor;
  Action action = Action::Preserve;
  Bytes bytes = 0;  // off-chip bytes moved by this event (spill / retrieve)
};

struct TrafficMetrics {
  Bytes non_compulsory_bytes = 0;
  Bytes compulsory_bytes = 0;
  Bytes peak_footprint = 0;
  std::vector<TrafficEvent> event_log;
};

/// Replays `plan` on `g` cell by cell and returns its traffic. Throws
/// ValidationError on the first illegal step:
///  - DepViolation: bad schedule, missing input, create outside the producer's step
///  - OverlapViolation / BudgetViolation: placement errors
///  - ResidencyViolation: preserve/spill/retrieve/drop without the required prior state
///  - AddressDrift: a preserved tensor changed address
///  - LostTensor: a live tensor was dropped without a host copy and is needed again
///  - MultiSpill / MultiCreate
TrafficMetrics validate(const DataflowGraph& g, const ExecutionPlan& plan);

/// Sum of sizes of graph inputs, parameters and graph outputs.
Bytes compulsory_bytes(const DataflowGraph& g);

std::string metrics_to_json(const TrafficMetrics& m);

}  // namespace cosma
