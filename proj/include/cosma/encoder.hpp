#pragma once

// Builds the joint scheduling / allocation / replacement MILP for a dataflow
// graph, and turns solver assignments back into execution plans.
//
// Variable naming (stable; solution files refer to these names):
//   C_<tensor>_<t>  create          P_<tensor>_<t>  preserve
//   S_<tensor>_<t>  spill           R_<tensor>_<t>  retrieve
//   L_<tensor>_<t>  base address    V_<tensor>_<t>  address kept from t-1
//   u_<a>__<b>_<t>  a placed above b    d_<a>__<b>_<t>  a placed below b
//   Mpeak           peak footprint (minimum-peak mode only)
// Tensor ids are sanitized to [A-Za-z0-9_].

#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "cosma/graph.hpp"
#include "cosma/milp.hpp"
#include "cosma/plan.hpp"

namespace cosma {

/// Minimize spill + retrieve bytes under a scratchpad budget.
struct MinAccess {
  Bytes budget = 0;
};

/// Minimize the peak footprint; no spills, no allocation.
struct Mpmf {};

/// MinAccess with the operator order fixed (`order[t]` = operator index).
struct FixedSchedule {
  Bytes budget = 0;
  std::vector<int> order;
};

using EncodeMode = std::variant<MinAccess, Mpmf, FixedSchedule>;

enum class ModeKind { MinAccess, Mpmf, FixedSchedule };
ModeKind mode_kind(const EncodeMode& mode);
std::string_view to_string(ModeKind kind);

struct EncodeOptions {
  /// Addresses and sizes are expressed in units of this many bytes.
  Bytes alignment = 1;
  /// Tensors whose spill is free of charge (their host copy already exists,
  /// e.g. sub-graph inputs loaded from host). Indexed by tensor; empty = none.
  std::vector<bool> free_spill;
};

/// A variable slot: either an instance variable or a constant.
struct Slot {
  int var = -1;
  int constant = 0;
  bool is_var() const { return var >= 0; }
};

struct Encoding {
  MilpInstance instance;
  ModeKind kind = ModeKind::MinAccess;
  Bytes budget = 0;        // bytes (MinAccess / FixedSchedule)
  Bytes budget_units = 0;  // budget / alignment
  Bytes alignment = 1;
  TimestepWindows windows;  // the windows the variables were pruned with
  std::vector<Bytes> size_units;

  // [tensor][timestep]
  std::vector<std::vector<Slot>> create, preserve, spill, retrieve, address, persist;
  // (a, b, t) -> (u var, d var), a < b by tensor id
  std::map<std::tuple<int, int, int>, std::pair<int, int>> above_below;
  int peak_var = -1;

  std::vector<int> fixed_order;  // FixedSchedule only
  std::vector<bool> free_spill;  // per tensor

  int timesteps() const { return static_cast<int>(windows.asap.size()); }
};

std::string sanitize_id(std::string_view id);

/// Encodes `g` for `mode`. `w` prunes variables: use compute_windows(g) for
/// the pruned encoding or TimestepWindows::unpruned(g) to disable pruning.
/// FixedSchedule ignores `w` and uses the windows of its order.
/// Throws BudgetTooSmall, InvalidOrder, NameCollision.
Encoding encode(const DataflowGraph& g, const TimestepWindows& w, const EncodeMode& mode,
                const EncodeOptions& options = {});

/// Operator per timestep, read from the create variables.
std::vector<int> decode_schedule(const DataflowGraph& g, const Encoding& enc, const Assignment& values,
                                 double tolerance = 1e-6);

/// Rebuilds the execution plan for an allocation mode (MinAccess or
/// FixedSchedule). Throws NonIntegralSolution when a variable is further than
/// `tolerance` from an integer, InconsistentAssignment when the rounded
/// values violate a constraint, InvalidMode for Mpmf.
ExecutionPlan decode(const DataflowGraph& g, const Encoding& enc, const Assignment& values,
                     double tolerance = 1e-6);

/// Inverse of decode: the assignment that realizes `plan` under `enc`.
/// Throws InconsistentAssignment if the plan needs a variable the encoding
/// pruned away (e.g. residency outside a tensor's window).
Assignment assignment_from_plan(const DataflowGraph& g, const Encoding& enc, const ExecutionPlan& plan);

/// Assignment for the minimum-peak encoding from a schedule: tensors are
/// resident from creation through their last consumer.
Assignment assignment_from_schedule(const DataflowGraph& g, const Encoding& enc, const std::vector<int>& order);

/// Peak footprint of `order` when each tensor lives from its producer's step
/// through its last consumer's step.
Bytes schedule_peak(const DataflowGraph& g, const std::vector<int>& order);

}  // namespace cosma
