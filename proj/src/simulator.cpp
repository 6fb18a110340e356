#include "cosma/simulator.hpp"

#include <algorithm>
#include <sstream>

#include "cosma/error.hpp"
#include "json.hpp"

namespace cosma {

namespace {

struct TensorState {
  bool created = false;
  bool resident = false;  // at the previous timestep
  Bytes addr = 0;
  Action last = Action::Drop;  // action that made it resident at the previous timestep
  bool spilled = false;
  bool lost = false;  // dropped while it had no host copy
};

[[noreturn]] void fail(ErrorCode code, int t, std::vector<std::string> tensors, const std::string& detail) {
  throw ValidationError(code, t, std::move(tensors), detail);
}

}  // namespace

Bytes compulsory_bytes(const DataflowGraph& g) {
  Bytes sum = 0;
  for (const Tensor& t : g.tensors())
    if (t.kind != TensorKind::Activation) sum += t.size;
  return sum;
}

TrafficMetrics validate(const DataflowGraph& g, const ExecutionPlan& plan) {
  const int steps = plan.timestep_count();
  if (static_cast<int>(plan.events.size()) != steps)
    fail(ErrorCode::DepViolation, 0, {}, "event list count differs from schedule length");

  // Schedule: every operator exactly once, producers first.
  std::vector<int> op_at(steps, -1);
  std::vector<int> step_of(g.op_count(), -1);
  for (int t = 0; t < steps; ++t) {
    if (!plan.schedule[t]) continue;
    auto o = g.find_op(*plan.schedule[t]);
    if (!o) fail(ErrorCode::DepViolation, t, {}, "unknown operator '" + *plan.schedule[t] + "'");
    if (step_of[*o] != -1) fail(ErrorCode::DepViolation, t, {}, "operator '" + *plan.schedule[t] + "' scheduled twice");
    op_at[t] = *o;
    step_of[*o] = t;
  }
  for (int o = 0; o < g.op_count(); ++o) {
    if (step_of[o] == -1) fail(ErrorCode::DepViolation, steps, {}, "operator '" + g.op(o).id + "' never scheduled");
    for (int in : g.op(o).inputs)
      if (step_of[g.producer(in)] >= step_of[o])
        fail(ErrorCode::DepViolation, step_of[o], {g.tensor(in).id},
             "operator '" + g.op(o).id + "' runs before its input is produced");
  }

  TrafficMetrics metrics;
  metrics.compulsory_bytes = compulsory_bytes(g);
  std::vector<TensorState> state(g.tensor_count());

  for (int t = 0; t < steps; ++t) {
    std::vector<const PlanEvent*> event_of(g.tensor_count(), nullptr);
    for (const PlanEvent& e : plan.events[t]) {
      auto a = g.find_tensor(e.tensor);
      if (!a) fail(ErrorCode::DepViolation, t, {e.tensor}, "unknown tensor");
      if (event_of[*a]) fail(ErrorCode::ResidencyViolation, t, {e.tensor}, "more than one action");
      event_of[*a] = &e;
    }

    const int op = op_at[t];
    std::vector<bool> is_output(g.tensor_count(), false), is_input(g.tensor_count(), false);
    if (op >= 0) {
      for (int a : g.op(op).outputs) is_output[a] = true;
      for (int a : g.op(op).inputs) is_input[a] = true;
    }

    struct Placed {
      int tensor;
      Bytes addr;
    };
    std::vector<Placed> resident_now;
    std::vector<TensorState> next = state;

    for (int a = 0; a < g.tensor_count(); ++a) {
      const Tensor& tensor = g.tensor(a);
      const TensorState& s = state[a];
      TensorState& n = next[a];
      const PlanEvent* e = event_of[a];

      if (is_output[a] && (!e || e->action != Action::Create)) {
        if (s.created) fail(ErrorCode::MultiCreate, t, {tensor.id}, "created twice");
        fail(ErrorCode::DepViolation, t, {tensor.id}, "output of '" + g.op(op).id + "' not created");
      }
      if (is_input[a] && (!e || (e->action != Action::Preserve && e->action != Action::Retrieve))) {
        if (s.lost) fail(ErrorCode::LostTensor, t, {tensor.id}, "input was dropped without a host copy");
        fail(ErrorCode::DepViolation, t, {tensor.id}, "input of '" + g.op(op).id + "' not resident");
      }

      if (!e) {
        if (s.resident) {
          n.resident = false;
          if (!s.spilled) n.lost = true;
        }
        continue;
      }

      switch (e->action) {
        case Action::Create: {
          if (s.created) fail(ErrorCode::MultiCreate, t, {tensor.id}, "created twice");
          if (!is_output[a]) fail(ErrorCode::DepViolation, t, {tensor.id}, "created outside its producer's timestep");
          if (!e->addr) fail(ErrorCode::ResidencyViolation, t, {tensor.id}, "create without address");
          n.created = true;
          n.resident = true;
          n.addr = *e->addr;
          n.last = Action::Create;
          break;
        }
        case Action::Preserve: {
          if (!s.resident) {
            if (s.lost) fail(ErrorCode::LostTensor, t, {tensor.id}, "preserved after being dropped");
            fail(ErrorCode::ResidencyViolation, t, {tensor.id}, "preserved but not resident at previous timestep");
          }
          if (e->addr && *e->addr != s.addr)
            fail(ErrorCode::AddressDrift, t, {tensor.id},
                 "moved from " + std::to_string(s.addr) + " to " + std::to_string(*e->addr));
          n.resident = true;
          n.last = Action::Preserve;
          break;
        }
        case Action::Spill: {
          if (s.spilled) fail(ErrorCode::MultiSpill, t, {tensor.id}, "spilled more than once");
          if (!s.resident || (s.last != Action::Create && s.last != Action::Preserve))
            fail(ErrorCode::ResidencyViolation, t, {tensor.id}, "spilled but not resident at previous timestep");
          n.resident = false;
          n.spilled = true;
          metrics.non_compulsory_bytes += tensor.size;
          break;
        }
        case Action::Retrieve: {
          if (!s.spilled) {
            if (s.lost) fail(ErrorCode::LostTensor, t, {tensor.id}, "retrieved without a host copy");
            fail(ErrorCode::ResidencyViolation, t, {tensor.id}, "retrieved before any spill");
          }
          if (!e->addr) fail(ErrorCode::ResidencyViolation, t, {tensor.id}, "retrieve without address");
          n.resident = true;
          n.addr = *e->addr;
          n.last = Action::Retrieve;
          metrics.non_compulsory_bytes += tensor.size;
          break;
        }
        case Action::Drop: {
          if (!s.resident) fail(ErrorCode::ResidencyViolation, t, {tensor.id}, "dropped but not resident");
          n.resident = false;
          if (!s.spilled) n.lost = true;
          break;
        }
      }

      Bytes moved = (e->action == Action::Spill || e->action == Action::Retrieve) ? tensor.size : 0;
      metrics.event_log.push_back({t, tensor.id, e->action, moved});
      if (n.resident) resident_now.push_back({a, n.addr});
    }

    Bytes footprint = 0;
    for (const Placed& p : resident_now) {
      const Tensor& tensor = g.tensor(p.tensor);
      if (p.addr < 0 || p.addr + tensor.size > plan.budget)
        fail(ErrorCode::BudgetViolation, t, {tensor.id},
             "occupies [" + std::to_string(p.addr) + "," + std::to_string(p.addr + tensor.size) +
                 ") outside budget " + std::to_string(plan.budget));
      footprint += tensor.size;
    }
    std::sort(resident_now.begin(), resident_now.end(),
              [](const Placed& x, const Placed& y) { return x.addr < y.addr; });
    for (std::size_t i = 1; i < resident_now.size(); ++i) {
      const Placed& lo = resident_now[i - 1];
      const Placed& hi = resident_now[i];
      if (lo.addr + g.tensor(lo.tensor).size > hi.addr)
        fail(ErrorCode::OverlapViolation, t, {g.tensor(lo.tensor).id, g.tensor(hi.tensor).id},
             "address ranges intersect");
    }
    metrics.peak_footprint = std::max(metrics.peak_footprint, footprint);
    state = std::move(next);
  }
  return metrics;
}

std::string metrics_to_json(const TrafficMetrics& m) {
  nlohmann::ordered_json j;
  j["non_compulsory_bytes"] = m.non_compulsory_bytes;
  j["compulsory_bytes"] = m.compulsory_bytes;
  j["peak_footprint"] = m.peak_footprint;
  j["event_log"] = nlohmann::ordered_json::array();
  for (const TrafficEvent& e : m.event_log)
    j["event_log"].push_back({{"t", e.t}, {"tensor", e.tensor}, {"action", std::string(to_string(e.action))},
                              {"bytes", e.bytes}});
  return j.dump(2) + "\n";
}

}  // namespace cosma
