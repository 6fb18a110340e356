#include "cosma/baselines.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "cosma/error.hpp"
#include "cosma/pipeline.hpp"

namespace cosma {

std::string_view to_string(Policy policy) { return policy == Policy::Belady ? "belady" : "greedy"; }

Policy policy_from_string(std::string_view text) {
  if (text == "belady") return Policy::Belady;
  if (text == "greedy") return Policy::Greedy;
  throw Error(ErrorCode::InvalidParams, "unknown policy '" + std::string(text) + "'");
}

std::vector<int> default_schedule(const DataflowGraph& g) { return g.default_schedule(); }

std::vector<int> mpmf_schedule(const DataflowGraph& g, const SolverConfig& cfg) { return solve_mpmf(g, cfg).order; }

bool AllocatorState::contains(int tensor) const {
  return std::any_of(live.begin(), live.end(), [&](const Block& b) { return b.tensor == tensor; });
}

Bytes AllocatorState::base_of(int tensor) const {
  for (const Block& b : live)
    if (b.tensor == tensor) return b.base;
  throw Error(ErrorCode::DanglingReference, "tensor is not allocated");
}

void AllocatorState::release(int tensor) {
  live.erase(std::remove_if(live.begin(), live.end(), [&](const Block& b) { return b.tensor == tensor; }),
             live.end());
}

void AllocatorState::place(int tensor, Bytes base, Bytes size) {
  Block b{tensor, base, size};
  live.insert(std::upper_bound(live.begin(), live.end(), b,
                               [](const Block& x, const Block& y) { return x.base < y.base; }),
              b);
}

Bytes linear_allocate(AllocatorState& state, int tensor, Bytes size) {
  Bytes cursor = 0;
  for (const auto& b : state.live) {
    if (b.base - cursor >= size) break;
    cursor = std::max(cursor, b.base + b.size);
  }
  if (cursor + size > state.budget)
    throw Error(ErrorCode::NoSpace, "no hole of " + std::to_string(size) + " bytes");
  state.place(tensor, cursor, size);
  return cursor;
}

namespace {

constexpr int kNever = std::numeric_limits<int>::max();

std::optional<Bytes> highest_fit(const AllocatorState& state, Bytes size) {
  std::optional<Bytes> best;
  Bytes cursor = 0;
  for (const auto& b : state.live) {
    if (b.base - cursor >= size) best = b.base - size;
    cursor = std::max(cursor, b.base + b.size);
  }
  if (state.budget - cursor >= size) best = state.budget - size;
  return best;
}

// Restart hints for the rare schedules where online first fit paints itself
// into a corner even though the budget covers every single operator.
struct Hints {
  std::map<int, int> spill_at;  // tensor -> step at which it is written out early
  std::set<int> top;            // tensors placed at the highest free base
  std::set<int> flush;          // steps preceded by a transfer step that empties memory
};

struct StuckAt {
  int t;
  std::vector<int> blockers;  // never-written inputs that pinned memory
};

class Simulation {
 public:
  Simulation(const DataflowGraph& g, const std::vector<int>& schedule, Bytes budget, Policy policy,
             const Hints& hints)
      : g_(g), schedule_(schedule), policy_(policy), hints_(hints), spilled_(g.tensor_count(), false),
        uses_(g.tensor_count()), last_use_(g.tensor_count(), -1) {
    mem_.budget = budget;
    std::vector<int> step(g.op_count());
    for (int t = 0; t < static_cast<int>(schedule.size()); ++t) step[schedule[t]] = t;
    for (int a = 0; a < g.tensor_count(); ++a) {
      for (int c : g.consumers(a)) uses_[a].push_back(step[c]);
      std::sort(uses_[a].begin(), uses_[a].end());
      last_use_[a] = uses_[a].empty() ? step[g.producer(a)] : uses_[a].back();
    }
  }

  ExecutionPlan run() {
    ExecutionPlan plan;
    plan.budget = mem_.budget;
    for (int t = 0; t < static_cast<int>(schedule_.size()); ++t) {
      if (hints_.flush.count(t)) {
        plan.schedule.emplace_back(std::nullopt);
        plan.events.push_back(flush(t));
      }
      events_.clear();
      run_step(t);
      plan.schedule.emplace_back(g_.op(schedule_[t]).id);
      std::vector<PlanEvent> step;
      for (auto& [a, e] : events_) step.push_back(e);
      plan.events.push_back(std::move(step));
    }
    return plan;
  }

 private:
  int next_use(int a, int t) const {
    auto it = std::upper_bound(uses_[a].begin(), uses_[a].end(), t);
    return it == uses_[a].end() ? kNever : *it;
  }

  bool evictable(int a) const { return mem_.contains(a) && !events_.count(a); }

  void evict(int a) {
    mem_.release(a);
    events_[a] = {g_.tensor(a).id, spilled_[a] ? Action::Drop : Action::Spill, std::nullopt};
    spilled_[a] = true;
  }

  Bytes victim_cost(int a) const { return (spilled_[a] ? 1 : 2) * g_.tensor(a).size; }

  std::vector<int> evictables() const {
    std::vector<int> out;
    for (const auto& b : mem_.live)
      if (!events_.count(b.tensor)) out.push_back(b.tensor);
    return out;
  }

  bool make_room(int t, Bytes size) {
    if (policy_ == Policy::Belady) {
      for (;;) {
        std::vector<int> cands = evictables();
        if (cands.empty()) return false;
        int victim = *std::min_element(cands.begin(), cands.end(), [&](int x, int y) {
          int nx = next_use(x, t), ny = next_use(y, t);
          if (nx != ny) return nx > ny;
          if (g_.tensor(x).size != g_.tensor(y).size) return g_.tensor(x).size > g_.tensor(y).size;
          return g_.tensor(x).id < g_.tensor(y).id;
        });
        evict(victim);
        if (fits(size)) return true;
      }
    }
    // Greedy: the hole position whose evictions cost least now and later.
    // Between consecutive breakpoints the overlapped set is constant, so the
    // lowest base of each stretch is a breakpoint.
    std::vector<Bytes> starts{0, mem_.budget - size};
    for (const auto& b : mem_.live) {
      starts.push_back(b.base + b.size);
      starts.push_back(b.base - size + 1);
    }
    std::optional<std::pair<Bytes, Bytes>> best;  // (cost, base)
    for (Bytes base : starts) {
      if (base < 0 || base + size > mem_.budget) continue;
      Bytes cost = 0;
      bool ok = true;
      for (const auto& b : mem_.live) {
        if (b.base >= base + size || b.base + b.size <= base) continue;
        if (!evictable(b.tensor)) {
          ok = false;
          break;
        }
        cost += victim_cost(b.tensor);
      }
      if (ok && (!best || std::make_pair(cost, base) < *best)) best = std::make_pair(cost, base);
    }
    if (!best) return false;
    std::vector<int> victims;
    for (const auto& b : mem_.live)
      if (b.base < best->second + size && b.base + b.size > best->second) victims.push_back(b.tensor);
    for (int v : victims) evict(v);
    return true;
  }

  bool fits(Bytes size) const {
    AllocatorState probe = mem_;
    try {
      linear_allocate(probe, -1, size);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  std::optional<Bytes> try_place(int a, bool top) {
    Bytes size = g_.tensor(a).size;
    if (top) {
      if (auto base = highest_fit(mem_, size)) {
        mem_.place(a, *base, size);
        return base;
      }
      return std::nullopt;
    }
    if (!fits(size)) return std::nullopt;
    return linear_allocate(mem_, a, size);
  }

  // Everything leaves; live tensors without a host copy are written out. The
  // next operator then starts from empty memory, where M_R always fits.
  std::vector<PlanEvent> flush(int t) {
    std::vector<PlanEvent> out;
    for (const auto& b : std::vector(mem_.live)) {
      const int a = b.tensor;
      mem_.release(a);
      const bool needed = last_use_[a] >= t;
      out.push_back({g_.tensor(a).id, needed && !spilled_[a] ? Action::Spill : Action::Drop, std::nullopt});
      if (needed) spilled_[a] = true;
    }
    return out;
  }

  void record(int a, Action action, Bytes base) { events_[a] = {g_.tensor(a).id, action, base}; }

  void run_step(int t) {
    const Operator& op = g_.op(schedule_[t]);
    // Dead tensors leave first.
    for (const auto& b : std::vector(mem_.live))
      if (last_use_[b.tensor] < t) {
        mem_.release(b.tensor);
        events_[b.tensor] = {g_.tensor(b.tensor).id, Action::Drop, std::nullopt};
      }
    for (auto [a, k] : hints_.spill_at)
      if (k == t && mem_.contains(a) && !spilled_[a] &&
          std::find(op.inputs.begin(), op.inputs.end(), a) == op.inputs.end())
        evict(a);

    std::vector<int> pending;  // (tensor) retrieves, then outputs
    for (int a : op.inputs) {
      if (mem_.contains(a))
        record(a, Action::Preserve, mem_.base_of(a));
      else
        pending.push_back(a);
    }
    for (int a : op.outputs) pending.push_back(a);

    for (std::size_t i = 0; i < pending.size(); ++i) {
      int a = pending[i];
      bool is_output = std::find(op.outputs.begin(), op.outputs.end(), a) != op.outputs.end();
      Action action = is_output ? Action::Create : Action::Retrieve;
      bool top = is_output && hints_.top.count(a);
      auto base = try_place(a, top);
      if (!base && make_room(t, g_.tensor(a).size)) base = try_place(a, false);
      if (!base) {
        compact(t, op, std::vector<int>(pending.begin() + static_cast<long>(i), pending.end()));
        break;
      }
      record(a, action, *base);
    }

    for (const auto& b : mem_.live)
      if (!events_.count(b.tensor)) record(b.tensor, Action::Preserve, b.base);
  }

  // Last resort inside a step: clear everything that may move and re-place it
  // largest first. Host-backed inputs are fetched again at their new address.
  void compact(int t, const Operator& op, std::vector<int> pending) {
    for (int a : evictables()) evict(a);
    std::vector<int> blockers;
    for (const auto& b : std::vector(mem_.live)) {
      auto it = events_.find(b.tensor);
      bool movable = it->second.action != Action::Preserve || spilled_[b.tensor];
      if (!movable) {
        blockers.push_back(b.tensor);
        continue;
      }
      mem_.release(b.tensor);
      events_.erase(it);
      pending.push_back(b.tensor);
    }
    std::sort(pending.begin(), pending.end(), [&](int x, int y) {
      if (g_.tensor(x).size != g_.tensor(y).size) return g_.tensor(x).size > g_.tensor(y).size;
      return g_.tensor(x).id < g_.tensor(y).id;
    });
    for (int a : pending) {
      auto base = try_place(a, false);
      if (!base) throw StuckAt{t, blockers};
      bool is_output = std::find(op.outputs.begin(), op.outputs.end(), a) != op.outputs.end();
      record(a, is_output ? Action::Create : Action::Retrieve, *base);
    }
  }

  const DataflowGraph& g_;
  const std::vector<int>& schedule_;
  Policy policy_;
  const Hints& hints_;
  AllocatorState mem_;
  std::vector<bool> spilled_;
  std::vector<std::vector<int>> uses_;
  std::vector<int> last_use_;
  std::map<int, PlanEvent> events_;
};

}  // namespace

ExecutionPlan run_baseline(const DataflowGraph& g, const std::vector<int>& schedule, Bytes budget, Policy policy) {
  if (!g.is_valid_schedule(schedule)) throw Error(ErrorCode::InvalidOrder, "baseline schedule is not valid");
  if (budget < compute_min_budget(g))
    throw Error(ErrorCode::BudgetTooSmall, "budget " + std::to_string(budget) + " is below M_R");
  std::vector<int> step(g.op_count());
  for (int t = 0; t < static_cast<int>(schedule.size()); ++t) step[schedule[t]] = t;

  Hints hints;
  for (int attempt = 0; attempt <= 4 * g.tensor_count() + g.op_count(); ++attempt) {
    try {
      return Simulation(g, schedule, budget, policy, hints).run();
    } catch (const StuckAt& stuck) {
      bool added = false;
      for (int f : stuck.blockers) {
        if (!hints.spill_at.count(f)) {
          std::vector<int> uses;
          for (int c : g.consumers(f)) uses.push_back(step[c]);
          for (int k = stuck.t - 1; k > step[g.producer(f)]; --k)
            if (std::find(uses.begin(), uses.end(), k) == uses.end()) {
              hints.spill_at[f] = k;
              added = true;
              break;
            }
          if (added) break;
        }
        if (!hints.top.count(f)) {
          hints.top.insert(f);
          added = true;
          break;
        }
      }
      if (!added) {
        if (hints.flush.count(stuck.t))
          throw Error(ErrorCode::Stuck, "first-fit allocation cannot place the operator at timestep " +
                                            std::to_string(stuck.t));
        hints.flush.insert(stuck.t);
      }
    }
  }
  throw Error(ErrorCode::Stuck, "restart limit reached");
}

}  // namespace cosma
