// Exact search over execution plans for tiny graphs. Serves as the oracle the
// MILP encoding is checked against, so it deliberately works on plans, not on
// the MILP.
//
// At each timestep: pick a ready operator; every resident tensor that is not
// an input of it is kept, or evicted (spill if it has no host copy yet,
// otherwise dropped for free); host-backed inputs may be kept or re-fetched to
// a new address; host-only inputs are fetched. Dead tensors are dropped at the
// first step after their last use. Fetches happen only at consumer steps:
// fetching earlier costs the same and only occupies more memory.
//
// Placement tries every feasible base cell for tensors that outlive the step.
// Checking only "event points" (0 and the ends of allocated blocks) is not
// enough when blocks are placed one after another: with 4 cells, a 1-cell
// block at 0 and a 2-cell block that must end up at [2,4) for a later
// neighbour, neither 1 nor 0 is the right base. Tensors that die at the end of
// the step only need some feasible base, so the first one found is used.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>

#include "cosma/error.hpp"
#include "cosma/solver.hpp"

namespace cosma {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
constexpr std::size_t kMemoCap = 4'000'000;

enum State : std::uint8_t { Unborn, Fresh, Backed, HostOnly, Gone };

std::uint64_t block(int base, int size) {
  std::uint64_t bits = size >= 64 ? ~0ULL : ((1ULL << size) - 1);
  return bits << base;
}

class PlanSearch {
 public:
  PlanSearch(const DataflowGraph& g, const Encoding& enc, double time_limit)
      : g_(g), enc_(enc), T_(g.timestep_count()), n_(g.tensor_count()), B_(static_cast<int>(enc.budget_units)),
        deadline_(Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(time_limit))) {
    size_.resize(n_);
    for (int a = 0; a < n_; ++a) size_[a] = static_cast<int>(enc.size_units[a]);
    state_.assign(n_, Unborn);
    addr_.assign(n_, 0);
    rem_.resize(n_);
    for (int a = 0; a < n_; ++a) rem_[a] = static_cast<int>(g.consumers(a).size());
    steps_.resize(T_);
  }

  bool run() {
    dfs(0, 0, 0);
    return best_ != kInf;
  }
  bool timed_out() const { return timed_out_; }
  std::int64_t best() const { return best_; }

  ExecutionPlan plan() const {
    ExecutionPlan p;
    p.budget = enc_.budget;
    for (const Step& s : best_steps_) {
      p.schedule.emplace_back(g_.op(s.op).id);
      p.events.push_back(s.events);
    }
    return p;
  }

 private:
  struct Step {
    int op = -1;
    std::vector<PlanEvent> events;
  };

  Bytes spill_cost(int a) const { return enc_.free_spill[a] ? 0 : g_.tensor(a).size; }
  Bytes fetch_cost(int a) const { return g_.tensor(a).size; }
  bool resident(int a) const { return state_[a] == Fresh || state_[a] == Backed; }
  Bytes addr_bytes(int a) const { return static_cast<Bytes>(addr_[a]) * enc_.alignment; }

  std::string key(std::uint64_t done, bool mirrored) const {
    std::string k(reinterpret_cast<const char*>(&done), sizeof done);
    for (int a = 0; a < n_; ++a) {
      k.push_back(static_cast<char>(state_[a]));
      int at = 0;
      if (resident(a)) at = mirrored ? B_ - addr_[a] - size_[a] : addr_[a];
      k.push_back(static_cast<char>(at));
    }
    return k;
  }

  // False when this state was already reached at no higher cost.
  bool remember(std::uint64_t done, std::int64_t cost) {
    std::string k = std::min(key(done, false), key(done, true));
    auto it = memo_.find(k);
    if (it != memo_.end()) {
      if (it->second <= cost) return false;
      it->second = cost;
    } else if (memo_.size() < kMemoCap) {
      memo_.emplace(std::move(k), cost);
    }
    return true;
  }

  bool out_of_time() {
    if (timed_out_) return true;
    if ((++nodes_ & 0xfff) == 0 && Clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  void dfs(int t, std::uint64_t done, std::int64_t cost) {
    if (out_of_time()) return;
    if (t == T_) {
      if (cost < best_) {
        best_ = cost;
        best_steps_ = steps_;
      }
      return;
    }
    // Tensors whose last consumer already ran leave memory now.
    std::vector<State> saved_state = state_;
    std::vector<PlanEvent> dead_events;
    std::int64_t bound = cost;
    for (int a = 0; a < n_; ++a) {
      if (rem_[a] > 0) {
        if (state_[a] == HostOnly) bound += fetch_cost(a);
        continue;
      }
      if (resident(a)) dead_events.push_back({g_.tensor(a).id, Action::Drop, std::nullopt});
      if (state_[a] != Unborn) state_[a] = Gone;
    }
    if (bound >= best_ || !remember(done, cost)) {
      state_ = saved_state;
      return;
    }

    for (int o : candidates(t, done)) try_op(t, done, cost, o, dead_events);
    state_ = saved_state;
  }

  std::vector<int> candidates(int t, std::uint64_t done) const {
    if (enc_.kind == ModeKind::FixedSchedule) return {enc_.fixed_order[t]};
    std::vector<int> ready;
    for (int o : g_.default_schedule()) {
      if (done >> o & 1) continue;
      bool ok = true;
      for (int in : g_.op(o).inputs) ok = ok && (done >> g_.producer(in) & 1);
      if (ok) ready.push_back(o);
    }
    return ready;
  }

  void try_op(int t, std::uint64_t done, std::int64_t cost, int o, const std::vector<PlanEvent>& dead_events) {
    const Operator& op = g_.op(o);
    std::vector<bool> is_input(n_, false);
    for (int a : op.inputs) is_input[a] = true;

    std::vector<int> others;      // evictable residents
    std::vector<int> backed_in;   // host-backed resident inputs (may be re-fetched)
    std::vector<int> fetch_in;    // host-only inputs
    std::vector<int> fresh_in;    // inputs that must stay in place
    for (int a = 0; a < n_; ++a) {
      if (is_input[a]) {
        if (state_[a] == Fresh) fresh_in.push_back(a);
        else if (state_[a] == Backed) backed_in.push_back(a);
        else if (state_[a] == HostOnly) fetch_in.push_back(a);
        else return;  // lost or unborn input
      } else if (resident(a)) {
        others.push_back(a);
      }
    }

    const int k = static_cast<int>(others.size());
    const int h = static_cast<int>(backed_in.size());
    for (std::uint32_t evict = 0; evict < (1u << k); ++evict) {
      std::int64_t evict_cost = 0;
      std::uint64_t occ = 0;
      int used = 0;
      for (int i = 0; i < k; ++i) {
        int a = others[i];
        if (evict >> i & 1) {
          if (state_[a] == Fresh) {
            if (rem_[a] == 0) { evict_cost = kInf; break; }
            evict_cost += spill_cost(a);
          }
        } else {
          occ |= block(addr_[a], size_[a]);
          used += size_[a];
        }
      }
      if (evict_cost == kInf || cost + evict_cost >= best_) continue;
      for (int a : fresh_in) {
        occ |= block(addr_[a], size_[a]);
        used += size_[a];
      }
      for (std::uint32_t move = 0; move < (1u << h); ++move) {
        std::vector<int> place;
        std::int64_t step_cost = cost + evict_cost;
        std::uint64_t occ2 = occ;
        int used2 = used;
        for (int i = 0; i < h; ++i) {
          int a = backed_in[i];
          if (move >> i & 1) {
            place.push_back(a);
            step_cost += fetch_cost(a);
          } else {
            occ2 |= block(addr_[a], size_[a]);
            used2 += size_[a];
          }
        }
        for (int a : fetch_in) {
          place.push_back(a);
          step_cost += fetch_cost(a);
        }
        for (int a : op.outputs) place.push_back(a);
        for (int a : place) used2 += size_[a];
        if (used2 > B_ || step_cost >= best_) continue;

        // Long-lived blocks first (all bases), then the ones that die this step.
        std::stable_partition(place.begin(), place.end(), [&](int a) { return outlives_step(a, is_input[a]); });
        Choice c{t, done, o, step_cost, evict, &others, &dead_events, place, {}, {}};
        c.bases.assign(place.size(), -1);
        for (int a : place) c.long_lived.push_back(outlives_step(a, is_input[a]));
        place_and_recurse(c, 0, occ2);
        if (timed_out_) return;
      }
    }
  }

  bool outlives_step(int a, bool input) const {
    int left = rem_[a] - (input ? 1 : 0);
    return left > 0;
  }

  struct Choice {
    int t;
    std::uint64_t done;
    int op;
    std::int64_t cost;
    std::uint32_t evict;  // bit i: others[i] leaves memory
    const std::vector<int>* others;
    const std::vector<PlanEvent>* dead_events;
    std::vector<int> place;  // tensors that get a (new) base this step
    std::vector<int> bases;
    std::vector<bool> long_lived;
  };

  // True when the rest of the placement succeeded at least once; short-lived
  // blocks stop at their first fit.
  bool place_and_recurse(Choice& c, std::size_t i, std::uint64_t occ) {
    if (i == c.place.size()) {
      descend(c);
      return true;
    }
    const int a = c.place[i];
    bool any = false;
    for (int base = 0; base + size_[a] <= B_; ++base) {
      std::uint64_t bits = block(base, size_[a]);
      if (occ & bits) continue;
      c.bases[i] = base;
      any = place_and_recurse(c, i + 1, occ | bits) || any;
      if (timed_out_ || (any && !c.long_lived[i])) break;
    }
    return any;
  }

  void descend(const Choice& c) {
    const int t = c.t, o = c.op;
    const std::vector<int>& others = *c.others;
    const std::vector<int>& place = c.place;
    const Operator& op = g_.op(o);
    std::vector<State> saved_state = state_;
    std::vector<std::uint8_t> saved_addr = addr_;
    std::vector<int> saved_rem = rem_;

    std::vector<PlanEvent> events = *c.dead_events;
    for (int i = 0; i < static_cast<int>(others.size()); ++i) {
      int a = others[i];
      if (c.evict >> i & 1) {
        events.push_back({g_.tensor(a).id, state_[a] == Fresh ? Action::Spill : Action::Drop, std::nullopt});
        state_[a] = HostOnly;
      } else {
        events.push_back({g_.tensor(a).id, Action::Preserve, addr_bytes(a)});
      }
    }
    std::vector<bool> placed(n_, false);
    for (std::size_t i = 0; i < place.size(); ++i) {
      int a = place[i];
      placed[a] = true;
      addr_[a] = static_cast<std::uint8_t>(c.bases[i]);
      bool is_output = std::find(op.outputs.begin(), op.outputs.end(), a) != op.outputs.end();
      events.push_back({g_.tensor(a).id, is_output ? Action::Create : Action::Retrieve, addr_bytes(a)});
      state_[a] = is_output ? Fresh : Backed;
    }
    for (int a : op.inputs) {
      if (!placed[a]) events.push_back({g_.tensor(a).id, Action::Preserve, addr_bytes(a)});
      --rem_[a];
    }
    std::sort(events.begin(), events.end(), [&](const PlanEvent& x, const PlanEvent& y) {
      return g_.tensor_index(x.tensor) < g_.tensor_index(y.tensor);
    });
    steps_[t] = {o, std::move(events)};

    dfs(t + 1, c.done | (1ULL << o), c.cost);

    state_ = std::move(saved_state);
    addr_ = std::move(saved_addr);
    rem_ = std::move(saved_rem);
  }

  const DataflowGraph& g_;
  const Encoding& enc_;
  int T_, n_, B_;
  Clock::time_point deadline_;
  std::vector<int> size_;
  std::vector<State> state_;
  std::vector<std::uint8_t> addr_;
  std::vector<int> rem_;
  std::vector<Step> steps_;
  std::vector<Step> best_steps_;
  std::int64_t best_ = kInf;
  std::unordered_map<std::string, std::int64_t> memo_;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
};

class PeakSearch {
 public:
  explicit PeakSearch(const DataflowGraph& g) : g_(g), rem_(g.tensor_count()) {
    for (int a = 0; a < g.tensor_count(); ++a) rem_[a] = static_cast<int>(g.consumers(a).size());
  }

  void run() { dfs(0, 0, 0); }
  Bytes best() const { return best_; }
  const std::vector<int>& order() const { return best_order_; }

 private:
  void dfs(int t, std::uint64_t done, Bytes peak) {
    if (peak >= best_) return;
    if (t == g_.op_count()) {
      best_ = peak;
      best_order_ = order_;
      return;
    }
    auto [it, fresh] = memo_.try_emplace(done, peak);
    if (!fresh) {
      if (it->second <= peak) return;
      it->second = peak;
    }
    for (int o : g_.default_schedule()) {
      if (done >> o & 1) continue;
      bool ready = true;
      for (int in : g_.op(o).inputs) ready = ready && (done >> g_.producer(in) & 1);
      if (!ready) continue;
      // Live now: produced earlier with an unexecuted consumer, plus o's outputs.
      Bytes live = 0;
      for (int a = 0; a < g_.tensor_count(); ++a)
        if ((done >> g_.producer(a) & 1) && rem_[a] > 0) live += g_.tensor(a).size;
      for (int a : g_.op(o).outputs) live += g_.tensor(a).size;
      for (int in : g_.op(o).inputs) --rem_[in];
      order_.push_back(o);
      dfs(t + 1, done | (1ULL << o), std::max(peak, live));
      order_.pop_back();
      for (int in : g_.op(o).inputs) ++rem_[in];
    }
  }

  const DataflowGraph& g_;
  std::vector<int> rem_;
  std::vector<int> order_, best_order_;
  Bytes best_ = std::numeric_limits<Bytes>::max();
  std::unordered_map<std::uint64_t, Bytes> memo_;
};

}  // namespace

SolveResult solve_internal(const DataflowGraph& g, const Encoding& enc, const SolverConfig& cfg) {
  const auto& caps = cfg.internal_caps;
  if (g.op_count() > caps.max_ops || g.op_count() > 63)
    throw Error(ErrorCode::TooLarge, std::to_string(g.op_count()) + " operators exceed the internal cap of " +
                                         std::to_string(caps.max_ops));
  if (enc.kind != ModeKind::Mpmf && (enc.budget_units > caps.max_cells || enc.budget_units > 64))
    throw Error(ErrorCode::TooLarge, std::to_string(enc.budget_units) + " cells exceed the internal cap of " +
                                         std::to_string(caps.max_cells));

  auto start = Clock::now();
  SolveResult r;
  if (enc.kind == ModeKind::Mpmf) {
    PeakSearch search(g);
    search.run();
    r.assignment = assignment_from_schedule(g, enc, search.order());
    r.status = SolveStatus::Optimal;
  } else {
    PlanSearch search(g, enc, cfg.time_limit);
    bool found = search.run();
    r.solve_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (!found) {
      r.status = search.timed_out() ? SolveStatus::Timeout : SolveStatus::Infeasible;
      return r;
    }
    r.status = search.timed_out() ? SolveStatus::Feasible : SolveStatus::Optimal;
    r.assignment = assignment_from_plan(g, enc, search.plan());
  }
  r.solve_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (auto bad = enc.instance.first_violation(r.assignment, 1e-9))
    throw Error(ErrorCode::SolverError, "internal plan violates constraint c" + std::to_string(*bad) + " (" +
                                            enc.instance.constraints()[*bad].family + ")");
  r.objective = integral_objective(enc.instance, r.assignment, cfg.tolerance);
  return r;
}

}  // namespace cosma
