#include "cosma/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cosma/error.hpp"

namespace cosma {

ModeKind mode_kind(const EncodeMode& mode) {
  if (std::holds_alternative<MinAccess>(mode)) return ModeKind::MinAccess;
  if (std::holds_alternative<Mpmf>(mode)) return ModeKind::Mpmf;
  return ModeKind::FixedSchedule;
}

std::string_view to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::MinAccess: return "min_access";
    case ModeKind::Mpmf: return "mpmf";
    case ModeKind::FixedSchedule: return "fixed_schedule";
  }
  return "min_access";
}

std::string sanitize_id(std::string_view id) {
  std::string out(id);
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') c = '_';
  return out;
}

namespace {

LinExpr term(const Slot& s, std::int64_t coef = 1) {
  LinExpr e;
  if (s.is_var())
    e.add(s.var, coef);
  else
    e.add_constant(s.constant * coef);
  return e;
}

LinExpr sum(std::initializer_list<const Slot*> slots) {
  LinExpr e;
  for (const Slot* s : slots) e.add(term(*s));
  return e;
}

const Slot kZero{};

struct Builder {
  const DataflowGraph& g;
  Encoding& enc;
  int T;

  const Slot& at(const std::vector<std::vector<Slot>>& table, int a, int t) const {
    if (t < 0 || t >= T) return kZero;
    return table[a][t];
  }
  LinExpr res(int a, int t) const {
    return sum({&at(enc.create, a, t), &at(enc.preserve, a, t), &at(enc.retrieve, a, t)});
  }
  void constrain(const LinExpr& lhs, Relation rel, const LinExpr& rhs, const char* family) {
    add_linear_constraint(enc.instance, lhs, rel, rhs, family);
  }
};

}  // namespace

Encoding encode(const DataflowGraph& g, const TimestepWindows& w_in, const EncodeMode& mode,
                const EncodeOptions& options) {
  Encoding enc;
  enc.kind = mode_kind(mode);
  const int T = g.timestep_count();
  const int n = g.tensor_count();
  const bool alloc = enc.kind != ModeKind::Mpmf;

  if (options.alignment < 1) throw Error(ErrorCode::InvalidParams, "alignment must be positive");
  enc.alignment = options.alignment;
  enc.free_spill = options.free_spill;
  enc.free_spill.resize(n, false);

  if (const auto* m = std::get_if<MinAccess>(&mode)) enc.budget = m->budget;
  if (const auto* f = std::get_if<FixedSchedule>(&mode)) {
    enc.budget = f->budget;
    if (!g.is_valid_schedule(f->order))
      throw Error(ErrorCode::InvalidOrder, "fixed order is not a dependency-respecting permutation");
    enc.fixed_order = f->order;
  }
  enc.windows = enc.kind == ModeKind::FixedSchedule ? TimestepWindows::for_schedule(g, enc.fixed_order) : w_in;
  const TimestepWindows& w = enc.windows;

  for (const Tensor& t : g.tensors()) {
    if (alloc && t.size % enc.alignment != 0)
      throw Error(ErrorCode::BudgetTooSmall, "size of '" + t.id + "' is not a multiple of the alignment " +
                                                 std::to_string(enc.alignment));
    enc.size_units.push_back(t.size / enc.alignment);
  }
  if (alloc) {
    Bytes min_budget = compute_min_budget(g);
    if (enc.budget < min_budget)
      throw Error(ErrorCode::BudgetTooSmall, "budget " + std::to_string(enc.budget) + " is below M_R = " +
                                                 std::to_string(min_budget));
    enc.budget_units = enc.budget / enc.alignment;
  }

  std::vector<std::string> names;
  {
    std::set<std::string> seen;
    for (const Tensor& t : g.tensors()) {
      names.push_back(sanitize_id(t.id));
      if (!seen.insert(names.back()).second)
        throw Error(ErrorCode::NameCollision, "tensor id '" + t.id + "' collides after sanitization");
    }
  }

  MilpInstance& m = enc.instance;
  m.metadata().mode = std::string(to_string(enc.kind));
  m.metadata().graph = g.name();
  m.metadata().budget = enc.budget;

  auto table = [&] { return std::vector<std::vector<Slot>>(n, std::vector<Slot>(T)); };
  enc.create = table();
  enc.preserve = table();
  enc.spill = table();
  enc.retrieve = table();
  enc.address = table();
  enc.persist = table();

  std::vector<int> fixed_step(g.op_count(), -1);
  for (int t = 0; t < static_cast<int>(enc.fixed_order.size()); ++t) fixed_step[enc.fixed_order[t]] = t;

  const Bytes B = enc.budget_units;
  for (int a = 0; a < n; ++a) {
    const int p = g.producer(a);
    const auto [first, last] = w.tensor_window[a];
    const std::string suffix = names[a] + "_";
    for (int t = first; t <= last; ++t) {
      std::string ts = std::to_string(t);
      if (enc.kind == ModeKind::FixedSchedule)
        enc.create[a][t].constant = fixed_step[p] == t ? 1 : 0;
      else if (t >= w.asap[p] && t <= w.alap[p])
        enc.create[a][t].var = m.add_variable("C_" + suffix + ts, VarDomain::Binary, 0, 1);
      if (t > first) {
        enc.preserve[a][t].var = m.add_variable("P_" + suffix + ts, VarDomain::Binary, 0, 1);
        if (alloc) {
          enc.spill[a][t].var = m.add_variable("S_" + suffix + ts, VarDomain::Binary, 0, 1);
          enc.retrieve[a][t].var = m.add_variable("R_" + suffix + ts, VarDomain::Binary, 0, 1);
        }
      }
      if (alloc) {
        enc.address[a][t].var = m.add_variable("L_" + suffix + ts, VarDomain::Integer, 0, B);
        if (t > first) enc.persist[a][t].var = m.add_variable("V_" + suffix + ts, VarDomain::Binary, 0, 1);
      }
    }
  }

  Builder b{g, enc, T};

  // Per-tensor action rules.
  for (int a = 0; a < n; ++a) {
    const auto [first, last] = w.tensor_window[a];
    LinExpr spills;
    LinExpr creates;
    for (int t = first; t <= last; ++t) {
      const Slot &C = b.at(enc.create, a, t), &P = b.at(enc.preserve, a, t), &S = b.at(enc.spill, a, t),
                 &R = b.at(enc.retrieve, a, t);
      b.constrain(sum({&C, &P, &S, &R}), Relation::LessEq, LinExpr{}.add_constant(1), "single_action");
      b.constrain(term(P), Relation::LessEq, b.res(a, t - 1), "preserve_needs_residency");
      creates.add(term(C));
      if (alloc) {
        b.constrain(term(S), Relation::LessEq, sum({&b.at(enc.create, a, t - 1), &b.at(enc.preserve, a, t - 1)}),
                    "spill_needs_residency");
        spills.add(term(S));
        b.constrain(term(R), Relation::LessEq, spills, "retrieve_needs_spill");
      }
    }
    b.constrain(creates, Relation::Equal, LinExpr{}.add_constant(1), "single_create");
    if (alloc) b.constrain(spills, Relation::LessEq, LinExpr{}.add_constant(1), "single_spill");
  }

  // Operator rules: inputs resident at creation, siblings together, one op per step.
  for (int o = 0; o < g.op_count(); ++o) {
    const Operator& op = g.op(o);
    const int lo = w.asap[o], hi = w.alap[o];
    for (int t = lo; t <= hi; ++t) {
      for (int a : op.outputs)
        for (int in : op.inputs)
          b.constrain(term(b.at(enc.create, a, t)), Relation::LessEq,
                      sum({&b.at(enc.preserve, in, t), &b.at(enc.retrieve, in, t)}), "inputs_resident");
      for (std::size_t k = 1; k < op.outputs.size(); ++k)
        b.constrain(term(b.at(enc.create, op.outputs[k], t)), Relation::Equal,
                    term(b.at(enc.create, op.outputs[0], t)), "siblings_together");
    }
  }
  for (int t = 0; t < T; ++t) {
    LinExpr running;
    for (int o = 0; o < g.op_count(); ++o) running.add(term(b.at(enc.create, g.op(o).outputs[0], t)));
    b.constrain(running, Relation::Equal, LinExpr{}.add_constant(1), "one_op_per_step");
  }

  if (!alloc) {
    Bytes total = 0;
    for (const Tensor& t : g.tensors()) total += t.size;
    enc.peak_var = m.add_variable("Mpeak", VarDomain::Integer, compute_min_budget(g), total);
    for (int t = 0; t < T; ++t) {
      LinExpr live;
      for (int a = 0; a < n; ++a) {
        live.add(term(b.at(enc.create, a, t), g.tensor(a).size));
        live.add(term(b.at(enc.preserve, a, t), g.tensor(a).size));
      }
      b.constrain(live, Relation::LessEq, LinExpr{}.add(enc.peak_var), "peak_footprint");
    }
    m.set_objective({{enc.peak_var, 1}});
    return enc;
  }

  // Allocation: bounds, pairwise no-overlap, address persistence.
  for (int a = 0; a < n; ++a) {
    const auto [first, last] = w.tensor_window[a];
    for (int t = first; t <= last; ++t) {
      b.constrain(term(enc.address[a][t]).add_constant(enc.size_units[a]), Relation::LessEq,
                  LinExpr{}.add_constant(B), "within_budget");
      if (t == first) continue;
      const Slot& L0 = enc.address[a][t - 1];
      const Slot& L1 = enc.address[a][t];
      const Slot& V = enc.persist[a][t];
      // V = 1 iff resident at t-1 and preserved at t; then the address is unchanged.
      b.constrain(term(L0), Relation::LessEq, term(L1).add(term(V, -B)).add_constant(B), "address_persists");
      b.constrain(term(L1), Relation::LessEq, term(L0).add(term(V, -B)).add_constant(B), "address_persists");
      b.constrain(term(V), Relation::GreaterEq, b.res(a, t - 1).add(term(enc.preserve[a][t])).add_constant(-1),
                  "persist_link");
      b.constrain(term(V), Relation::LessEq, b.res(a, t - 1), "persist_link");
      b.constrain(term(V), Relation::LessEq, term(enc.preserve[a][t]), "persist_link");
    }
  }
  for (auto [x, y] : w.overlap_pairs) {
    int a = x, c = y;
    if (g.tensor(c).id < g.tensor(a).id) std::swap(a, c);
    const int lo = std::max(w.tensor_window[a].first, w.tensor_window[c].first);
    const int hi = std::min(w.tensor_window[a].second, w.tensor_window[c].second);
    for (int t = lo; t <= hi; ++t) {
      std::string key = names[a] + "__" + names[c] + "_" + std::to_string(t);
      int u = m.add_variable("u_" + key, VarDomain::Binary, 0, 1);
      int d = m.add_variable("d_" + key, VarDomain::Binary, 0, 1);
      enc.above_below[{a, c, t}] = {u, d};
      const Slot& La = enc.address[a][t];
      const Slot& Lc = enc.address[c][t];
      b.constrain(LinExpr{}.add(u).add(d), Relation::LessEq, LinExpr{}.add_constant(1), "above_or_below");
      b.constrain(LinExpr{}.add(u).add(d), Relation::GreaterEq, b.res(a, t).add(b.res(c, t)).add_constant(-1),
                  "both_resident_ordered");
      // d: a lies below c.  u: a lies above c.
      b.constrain(term(La).add_constant(enc.size_units[a]).add(term(Lc, -1)), Relation::LessEq,
                  LinExpr{}.add_constant(B).add(d, -B), "no_overlap");
      b.constrain(term(Lc).add_constant(enc.size_units[c]).add(term(La, -1)), Relation::LessEq,
                  LinExpr{}.add_constant(B).add(u, -B), "no_overlap");
    }
  }

  std::vector<Term> objective;
  for (int a = 0; a < n; ++a) {
    const Bytes size = g.tensor(a).size;
    for (int t = 0; t < T; ++t) {
      if (enc.spill[a][t].is_var()) objective.push_back({enc.spill[a][t].var, enc.free_spill[a] ? 0 : size});
      if (enc.retrieve[a][t].is_var()) objective.push_back({enc.retrieve[a][t].var, size});
    }
  }
  m.set_objective(std::move(objective));
  return enc;
}

namespace {

Assignment rounded_values(const Encoding& enc, const Assignment& values, double tolerance) {
  const auto& vars = enc.instance.variables();
  if (values.size() != vars.size())
    throw Error(ErrorCode::InconsistentAssignment, "assignment has " + std::to_string(values.size()) +
                                                       " values for " + std::to_string(vars.size()) + " variables");
  Assignment out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double r = std::round(values[i]);
    if (std::abs(values[i] - r) > tolerance)
      throw Error(ErrorCode::NonIntegralSolution, vars[i].name + " = " + std::to_string(values[i]));
    out[i] = r;
  }
  return out;
}

int value_of(const Slot& s, const Assignment& v) {
  return s.is_var() ? static_cast<int>(std::lround(v[s.var])) : s.constant;
}

}  // namespace

std::vector<int> decode_schedule(const DataflowGraph& g, const Encoding& enc, const Assignment& values,
                                 double tolerance) {
  Assignment v = rounded_values(enc, values, tolerance);
  std::vector<int> order;
  for (int t = 0; t < enc.timesteps(); ++t) {
    int chosen = -1;
    for (int o = 0; o < g.op_count(); ++o)
      if (value_of(enc.create[g.op(o).outputs[0]][t], v) == 1) {
        if (chosen != -1)
          throw Error(ErrorCode::InconsistentAssignment, "two operators at timestep " + std::to_string(t));
        chosen = o;
      }
    if (chosen == -1) throw Error(ErrorCode::InconsistentAssignment, "no operator at timestep " + std::to_string(t));
    order.push_back(chosen);
  }
  return order;
}

ExecutionPlan decode(const DataflowGraph& g, const Encoding& enc, const Assignment& values, double tolerance) {
  if (enc.kind == ModeKind::Mpmf)
    throw Error(ErrorCode::InvalidMode, "minimum-peak solutions carry no allocation; use decode_schedule");
  Assignment v = rounded_values(enc, values, tolerance);
  if (auto bad = enc.instance.first_violation(v, 1e-9)) {
    const Constraint& c = enc.instance.constraints()[*bad];
    throw Error(ErrorCode::InconsistentAssignment, "c" + std::to_string(*bad) + " (" + c.family + ") violated");
  }
  if (auto bad = enc.instance.first_domain_violation(v, 1e-9))
    throw Error(ErrorCode::InconsistentAssignment, enc.instance.variables()[*bad].name + " out of bounds");

  ExecutionPlan plan;
  plan.budget = enc.budget;
  const int T = enc.timesteps();
  for (int o : decode_schedule(g, enc, v, tolerance)) plan.schedule.emplace_back(g.op(o).id);
  plan.events.resize(T);
  for (int t = 0; t < T; ++t) {
    for (int a = 0; a < g.tensor_count(); ++a) {
      const std::string& id = g.tensor(a).id;
      auto addr = [&] { return static_cast<Bytes>(value_of(enc.address[a][t], v)) * enc.alignment; };
      if (value_of(enc.create[a][t], v)) {
        plan.events[t].push_back({id, Action::Create, addr()});
      } else if (value_of(enc.preserve[a][t], v)) {
        plan.events[t].push_back({id, Action::Preserve, addr()});
      } else if (value_of(enc.retrieve[a][t], v)) {
        plan.events[t].push_back({id, Action::Retrieve, addr()});
      } else if (value_of(enc.spill[a][t], v)) {
        plan.events[t].push_back({id, Action::Spill, std::nullopt});
      } else if (t > 0) {
        const int was = value_of(enc.create[a][t - 1], v) + value_of(enc.preserve[a][t - 1], v) +
                        value_of(enc.retrieve[a][t - 1], v);
        if (was) plan.events[t].push_back({id, Action::Drop, std::nullopt});
      }
    }
  }
  return plan;
}

Assignment assignment_from_plan(const DataflowGraph& g, const Encoding& enc, const ExecutionPlan& plan) {
  const int T = enc.timesteps();
  const int n = g.tensor_count();
  if (plan.timestep_count() != T)
    throw Error(ErrorCode::InconsistentAssignment, "plan length differs from the encoding horizon");
  Assignment v(enc.instance.variables().size(), 0.0);
  std::vector<std::vector<int>> resident(n, std::vector<int>(T, 0));
  std::vector<std::vector<Bytes>> where(n, std::vector<Bytes>(T, 0));

  auto set = [&](const Slot& s, int value, int a, int t, const char* what) {
    if (s.is_var())
      v[s.var] = value;
    else if (s.constant != value)
      throw Error(ErrorCode::InconsistentAssignment,
                  std::string(what) + " of '" + g.tensor(a).id + "' at t=" + std::to_string(t) +
                      " is outside the encoded windows");
  };

  for (int t = 0; t < T; ++t) {
    if (!plan.schedule[t]) throw Error(ErrorCode::InconsistentAssignment, "transfer steps cannot be encoded");
    std::vector<bool> created(n, false);
    for (const PlanEvent& e : plan.events[t]) {
      const int a = g.tensor_index(e.tensor);
      switch (e.action) {
        case Action::Create: set(enc.create[a][t], 1, a, t, "create"); created[a] = true; break;
        case Action::Preserve: set(enc.preserve[a][t], 1, a, t, "preserve"); break;
        case Action::Spill: set(enc.spill[a][t], 1, a, t, "spill"); break;
        case Action::Retrieve: set(enc.retrieve[a][t], 1, a, t, "retrieve"); break;
        case Action::Drop: break;
      }
      if (e.action == Action::Create || e.action == Action::Preserve || e.action == Action::Retrieve) {
        resident[a][t] = 1;
        where[a][t] = e.addr.value_or(t > 0 ? where[a][t - 1] : 0);
        const Slot& L = enc.address[a][t];
        if (!L.is_var()) throw Error(ErrorCode::InconsistentAssignment, "no address variable for '" + e.tensor + "'");
        if (where[a][t] % enc.alignment != 0)
          throw Error(ErrorCode::InconsistentAssignment, "address of '" + e.tensor + "' is not aligned");
        v[L.var] = static_cast<double>(where[a][t] / enc.alignment);
      }
    }
    for (int a = 0; a < n; ++a)
      if (!created[a] && enc.create[a][t].constant == 1)
        throw Error(ErrorCode::InconsistentAssignment, "fixed order requires creating '" + g.tensor(a).id + "'");
  }
  for (int a = 0; a < n; ++a)
    for (int t = 1; t < T; ++t) {
      const Slot& V = enc.persist[a][t];
      if (V.is_var() && resident[a][t - 1] && enc.preserve[a][t].is_var() && v[enc.preserve[a][t].var] == 1)
        v[V.var] = 1;
    }
  for (const auto& [key, ud] : enc.above_below) {
    auto [a, c, t] = key;
    if (resident[a][t] && resident[c][t]) {
      if (where[a][t] > where[c][t])
        v[ud.first] = 1;
      else
        v[ud.second] = 1;
    }
  }
  return v;
}

Bytes schedule_peak(const DataflowGraph& g, const std::vector<int>& order) {
  const int T = static_cast<int>(order.size());
  std::vector<int> step(g.op_count());
  for (int t = 0; t < T; ++t) step[order[t]] = t;
  std::vector<Bytes> live(T, 0);
  for (int a = 0; a < g.tensor_count(); ++a) {
    int from = step[g.producer(a)], to = from;
    for (int c : g.consumers(a)) to = std::max(to, step[c]);
    for (int t = from; t <= to; ++t) live[t] += g.tensor(a).size;
  }
  return live.empty() ? 0 : *std::max_element(live.begin(), live.end());
}

Assignment assignment_from_schedule(const DataflowGraph& g, const Encoding& enc, const std::vector<int>& order) {
  const int T = static_cast<int>(order.size());
  Assignment v(enc.instance.variables().size(), 0.0);
  std::vector<int> step(g.op_count());
  for (int t = 0; t < T; ++t) step[order[t]] = t;
  auto set = [&](const Slot& s, const Tensor& tensor, int t) {
    if (s.is_var())
      v[s.var] = 1;
    else if (s.constant != 1)
      throw Error(ErrorCode::InconsistentAssignment,
                  "'" + tensor.id + "' at t=" + std::to_string(t) + " is outside the encoded windows");
  };
  for (int a = 0; a < g.tensor_count(); ++a) {
    int from = step[g.producer(a)], to = from;
    for (int c : g.consumers(a)) to = std::max(to, step[c]);
    set(enc.create[a][from], g.tensor(a), from);
    for (int t = from + 1; t <= to; ++t) set(enc.preserve[a][t], g.tensor(a), t);
  }
  if (enc.peak_var >= 0) v[enc.peak_var] = static_cast<double>(schedule_peak(g, order));
  return v;
}

}  // namespace cosma
