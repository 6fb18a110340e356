#include "cosma/partition.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "cosma/error.hpp"
#include "cosma/pipeline.hpp"
#include "json.hpp"

namespace cosma {

namespace {

// Piece index of every operator (virtual sources follow their first consumer).
std::vector<int> assign_pieces(const DataflowGraph& g, const PartitionSpec& spec, int& pieces) {
  const int n = g.op_count();
  auto pred = transitive_predecessors(g);
  std::vector<int> piece(n, -1);
  std::set<int> seen_breaks;
  int index = 0;
  for (const std::string& id : spec.breaks) {
    auto b = g.find_op(id);
    if (!b || g.op(*b).is_virtual_source)
      throw Error(ErrorCode::InvalidBreaks, "'" + id + "' is not an operator of the graph");
    if (!seen_breaks.insert(*b).second) throw Error(ErrorCode::InvalidBreaks, "'" + id + "' listed twice");
    bool any = false;
    for (int o = 0; o < n; ++o)
      if (!g.op(o).is_virtual_source && piece[o] == -1 && (o == *b || pred[*b][o])) {
        piece[o] = index;
        any = true;
      }
    if (!any) throw Error(ErrorCode::InvalidBreaks, "break '" + id + "' leaves an empty sub-graph");
    ++index;
  }
  bool rest = false;
  for (int o = 0; o < n; ++o)
    if (!g.op(o).is_virtual_source && piece[o] == -1) {
      piece[o] = index;
      rest = true;
    }
  pieces = index + (rest ? 1 : 0);
  for (int o = 0; o < n; ++o) {
    if (!g.op(o).is_virtual_source) continue;
    int first = pieces;
    for (int c : g.consumers(g.op(o).outputs[0])) first = std::min(first, piece[c]);
    piece[o] = first == pieces ? 0 : first;
  }
  return piece;
}

}  // namespace

std::vector<SubGraph> split(const DataflowGraph& g, const PartitionSpec& spec) {
  int pieces = 0;
  std::vector<int> piece = assign_pieces(g, spec, pieces);
  std::vector<int> closing(pieces, -1);
  for (std::size_t i = 0; i < spec.breaks.size(); ++i) closing[i] = g.op_index(spec.breaks[i]);

  std::vector<std::set<int>> inputs(pieces), outputs(pieces);
  for (int a = 0; a < g.tensor_count(); ++a) {
    const int p = g.producer(a);
    const int from = piece[p];
    for (int c : g.consumers(a)) {
      const int to = piece[c];
      if (to == from) continue;
      if (to < from)
        throw Error(ErrorCode::InvalidBreaks, "tensor '" + g.tensor(a).id + "' flows backwards across a cut");
      if (!g.op(p).is_virtual_source && p != closing[from])
        throw Error(ErrorCode::InvalidBreaks, "tensor '" + g.tensor(a).id + "' crosses a cut but is not produced by '" +
                                                  (closing[from] >= 0 ? g.op(closing[from]).id : "?") + "'");
      inputs[to].insert(a);
      outputs[from].insert(a);
    }
  }

  std::vector<SubGraph> out;
  for (int i = 0; i < pieces; ++i) {
    GraphDescription desc;
    desc.name = g.name() + ".part" + std::to_string(i);
    std::set<int> used;
    std::vector<std::string> ops;
    for (int o : g.default_schedule()) {
      if (piece[o] != i) continue;
      const Operator& op = g.op(o);
      for (int a : op.inputs) used.insert(a);
      for (int a : op.outputs) used.insert(a);
      if (op.is_virtual_source) continue;
      GraphDescription::Op d;
      d.id = op.id;
      d.order = op.file_order;
      for (int a : op.inputs) d.inputs.push_back(g.tensor(a).id);
      for (int a : op.outputs) d.outputs.push_back(g.tensor(a).id);
      desc.operators.push_back(std::move(d));
      ops.push_back(op.id);
    }
    SubGraph sg{DataflowGraph{}, ops, {}, {}};
    for (int a : used) {
      Tensor t = g.tensor(a);
      if (inputs[i].count(a)) {
        t.kind = TensorKind::GraphInput;
        sg.boundary_inputs.push_back(t.id);
      } else if (outputs[i].count(a)) {
        t.kind = TensorKind::GraphOutput;
        sg.boundary_outputs.push_back(t.id);
      }
      desc.tensors.push_back(std::move(t));
    }
    sg.graph = DataflowGraph::build(std::move(desc));
    out.push_back(std::move(sg));
  }
  return out;
}

PartitionSpec auto_breaks(const DataflowGraph& g, int target_ops) {
  std::vector<int> user;
  for (int o : g.default_schedule())
    if (!g.op(o).is_virtual_source) user.push_back(o);
  const int n = static_cast<int>(user.size());
  PartitionSpec spec;
  if (target_ops < 2 || target_ops >= n) return spec;

  auto covered_by = [&](const PartitionSpec& s) {
    int pieces = 0;
    std::vector<int> piece = assign_pieces(g, s, pieces);
    int covered = 0;
    for (int o : user) covered += piece[o] < static_cast<int>(s.breaks.size()) ? 1 : 0;
    return std::make_pair(piece, covered);
  };

  int covered = 0;
  while (n - covered > target_ops + target_ops / 2) {
    const int lo = covered + (target_ops + 1) / 2;
    const int hi = covered + target_ops + target_ops / 2;
    struct Best {
      int width, distance, size;
      std::string id;
    };
    std::optional<Best> best;
    for (int o : user) {
      PartitionSpec trial = spec;
      trial.breaks.push_back(g.op(o).id);
      try {
        split(g, trial);
      } catch (const Error&) {
        continue;
      }
      auto [piece, now] = covered_by(trial);
      if (now < lo || now > hi || now >= n) continue;
      const int last = static_cast<int>(trial.breaks.size()) - 1;
      int width = 0;
      for (int a = 0; a < g.tensor_count(); ++a) {
        if (piece[g.producer(a)] > last) continue;
        for (int c : g.consumers(a))
          if (piece[c] > last) {
            ++width;
            break;
          }
      }
      Best cand{width, std::abs(now - covered - target_ops), now, g.op(o).id};
      if (!best || std::tie(cand.width, cand.distance, cand.size) < std::tie(best->width, best->distance, best->size))
        best = cand;
    }
    if (!best) break;
    spec.breaks.push_back(best->id);
    covered = best->size;
  }
  return spec;
}

StitchedPlan solve_partitioned(const DataflowGraph& g, const PartitionSpec& spec, Bytes budget,
                               const SolverConfig& cfg) {
  StitchedPlan out;
  out.pieces = split(g, spec);
  out.combined.budget = budget;
  std::set<std::string> boundary;
  for (const SubGraph& sg : out.pieces)
    for (const std::string& id : sg.boundary_outputs) boundary.insert(id);
  out.boundary_tensors.assign(boundary.begin(), boundary.end());

  std::vector<bool> host_backed(g.tensor_count(), false);
  for (std::size_t i = 0; i < out.pieces.size(); ++i) {
    const SubGraph& sg = out.pieces[i];
    const DataflowGraph& sub = sg.graph;
    EncodeOptions options;
    options.free_spill.assign(sub.tensor_count(), false);
    for (const std::string& id : sg.boundary_inputs) options.free_spill[sub.tensor_index(id)] = true;

    PlanSolution solved;
    try {
      solved = solve_plan(sub, MinAccess{budget}, cfg, options);
    } catch (const Error& e) {
      throw Error(e.code(), "sub-graph " + std::to_string(i) + ": " + e.what());
    }
    if (!solved.plan)
      throw Error(ErrorCode::SolverError, "sub-graph " + std::to_string(i) + " ended with status " +
                                              std::string(to_string(solved.result.status)));
    out.sub_plans.push_back(*solved.plan);
    out.sub_objectives.push_back(*solved.result.objective);

    const std::set<std::string> loads(sg.boundary_inputs.begin(), sg.boundary_inputs.end());
    const std::set<std::string> stores(sg.boundary_outputs.begin(), sg.boundary_outputs.end());
    std::map<std::string, Bytes> resident;  // tensor -> addr after the last step
    const ExecutionPlan& p = *solved.plan;
    for (int t = 0; t < p.timestep_count(); ++t) {
      const int sub_op = sub.op_index(*p.schedule[t]);
      bool transfer = false;
      if (sub.op(sub_op).is_virtual_source) {
        const std::string& id = sub.tensor(sub.op(sub_op).outputs[0]).id;
        transfer = loads.count(id) > 0;
      }
      out.combined.schedule.push_back(transfer ? std::nullopt : p.schedule[t]);
      std::vector<PlanEvent> events;
      for (PlanEvent e : p.events[t]) {
        const int a = g.tensor_index(e.tensor);
        const Bytes size = g.tensor(a).size;
        if (e.action == Action::Create && loads.count(e.tensor)) {
          e.action = Action::Retrieve;  // boundary load
          out.boundary_bytes += size;
        } else if (e.action == Action::Spill && host_backed[a]) {
          e.action = Action::Drop;
        } else if (e.action == Action::Drop && stores.count(e.tensor) && !host_backed[a]) {
          e.action = Action::Spill;  // boundary store
          out.boundary_bytes += size;
        }
        if (e.action == Action::Spill) host_backed[a] = true;
        if (e.action == Action::Create || e.action == Action::Preserve || e.action == Action::Retrieve)
          resident[e.tensor] = *e.addr;
        else
          resident.erase(e.tensor);
        events.push_back(std::move(e));
      }
      // Tensors the sub-plan left without an event were dropped implicitly.
      for (auto it = resident.begin(); it != resident.end();) {
        bool mentioned = std::any_of(events.begin(), events.end(), [&](const PlanEvent& e) { return e.tensor == it->first; });
        it = mentioned ? std::next(it) : resident.erase(it);
      }
      out.combined.events.push_back(std::move(events));
    }
    // Memory is empty between pieces: write out what later pieces still need.
    std::vector<PlanEvent> flush;
    bool needed = false;
    for (const auto& [id, addr] : resident) {
      const int a = g.tensor_index(id);
      if (stores.count(id) && !host_backed[a]) {
        flush.push_back({id, Action::Spill, std::nullopt});
        host_backed[a] = true;
        out.boundary_bytes += g.tensor(a).size;
        needed = true;
      } else {
        flush.push_back({id, Action::Drop, std::nullopt});
      }
    }
    if (needed) {
      std::sort(flush.begin(), flush.end(), [&](const PlanEvent& x, const PlanEvent& y) {
        return g.tensor_index(x.tensor) < g.tensor_index(y.tensor);
      });
      out.combined.schedule.push_back(std::nullopt);
      out.combined.events.push_back(std::move(flush));
    }
  }
  out.total_bytes = out.boundary_bytes;
  for (Bytes b : out.sub_objectives) out.total_bytes += b;
  return out;
}

std::string partition_report_json(const StitchedPlan& s) {
  nlohmann::ordered_json j;
  j["subgraphs"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.pieces.size(); ++i) {
    nlohmann::ordered_json p;
    p["index"] = i;
    p["operators"] = s.pieces[i].operators;
    p["boundary_inputs"] = s.pieces[i].boundary_inputs;
    p["boundary_outputs"] = s.pieces[i].boundary_outputs;
    if (i < s.sub_objectives.size()) p["bytes"] = s.sub_objectives[i];
    j["subgraphs"].push_back(std::move(p));
  }
  j["boundary_tensors"] = s.boundary_tensors;
  j["boundary_bytes"] = s.boundary_bytes;
  j["total_bytes"] = s.total_bytes;
  return j.dump(2) + "\n";
}

}  // namespace cosma
