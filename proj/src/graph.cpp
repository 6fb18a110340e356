#include "cosma/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cosma/error.hpp"
#include "json.hpp"

namespace cosma {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(TensorKind kind) {
  switch (kind) {
    case TensorKind::Activation: return "activation";
    case TensorKind::Parameter: return "parameter";
    case TensorKind::GraphInput: return "graph_input";
    case TensorKind::GraphOutput: return "graph_output";
  }
  return "activation";
}

TensorKind tensor_kind_from_string(std::string_view text) {
  if (text == "activation") return TensorKind::Activation;
  if (text == "parameter") return TensorKind::Parameter;
  if (text == "graph_input") return TensorKind::GraphInput;
  if (text == "graph_output") return TensorKind::GraphOutput;
  throw Error(ErrorCode::ParseError, "unknown tensor kind '" + std::string(text) + "'");
}

DataflowGraph DataflowGraph::build(GraphDescription desc) {
  DataflowGraph g;
  g.name_ = desc.name;

  for (const Tensor& t : desc.tensors) {
    if (t.id.empty()) throw Error(ErrorCode::ParseError, "tensor with empty id");
    if (t.size < 1) throw Error(ErrorCode::ParseError, "tensor '" + t.id + "' has size < 1");
    if (!g.tensor_by_id_.emplace(t.id, static_cast<int>(g.tensors_.size())).second)
      throw Error(ErrorCode::DuplicateId, "tensor '" + t.id + "'");
    g.tensors_.push_back(t);
  }
  const int tensor_count = g.tensor_count();
  g.producer_.assign(tensor_count, -1);
  g.consumers_.assign(tensor_count, {});

  std::set<std::string> op_ids;
  std::set<std::int64_t> orders;
  std::vector<Operator> user_ops;
  for (const auto& d : desc.operators) {
    if (d.id.empty()) throw Error(ErrorCode::ParseError, "operator with empty id");
    if (!op_ids.insert(d.id).second) throw Error(ErrorCode::DuplicateId, "operator '" + d.id + "'");
    if (!orders.insert(d.order).second)
      throw Error(ErrorCode::ParseError, "operator '" + d.id + "' reuses order value " +
                                             std::to_string(d.order));
    if (d.outputs.empty()) throw Error(ErrorCode::ParseError, "operator '" + d.id + "' has no outputs");
    Operator op;
    op.id = d.id;
    op.file_order = d.order;
    auto lookup = [&](const std::string& id) {
      auto it = g.tensor_by_id_.find(id);
      if (it == g.tensor_by_id_.end())
        throw Error(ErrorCode::DanglingReference, "operator '" + d.id + "' references tensor '" + id + "'");
      return it->second;
    };
    for (const auto& in : d.inputs) {
      int t = lookup(in);
      if (std::find(op.inputs.begin(), op.inputs.end(), t) == op.inputs.end()) op.inputs.push_back(t);
    }
    for (const auto& out : d.outputs) {
      int t = lookup(out);
      if (std::find(op.outputs.begin(), op.outputs.end(), t) != op.outputs.end())
        throw Error(ErrorCode::DuplicateId, "operator '" + d.id + "' lists output '" + out + "' twice");
      if (std::find(op.inputs.begin(), op.inputs.end(), t) != op.inputs.end())
        throw Error(ErrorCode::CycleError, "operator '" + d.id + "' consumes its own output '" + out + "'");
      op.outputs.push_back(t);
    }
    user_ops.push_back(std::move(op));
  }

  for (std::size_t i = 0; i < user_ops.size(); ++i) {
    for (int t : user_ops[i].outputs) {
      if (g.producer_[t] != -1)
        throw Error(ErrorCode::ParseError, "tensor '" + g.tensors_[t].id + "' has two producers");
      g.producer_[t] = static_cast<int>(i);
    }
  }

  // Cycle check (Kahn) over user operators.
  {
    const int n = static_cast<int>(user_ops.size());
    std::vector<int> indegree(n, 0);
    std::vector<std::vector<int>> succ(n);
    for (int i = 0; i < n; ++i)
      for (int t : user_ops[i].inputs)
        if (int p = g.producer_[t]; p >= 0) {
          succ[p].push_back(i);
          ++indegree[i];
        }
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
      if (indegree[i] == 0) ready.push_back(i);
    int seen = 0;
    while (!ready.empty()) {
      int i = ready.back();
      ready.pop_back();
      ++seen;
      for (int s : succ[i])
        if (--indegree[s] == 0) ready.push_back(s);
    }
    if (seen != n) throw Error(ErrorCode::CycleError, "graph '" + desc.name + "' contains a cycle");
  }

  // The file order must itself be a valid schedule of the user operators.
  std::vector<int> by_order(user_ops.size());
  std::iota(by_order.begin(), by_order.end(), 0);
  std::sort(by_order.begin(), by_order.end(),
            [&](int a, int b) { return user_ops[a].file_order < user_ops[b].file_order; });
  {
    std::vector<bool> done(user_ops.size(), false);
    for (int i : by_order) {
      for (int t : user_ops[i].inputs)
        if (int p = g.producer_[t]; p >= 0 && !done[p])
          throw Error(ErrorCode::ParseError, "operator '" + user_ops[i].id +
                                                 "' is ordered before the producer of '" +
                                                 g.tensors_[t].id + "'");
      done[i] = true;
    }
  }

  // Build the final operator list in default order, inserting one virtual
  // source right before the first consumer of each producer-less tensor.
  std::vector<int> user_to_final(user_ops.size(), -1);
  std::vector<bool> sourced(tensor_count, false);
  auto add_source = [&](int t) {
    Operator src;
    src.id = "src_" + g.tensors_[t].id;
    if (op_ids.count(src.id))
      throw Error(ErrorCode::DuplicateId, "virtual source id '" + src.id + "' clashes with an operator");
    op_ids.insert(src.id);
    src.outputs = {t};
    src.is_virtual_source = true;
    src.default_order = static_cast<int>(g.ops_.size());
    sourced[t] = true;
    g.ops_.push_back(std::move(src));
  };
  for (int i : by_order) {
    for (int t : user_ops[i].inputs)
      if (g.producer_[t] == -1 && !sourced[t]) add_source(t);
    Operator op = user_ops[i];
    op.default_order = static_cast<int>(g.ops_.size());
    user_to_final[i] = op.default_order;
    g.ops_.push_back(std::move(op));
  }
  for (int t = 0; t < tensor_count; ++t)
    if (g.producer_[t] == -1 && !sourced[t]) add_source(t);

  std::fill(g.producer_.begin(), g.producer_.end(), -1);
  for (int o = 0; o < g.op_count(); ++o) {
    g.op_by_id_.emplace(g.ops_[o].id, o);
    for (int t : g.ops_[o].outputs) g.producer_[t] = o;
    for (int t : g.ops_[o].inputs) g.consumers_[t].push_back(o);
  }
  return g;
}

std::optional<int> DataflowGraph::find_tensor(std::string_view id) const {
  auto it = tensor_by_id_.find(std::string(id));
  if (it == tensor_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> DataflowGraph::find_op(std::string_view id) const {
  auto it = op_by_id_.find(std::string(id));
  if (it == op_by_id_.end()) return std::nullopt;
  return it->second;
}

int DataflowGraph::tensor_index(std::string_view id) const {
  if (auto t = find_tensor(id)) return *t;
  throw Error(ErrorCode::DanglingReference, "unknown tensor '" + std::string(id) + "'");
}

int DataflowGraph::op_index(std::string_view id) const {
  if (auto o = find_op(id)) return *o;
  throw Error(ErrorCode::DanglingReference, "unknown operator '" + std::string(id) + "'");
}

std::vector<int> DataflowGraph::default_schedule() const {
  std::vector<int> order(ops_.size());
  for (int o = 0; o < op_count(); ++o) order[ops_[o].default_order] = o;
  return order;
}

GraphDescription DataflowGraph::description() const {
  GraphDescription desc;
  desc.name = name_;
  desc.tensors = tensors_;
  for (const Operator& op : ops_) {
    if (op.is_virtual_source) continue;
    GraphDescription::Op d;
    d.id = op.id;
    d.order = op.file_order;
    for (int t : op.inputs) d.inputs.push_back(tensors_[t].id);
    for (int t : op.outputs) d.outputs.push_back(tensors_[t].id);
    desc.operators.push_back(std::move(d));
  }
  return desc;
}

bool DataflowGraph::is_valid_schedule(const std::vector<int>& order) const {
  if (static_cast<int>(order.size()) != op_count()) return false;
  std::vector<bool> done(ops_.size(), false);
  for (int o : order) {
    if (o < 0 || o >= op_count() || done[o]) return false;
    for (int t : ops_[o].inputs)
      if (!done[producer_[t]]) return false;
    done[o] = true;
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

GraphDescription parse_description(const ordered_json& j) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ParseError, msg); };
  if (!j.is_object()) fail("graph must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "name" && it.key() != "tensors" && it.key() != "operators")
      fail("unknown field '" + it.key() + "'");
  if (!j.contains("name") || !j["name"].is_string()) fail("missing string field 'name'");
  if (!j.contains("tensors") || !j["tensors"].is_array()) fail("missing array field 'tensors'");
  if (!j.contains("operators") || !j["operators"].is_array()) fail("missing array field 'operators'");

  GraphDescription desc;
  desc.name = j["name"].get<std::string>();
  for (const auto& jt : j["tensors"]) {
    if (!jt.is_object()) fail("tensor entry must be an object");
    for (auto it = jt.begin(); it != jt.end(); ++it)
      if (it.key() != "id" && it.key() != "size" && it.key() != "kind")
        fail("unknown tensor field '" + it.key() + "'");
    if (!jt.contains("id") || !jt["id"].is_string()) fail("tensor without string 'id'");
    if (!jt.contains("size") || !jt["size"].is_number_integer()) fail("tensor without integer 'size'");
    if (!jt.contains("kind") || !jt["kind"].is_string()) fail("tensor without string 'kind'");
    Tensor t;
    t.id = jt["id"].get<std::string>();
    t.size = jt["size"].get<std::int64_t>();
    t.kind = tensor_kind_from_string(jt["kind"].get<std::string>());
    desc.tensors.push_back(std::move(t));
  }
  for (const auto& jo : j["operators"]) {
    if (!jo.is_object()) fail("operator entry must be an object");
    for (auto it = jo.begin(); it != jo.end(); ++it)
      if (it.key() != "id" && it.key() != "inputs" && it.key() != "outputs" && it.key() != "order")
        fail("unknown operator field '" + it.key() + "'");
    if (!jo.contains("id") || !jo["id"].is_string()) fail("operator without string 'id'");
    if (!jo.contains("inputs") || !jo["inputs"].is_array()) fail("operator without array 'inputs'");
    if (!jo.contains("outputs") || !jo["outputs"].is_array()) fail("operator without array 'outputs'");
    if (!jo.contains("order") || !jo["order"].is_number_integer()) fail("operator without integer 'order'");
    GraphDescription::Op op;
    op.id = jo["id"].get<std::string>();
    for (const auto& x : jo["inputs"]) {
      if (!x.is_string()) fail("operator '" + op.id + "' has a non-string input");
      op.inputs.push_back(x.get<std::string>());
    }
    for (const auto& x : jo["outputs"]) {
      if (!x.is_string()) fail("operator '" + op.id + "' has a non-string output");
      op.outputs.push_back(x.get<std::string>());
    }
    op.order = jo["order"].get<std::int64_t>();
    desc.operators.push_back(std::move(op));
  }
  return desc;
}

}  // namespace

DataflowGraph graph_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    return DataflowGraph::build(parse_description(j));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

DataflowGraph load_graph(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return graph_from_json(buf.str());
}

DataflowGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open graph file '" + path + "'");
  return load_graph(in);
}

std::string graph_to_json(const DataflowGraph& g) {
  GraphDescription desc = g.description();
  ordered_json j;
  j["name"] = desc.name;
  j["tensors"] = ordered_json::array();
  for (const Tensor& t : desc.tensors)
    j["tensors"].push_back({{"id", t.id}, {"size", t.size}, {"kind", std::string(to_string(t.kind))}});
  j["operators"] = ordered_json::array();
  for (const auto& op : desc.operators)
    j["operators"].push_back(
        {{"id", op.id}, {"inputs", op.inputs}, {"outputs", op.outputs}, {"order", op.order}});
  return j.dump(2) + "\n";
}

void save_graph(const DataflowGraph& g, std::ostream& out) { out << graph_to_json(g); }

// ---------------------------------------------------------------------------
// Analyses

std::vector<std::vector<bool>> transitive_predecessors(const DataflowGraph& g) {
  const int n = g.op_count();
  std::vector<std::vector<bool>> pred(n, std::vector<bool>(n, false));
  for (int o : g.default_schedule()) {
    for (int t : g.op(o).inputs) {
      int p = g.producer(t);
      pred[o][p] = true;
      for (int k = 0; k < n; ++k)
        if (pred[p][k]) pred[o][k] = true;
    }
  }
  return pred;
}

bool TimestepWindows::overlaps(int a, int b) const {
  if (a == b) return false;
  auto [lo_a, hi_a] = tensor_window[a];
  auto [lo_b, hi_b] = tensor_window[b];
  return std::max(lo_a, lo_b) <= std::min(hi_a, hi_b);
}

namespace {

void fill_tensor_windows(const DataflowGraph& g, TimestepWindows& w) {
  const int last = g.timestep_count() - 1;
  w.tensor_window.resize(g.tensor_count());
  for (int a = 0; a < g.tensor_count(); ++a) {
    int first = w.asap[g.producer(a)];
    int end = last;
    if (!g.consumers(a).empty()) {
      end = first;
      for (int c : g.consumers(a)) end = std::max(end, w.alap[c]);
    }
    w.tensor_window[a] = {first, end};
  }
  w.overlap_pairs.clear();
  for (int a = 0; a < g.tensor_count(); ++a)
    for (int b = a + 1; b < g.tensor_count(); ++b)
      if (w.overlaps(a, b)) w.overlap_pairs.emplace_back(a, b);
}

}  // namespace

TimestepWindows compute_windows(const DataflowGraph& g) {
  const int n = g.op_count();
  auto pred = transitive_predecessors(g);
  TimestepWindows w;
  w.asap.assign(n, 0);
  w.alap.assign(n, 0);
  std::vector<int> succ_count(n, 0);
  for (int o = 0; o < n; ++o)
    for (int p = 0; p < n; ++p)
      if (pred[o][p]) {
        ++w.asap[o];
        ++succ_count[p];
      }
  for (int o = 0; o < n; ++o) w.alap[o] = n - 1 - succ_count[o];
  fill_tensor_windows(g, w);
  return w;
}

TimestepWindows TimestepWindows::unpruned(const DataflowGraph& g) {
  const int n = g.op_count();
  TimestepWindows w;
  w.asap.assign(n, 0);
  w.alap.assign(n, n - 1);
  w.tensor_window.assign(g.tensor_count(), {0, n - 1});
  for (int a = 0; a < g.tensor_count(); ++a)
    for (int b = a + 1; b < g.tensor_count(); ++b) w.overlap_pairs.emplace_back(a, b);
  return w;
}

TimestepWindows TimestepWindows::for_schedule(const DataflowGraph& g, const std::vector<int>& order) {
  TimestepWindows w;
  w.asap.assign(g.op_count(), 0);
  for (int t = 0; t < static_cast<int>(order.size()); ++t) w.asap[order[t]] = t;
  w.alap = w.asap;
  fill_tensor_windows(g, w);
  return w;
}

Bytes compute_min_budget(const DataflowGraph& g) {
  Bytes best = 0;
  for (const Operator& op : g.operators()) {
    Bytes sum = 0;
    for (int t : op.inputs) sum += g.tensor(t).size;
    for (int t : op.outputs) sum += g.tensor(t).size;
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace cosma
