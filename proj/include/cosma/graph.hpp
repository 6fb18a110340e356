#pragma once

// Dataflow graph model and the static analyses shared by the encoder, the
// solvers and the simulator.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cosma {

using Bytes = std::int64_t;

enum class TensorKind { Activation, Parameter, GraphInput, GraphOutput };

std::string_view to_string(TensorKind kind);
TensorKind tensor_kind_from_string(std::string_view text);

struct Tensor {
  std::string id;
  Bytes size = 1;
  TensorKind kind = TensorKind::Activation;
};

struct Operator {
  std::string id;
  std::vector<int> inputs;   // tensor indices, duplicates collapsed
  std::vector<int> outputs;  // tensor indices, mutually siblings
  int default_order = 0;     // position in the default schedule, 0..T-1
  bool is_virtual_source = false;
  // "order" value from the graph file; only meaningful for non-virtual ops.
  std::int64_t file_order = 0;
};

/// Plain description of a graph as it appears in a graph file, before
/// validation and virtual-source insertion.
struct GraphDescription {
  struct Op {
    std::string id;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::int64_t order = 0;
  };
  std::string name;
  std::vector<Tensor> tensors;
  std::vector<Op> operators;
};

/// Validated, immutable dataflow graph. Every tensor has exactly one producer;
/// producer-less tensors of the description get a dedicated virtual source
/// operator named "src_<tensor id>".
class DataflowGraph {
 public:
  /// Validates `desc` and inserts virtual sources. Throws cosma::Error with
  /// ParseError, CycleError, DanglingReference or DuplicateId.
  static DataflowGraph build(GraphDescription desc);

  const std::string& name() const { return name_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  const std::vector<Operator>& operators() const { return ops_; }
  const Tensor& tensor(int index) const { return tensors_.at(index); }
  const Operator& op(int index) const { return ops_.at(index); }

  int tensor_count() const { return static_cast<int>(tensors_.size()); }
  int op_count() const { return static_cast<int>(ops_.size()); }
  int timestep_count() const { return op_count(); }

  std::optional<int> find_tensor(std::string_view id) const;
  std::optional<int> find_op(std::string_view id) const;
  int tensor_index(std::string_view id) const;  // throws DanglingReference
  int op_index(std::string_view id) const;      // throws DanglingReference

  int producer(int tensor) const { return producer_[tensor]; }
  const std::vector<int>& consumers(int tensor) const { return consumers_[tensor]; }

  /// Operators sorted by default_order.
  std::vector<int> default_schedule() const;

  /// The description this graph was built from (user operators only), used
  /// to write the graph back to JSON.
  GraphDescription description() const;

  /// True if `order` (operator index per timestep) is a permutation of all
  /// operators that respects every data dependency.
  bool is_valid_schedule(const std::vector<int>& order) const;

 private:
  std::string name_;
  std::vector<Tensor> tensors_;
  std::vector<Operator> ops_;
  std::vector<int> producer_;
  std::vector<std::vector<int>> consumers_;
  std::unordered_map<std::string, int> tensor_by_id_;
  std::unordered_map<std::string, int> op_by_id_;
};

DataflowGraph load_graph(std::istream& in);
DataflowGraph load_graph_file(const std::string& path);
void save_graph(const DataflowGraph& g, std::ostream& out);
std::string graph_to_json(const DataflowGraph& g);
DataflowGraph graph_from_json(const std::string& text);

/// Per-operator earliest/latest timesteps and the tensor lifetime windows
/// derived from them.
struct TimestepWindows {
  std::vector<int> asap;  // per operator
  std::vector<int> alap;  // per operator
  std::vector<std::pair<int, int>> tensor_window;  // per tensor, inclusive
  std::vector<std::pair<int, int>> overlap_pairs;  // tensor index pairs, first < second

  bool overlaps(int a, int b) const;
  /// Windows with no pruning at all: every operator may run at any timestep
  /// and every tensor may live over the whole horizon.
  static TimestepWindows unpruned(const DataflowGraph& g);
  /// Windows for a fixed schedule (asap = alap = the operator's position).
  static TimestepWindows for_schedule(const DataflowGraph& g, const std::vector<int>& order);
};

TimestepWindows compute_windows(const DataflowGraph& g);

/// M_R: the largest per-operator sum of input and output tensor sizes.
Bytes compute_min_budget(const DataflowGraph& g);

/// Transitive-closure helpers (bit matrix, row = operator).
std::vector<std::vector<bool>> transitive_predecessors(const DataflowGraph& g);

}  // namespace cosma
