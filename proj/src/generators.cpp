#include "cosma/generators.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "cosma/error.hpp"

namespace cosma {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Chain: return "chain";
    case Family::Diamond: return "diamond";
    case Family::ResnetLike: return "resnet_like";
    case Family::NasLike: return "nas_like";
    case Family::Random: return "random";
  }
  return "chain";
}

Family family_from_string(std::string_view text) {
  for (Family f : {Family::Chain, Family::Diamond, Family::ResnetLike, Family::NasLike, Family::Random})
    if (to_string(f) == text) return f;
  throw Error(ErrorCode::InvalidParams, "unknown family '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidParams, msg); }

class Builder {
 public:
  Builder(std::string name, const GeneratorSpec& spec) : spec_(spec), rng_(spec.seed) { desc_.name = std::move(name); }

  Bytes draw_size() { return spec_.min_size + static_cast<Bytes>(rng_() % (spec_.max_size - spec_.min_size + 1)); }
  std::uint64_t draw(std::uint64_t n) { return rng_() % n; }

  const std::string& tensor(std::string id, Bytes size, TensorKind kind = TensorKind::Activation) {
    desc_.tensors.push_back({std::move(id), size, kind});
    return desc_.tensors.back().id;
  }
  void op(std::string id, std::vector<std::string> inputs, std::vector<std::string> outputs) {
    std::int64_t order = static_cast<std::int64_t>(desc_.operators.size());
    desc_.operators.push_back({std::move(id), std::move(inputs), std::move(outputs), order});
  }

  DataflowGraph finish() {
    // Tensors nobody reads are the graph's results.
    std::set<std::string> read;
    for (const auto& o : desc_.operators) read.insert(o.inputs.begin(), o.inputs.end());
    for (Tensor& t : desc_.tensors)
      if (t.kind == TensorKind::Activation && !read.count(t.id)) t.kind = TensorKind::GraphOutput;
    return DataflowGraph::build(std::move(desc_));
  }

 private:
  const GeneratorSpec& spec_;
  std::mt19937_64 rng_;
  GraphDescription desc_;
};

Bytes explicit_or_drawn(const GeneratorSpec& spec, Builder& b, std::size_t i) {
  return spec.sizes.empty() ? b.draw_size() : spec.sizes[i];
}

DataflowGraph chain(const GeneratorSpec& spec) {
  if (spec.length < 1 || spec.length > 64) bad("chain length must be in 1..64");
  if (!spec.sizes.empty() && static_cast<int>(spec.sizes.size()) != spec.length)
    bad("chain needs one size per tensor");
  Builder b("chain" + std::to_string(spec.length), spec);
  b.tensor("a0", explicit_or_drawn(spec, b, 0), TensorKind::GraphInput);
  for (int i = 1; i < spec.length; ++i) {
    b.tensor("a" + std::to_string(i), explicit_or_drawn(spec, b, i));
    b.op("op" + std::to_string(i), {"a" + std::to_string(i - 1)}, {"a" + std::to_string(i)});
  }
  return b.finish();
}

DataflowGraph diamond(const GeneratorSpec& spec) {
  std::vector<Bytes> sizes = spec.sizes.empty() ? std::vector<Bytes>{6, 2, 2, 1} : spec.sizes;
  if (sizes.size() != 4) bad("diamond needs 4 sizes");
  Builder b("diamond", spec);
  b.tensor("d0", sizes[0]);
  b.tensor("d1", sizes[1]);
  b.tensor("d2", sizes[2]);
  b.tensor("d3", sizes[3]);
  b.op("s", {}, {"d0"});
  b.op("b1", {"d0"}, {"d1"});
  b.op("b2", {"d0"}, {"d2"});
  b.op("j", {"d1", "d2"}, {"d3"});
  return b.finish();
}

DataflowGraph resnet_like(const GeneratorSpec& spec) {
  if (spec.blocks < 1 || spec.blocks > 16) bad("resnet_like blocks must be in 1..16");
  Builder b("resnet_like" + std::to_string(spec.blocks), spec);
  std::string x = b.tensor("x0", b.draw_size(), TensorKind::GraphInput);
  for (int k = 0; k < spec.blocks; ++k) {
    const std::string p = "b" + std::to_string(k) + "_";
    const int convs = k % 2 == 0 ? 2 : 3;
    std::string cur = x;
    for (int c = 0; c < convs; ++c) {
      std::string out = b.tensor(p + "c" + std::to_string(c), b.draw_size());
      b.op(p + "conv" + std::to_string(c), {cur}, {out});
      cur = out;
    }
    std::string y = b.tensor(p + "y", b.draw_size());
    b.op(p + "add", {cur, x}, {y});
    x = y;
  }
  return b.finish();
}

DataflowGraph nas_like(const GeneratorSpec& spec) {
  if (spec.branches < 4 || spec.branches > 16) bad("nas_like branches must be in 4..16");
  if (spec.cells < 1 || spec.cells > 8) bad("nas_like cells must be in 1..8");
  Builder b("nas_like" + std::to_string(spec.branches) + "x" + std::to_string(spec.cells), spec);
  std::string prev = b.tensor("x0", b.draw_size(), TensorKind::GraphInput);
  std::string prevprev = prev;
  for (int c = 0; c < spec.cells; ++c) {
    const std::string p = "c" + std::to_string(c) + "_";
    std::vector<std::string> branch_outs;
    for (int k = 0; k < spec.branches; ++k) {
      std::string out = b.tensor(p + "n" + std::to_string(k), b.draw_size());
      std::vector<std::string> ins{prev};
      if (prevprev != prev) ins.push_back(prevprev);
      // Branches alternate which cell input they read first.
      if (k % 2 == 1) std::reverse(ins.begin(), ins.end());
      b.op(p + "op" + std::to_string(k), ins, {out});
      branch_outs.push_back(out);
    }
    std::string out = b.tensor(p + "out", b.draw_size());
    b.op(p + "concat", branch_outs, {out});
    prevprev = prev;
    prev = out;
  }
  return b.finish();
}

DataflowGraph random_graph(const GeneratorSpec& spec) {
  if (spec.ops < 2 || spec.ops > 40) bad("random ops must be in 2..40");
  Builder b("random_s" + std::to_string(spec.seed) + "_n" + std::to_string(spec.ops), spec);
  const int sources = 1 + static_cast<int>(b.draw(std::max(1, spec.ops / 3)));
  std::vector<std::string> pool;
  for (int i = 0; i < sources; ++i)
    pool.push_back(b.tensor("x" + std::to_string(i), b.draw_size(),
                            b.draw(2) ? TensorKind::GraphInput : TensorKind::Parameter));
  int next = 0;
  for (int i = 1; i <= spec.ops - sources; ++i) {
    const int fan_in = 1 + static_cast<int>(b.draw(std::min<std::size_t>(3, pool.size())));
    std::vector<std::string> ins;
    while (static_cast<int>(ins.size()) < fan_in) {
      const std::string& pick = pool[b.draw(pool.size())];
      if (std::find(ins.begin(), ins.end(), pick) == ins.end()) ins.push_back(pick);
    }
    const int fan_out = 1 + static_cast<int>(b.draw(2));
    std::vector<std::string> outs;
    for (int k = 0; k < fan_out; ++k) outs.push_back(b.tensor("t" + std::to_string(next++), b.draw_size()));
    b.op("op" + std::to_string(i), ins, outs);
    pool.insert(pool.end(), outs.begin(), outs.end());
  }
  return b.finish();
}

}  // namespace

DataflowGraph generate(const GeneratorSpec& spec) {
  if (spec.min_size < 1 || spec.max_size < spec.min_size) bad("size range must satisfy 1 <= min <= max");
  for (Bytes s : spec.sizes)
    if (s < 1) bad("sizes must be positive");
  switch (spec.family) {
    case Family::Chain: return chain(spec);
    case Family::Diamond: return diamond(spec);
    case Family::ResnetLike: return resnet_like(spec);
    case Family::NasLike: return nas_like(spec);
    case Family::Random: return random_graph(spec);
  }
  bad("unknown family");
}

int max_antichain(const DataflowGraph& g) {
  // Dilworth: operators minus a maximum matching of the comparability DAG.
  const int n = g.op_count();
  auto pred = transitive_predecessors(g);
  std::vector<int> match(n, -1);
  std::vector<bool> seen;
  std::function<bool(int)> augment = [&](int u) {
    for (int v = 0; v < n; ++v) {
      if (!pred[v][u] || seen[v]) continue;
      seen[v] = true;
      if (match[v] == -1 || augment(match[v])) {
        match[v] = u;
        return true;
      }
    }
    return false;
  };
  int matched = 0;
  for (int u = 0; u < n; ++u) {
    seen.assign(n, false);
    if (augment(u)) ++matched;
  }
  return n - matched;
}

}  // namespace cosma
