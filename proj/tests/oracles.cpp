#include "oracles.hpp"

#include <algorithm>
#include <bitset>
#include <cctype>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace oracle {

namespace {

bool ready(const DataflowGraph& g, int o, const std::vector<bool>& done) {
  for (int a : g.op(o).inputs)
    if (!done[g.producer(a)]) return false;
  return true;
}

}  // namespace

std::vector<std::vector<int>> all_schedules(const DataflowGraph& g) {
  const int n = g.op_count();
  std::vector<std::vector<int>> out;
  std::vector<int> order;
  std::vector<bool> done(n, false);
  std::function<void()> go = [&] {
    if (static_cast<int>(order.size()) == n) {
      out.push_back(order);
      return;
    }
    for (int o = 0; o < n; ++o) {
      if (done[o] || !ready(g, o, done)) continue;
      done[o] = true;
      order.push_back(o);
      go();
      order.pop_back();
      done[o] = false;
    }
  };
  go();
  return out;
}

Bytes peak_of(const DataflowGraph& g, const std::vector<int>& order) {
  std::vector<int> step(g.op_count());
  for (int t = 0; t < static_cast<int>(order.size()); ++t) step[order[t]] = t;
  Bytes peak = 0;
  for (int t = 0; t < static_cast<int>(order.size()); ++t) {
    Bytes live = 0;
    for (int a = 0; a < g.tensor_count(); ++a) {
      const int born = step[g.producer(a)];
      int last = born;
      for (int c : g.consumers(a)) last = std::max(last, step[c]);
      if (born <= t && t <= last) live += g.tensor(a).size;
    }
    peak = std::max(peak, live);
  }
  return peak;
}

Bytes min_peak(const DataflowGraph& g) {
  Bytes best = std::numeric_limits<Bytes>::max();
  for (const auto& order : all_schedules(g)) best = std::min(best, peak_of(g, order));
  return best;
}

// Layered search, one layer per timestep. A state holds one code per tensor:
//   kUnborn, kHost (only the host copy exists), kGone, or a resident address;
//   addresses of tensors that also have a host copy are offset by kBacked.
namespace {

constexpr int kUnborn = -1, kHost = -2, kGone = -3, kBacked = 1 << 12;
using Cells = std::bitset<512>;
using State = std::vector<int>;

struct Layer {
  const DataflowGraph& g;
  Bytes budget;
  std::map<State, Bytes> next;

  bool fits(const Cells& used, Bytes at, Bytes size) const {
    if (at < 0 || at + size > budget) return false;
    for (Bytes c = at; c < at + size; ++c)
      if (used[c]) return false;
    return true;
  }
  static void mark(Cells& used, Bytes at, Bytes size) {
    for (Bytes c = at; c < at + size; ++c) used[c] = true;
  }

  // Remaining readers of tensor a once `done` (which already includes the
  // operator of this step) has run.
  bool needed_later(int a, const std::vector<bool>& done) const {
    for (int c : g.consumers(a))
      if (!done[c]) return true;
    return false;
  }

  void expand(const State& from, Bytes cost, int op, const std::vector<bool>& done_after) {
    const int n = g.tensor_count();
    State to(n);
    Cells used;
    const cosma::Operator& o = g.op(op);
    auto is_input = [&](int a) { return std::find(o.inputs.begin(), o.inputs.end(), a) != o.inputs.end(); };
    auto is_output = [&](int a) { return std::find(o.outputs.begin(), o.outputs.end(), a) != o.outputs.end(); };

    // Tensors are decided from the highest index down.
    std::function<void(int, Bytes)> decide = [&](int a, Bytes c) {
      if (a < 0) {
        State settled = to;
        for (int x = 0; x < n; ++x)
          if (settled[x] != kUnborn && !needed_later(x, done_after)) settled[x] = kGone;
        auto [it, fresh] = next.emplace(settled, c);
        if (!fresh) it->second = std::min(it->second, c);
        return;
      }
      const Bytes size = g.tensor(a).size;
      const int code = from[a];
      auto place_any = [&](bool backed, Bytes extra) {
        for (Bytes at = budget - size; at >= 0; --at) {
          if (!fits(used, at, size)) continue;
          Cells saved = used;
          mark(used, at, size);
          to[a] = static_cast<int>(at) + (backed ? kBacked : 0);
          decide(a - 1, c + extra);
          used = saved;
        }
      };
      auto keep = [&](int addr_code) {
        const Bytes at = addr_code % kBacked;
        if (!fits(used, at, size)) return;
        Cells saved = used;
        mark(used, at, size);
        to[a] = addr_code;
        decide(a - 1, c);
        used = saved;
      };

      if (code == kUnborn) {
        if (is_output(a)) {
          place_any(false, 0);
        } else {
          to[a] = kUnborn;
          decide(a - 1, c);
        }
        return;
      }
      if (code == kGone) {
        to[a] = kGone;
        decide(a - 1, c);
        return;
      }
      if (code == kHost) {
        place_any(true, size);  // retrieve
        if (!is_input(a)) {
          to[a] = kHost;
          decide(a - 1, c);
        }
        return;
      }
      // Resident. A tensor with a host copy may also be re-read elsewhere.
      keep(code);
      if (code >= kBacked) place_any(true, size);
      if (is_input(a)) return;
      if (code >= kBacked) {
        to[a] = kHost;  // drop, the host copy stays
        decide(a - 1, c);
      } else if (needed_later(a, done_after)) {
        to[a] = kHost;  // spill
        decide(a - 1, c + size);
      } else {
        to[a] = kGone;
        decide(a - 1, c);
      }
    };
    decide(n - 1, cost);
  }
};

}  // namespace

std::optional<Bytes> min_traffic(const DataflowGraph& g, Bytes budget, const std::vector<int>& order) {
  if (budget <= 0 || budget > 511) throw std::invalid_argument("oracle budget out of range");
  const int n = g.tensor_count();
  const int T = g.op_count();
  std::map<State, Bytes> layer{{State(n, kUnborn), 0}};
  for (int t = 0; t < T && !layer.empty(); ++t) {
    Layer L{g, budget, {}};
    for (const auto& [state, cost] : layer) {
      std::vector<bool> done(T, false);
      for (int a = 0; a < n; ++a)
        if (state[a] != kUnborn) done[g.producer(a)] = true;
      for (int o = T - 1; o >= 0; --o) {
        if (!order.empty() && o != order[t]) continue;
        if (done[o] || !ready(g, o, done)) continue;
        bool inputs_available = true;
        for (int a : g.op(o).inputs) inputs_available = inputs_available && state[a] != kGone;
        if (!inputs_available) continue;
        std::vector<bool> after = done;
        after[o] = true;
        L.expand(state, cost, o, after);
      }
    }
    layer = std::move(L.next);
  }
  if (layer.empty()) return std::nullopt;
  Bytes best = std::numeric_limits<Bytes>::max();
  for (const auto& [state, cost] : layer) best = std::min(best, cost);
  return best;
}

namespace {

long long parse_int(const std::string& s) {
  std::size_t used = 0;
  long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::runtime_error("lp: bad integer '" + s + "'");
  return v;
}

// "[- | +] [coef] name" sequences, possibly the single token "0".
std::map<std::string, long long> parse_terms(const std::vector<std::string>& toks) {
  std::map<std::string, long long> out;
  long long sign = 1, coef = 1;
  bool have_coef = false;
  for (const std::string& tok : toks) {
    if (tok == "+") {
      sign = 1;
    } else if (tok == "-") {
      sign = -1;
    } else if (!tok.empty() && (std::isdigit(static_cast<unsigned char>(tok[0])))) {
      if (have_coef) throw std::runtime_error("lp: two coefficients in a row");
      coef = parse_int(tok);
      have_coef = true;
    } else {
      if (out.count(tok)) throw std::runtime_error("lp: repeated variable " + tok);
      out[tok] = sign * coef;
      sign = 1;
      coef = 1;
      have_coef = false;
    }
  }
  if (have_coef && !(out.empty() && coef == 0)) throw std::runtime_error("lp: dangling coefficient");
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

}  // namespace

LpModel read_lp(const std::string& text) {
  LpModel model;
  std::istringstream in(text);
  std::string section;
  std::vector<std::string> pending;  // tokens of the current (possibly wrapped) line
  std::string pending_name;

  auto flush = [&] {
    if (pending_name.empty()) return;
    if (section == "Minimize") {
      model.objective = parse_terms(pending);
    } else if (section == "Subject To") {
      if (pending.size() < 2) throw std::runtime_error("lp: short row " + pending_name);
      LpModel::Row row;
      row.name = pending_name;
      row.rhs = parse_int(pending.back());
      row.rel = pending[pending.size() - 2];
      if (row.rel != "<=" && row.rel != ">=" && row.rel != "=") throw std::runtime_error("lp: bad relation");
      row.terms = parse_terms({pending.begin(), pending.end() - 2});
      model.rows.push_back(std::move(row));
    }
    pending.clear();
    pending_name.clear();
  };

  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '\\') continue;
    if (line[0] != ' ') {
      flush();
      section = line;
      if (section == "End") break;
      continue;
    }
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (section == "Minimize" || section == "Subject To") {
      if (toks[0].back() == ':') {
        flush();
        pending_name = toks[0].substr(0, toks[0].size() - 1);
        pending.assign(toks.begin() + 1, toks.end());
      } else {
        if (pending_name.empty()) throw std::runtime_error("lp: continuation without a row");
        pending.insert(pending.end(), toks.begin(), toks.end());
      }
    } else if (section == "Bounds") {
      if (toks.size() != 5 || toks[1] != "<=" || toks[3] != "<=") throw std::runtime_error("lp: bad bound");
      model.bounds[toks[2]] = {parse_int(toks[0]), parse_int(toks[4])};
    } else if (section == "Binary") {
      model.binaries.push_back(toks.at(0));
    } else if (section == "Generals") {
      model.generals.push_back(toks.at(0));
    } else {
      throw std::runtime_error("lp: line outside a section");
    }
  }
  flush();
  return model;
}

}  // namespace oracle
