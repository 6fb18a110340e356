#include "cosma/milp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "cosma/error.hpp"

namespace cosma {

std::string_view to_string(Relation rel) {
  switch (rel) {
    case Relation::LessEq: return "<=";
    case Relation::Equal: return "=";
    case Relation::GreaterEq: return ">=";
  }
  return "<=";
}

std::optional<int> MilpInstance::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

int MilpInstance::add_variable(std::string name, VarDomain domain, std::int64_t lo, std::int64_t hi) {
  int index = static_cast<int>(variables_.size());
  if (!by_name_.emplace(name, index).second)
    throw Error(ErrorCode::NameCollision, "variable '" + name + "' declared twice");
  variables_.push_back({std::move(name), domain, lo, hi});
  return index;
}

void MilpInstance::add_constraint(Constraint c) { constraints_.push_back(std::move(c)); }

double MilpInstance::evaluate(const std::vector<Term>& terms, const Assignment& values) const {
  double sum = 0.0;
  for (const Term& term : terms) sum += static_cast<double>(term.coef) * values.at(term.var);
  return sum;
}

std::optional<int> MilpInstance::first_violation(const Assignment& values, double tolerance) const {
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const Constraint& c = constraints_[i];
    double lhs = evaluate(c.terms, values);
    double rhs = static_cast<double>(c.rhs);
    bool ok = true;
    switch (c.rel) {
      case Relation::LessEq: ok = lhs <= rhs + tolerance; break;
      case Relation::GreaterEq: ok = lhs >= rhs - tolerance; break;
      case Relation::Equal: ok = std::abs(lhs - rhs) <= tolerance; break;
    }
    if (!ok) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> MilpInstance::first_domain_violation(const Assignment& values, double tolerance) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const Variable& v = variables_[i];
    double x = values.at(i);
    if (x < static_cast<double>(v.lo) - tolerance || x > static_cast<double>(v.hi) + tolerance)
      return static_cast<int>(i);
    if (std::abs(x - std::round(x)) > tolerance) return static_cast<int>(i);
  }
  return std::nullopt;
}

LinExpr& LinExpr::add(const LinExpr& other, std::int64_t scale) {
  for (const Term& t : other.terms) terms.push_back({t.var, t.coef * scale});
  constant += other.constant * scale;
  return *this;
}

bool add_linear_constraint(MilpInstance& m, const LinExpr& lhs, Relation rel, const LinExpr& rhs,
                           std::string family) {
  std::map<int, std::int64_t> merged;
  for (const Term& t : lhs.terms) merged[t.var] += t.coef;
  for (const Term& t : rhs.terms) merged[t.var] -= t.coef;
  std::int64_t bound = rhs.constant - lhs.constant;

  Constraint c;
  c.rel = rel;
  c.rhs = bound;
  c.family = std::move(family);
  std::int64_t min_lhs = 0, max_lhs = 0;
  for (auto [var, coef] : merged) {
    if (coef == 0) continue;
    const Variable& v = m.variables()[var];
    c.terms.push_back({var, coef});
    if (coef > 0) {
      min_lhs += coef * v.lo;
      max_lhs += coef * v.hi;
    } else {
      min_lhs += coef * v.hi;
      max_lhs += coef * v.lo;
    }
  }

  bool implied = false, impossible = false;
  switch (rel) {
    case Relation::LessEq:
      implied = max_lhs <= bound;
      impossible = min_lhs > bound;
      break;
    case Relation::GreaterEq:
      implied = min_lhs >= bound;
      impossible = max_lhs < bound;
      break;
    case Relation::Equal:
      implied = min_lhs == bound && max_lhs == bound;
      impossible = min_lhs > bound || max_lhs < bound;
      break;
  }
  if (impossible)
    throw Error(ErrorCode::Infeasible, "constraint family '" + c.family + "' cannot be satisfied");
  if (implied) return false;
  m.add_constraint(std::move(c));
  return true;
}

InstanceStats instance_stats(const MilpInstance& m) {
  return {static_cast<int>(m.variables().size()), static_cast<int>(m.constraints().size())};
}

// ---------------------------------------------------------------------------
// LP text

namespace {

constexpr std::size_t kWrapColumn = 200;

class LineWriter {
 public:
  LineWriter(std::ostream& out, std::string head) : out_(out), line_(std::move(head)) {}

  void token(const std::string& tok) {
    if (line_.size() + 1 + tok.size() > kWrapColumn && !line_.empty()) {
      out_ << line_ << '\n';
      line_ = "   ";
      line_ += tok;
      return;
    }
    line_ += ' ';
    line_ += tok;
  }
  void finish() { out_ << line_ << '\n'; }

 private:
  std::ostream& out_;
  std::string line_;
};

void write_terms(LineWriter& w, const MilpInstance& m, const std::vector<Term>& terms) {
  if (terms.empty()) {
    w.token("0");
    return;
  }
  bool first = true;
  for (const Term& t : terms) {
    std::int64_t mag = t.coef < 0 ? -t.coef : t.coef;
    std::string tok;
    if (first) {
      if (t.coef < 0) tok = "- ";
    } else {
      tok = t.coef < 0 ? "- " : "+ ";
    }
    if (mag != 1) tok += std::to_string(mag) + " ";
    tok += m.variables()[t.var].name;
    w.token(tok);
    first = false;
  }
}

}  // namespace

void write_lp(const MilpInstance& m, std::ostream& out) {
  const auto& meta = m.metadata();
  out << "\\ cosma " << (meta.mode.empty() ? "instance" : meta.mode) << " graph="
      << (meta.graph.empty() ? "-" : meta.graph) << " budget=" << meta.budget << "\n";
  out << "Minimize\n";
  {
    LineWriter w(out, " obj:");
    write_terms(w, m, m.objective());
    w.finish();
  }
  out << "Subject To\n";
  for (std::size_t i = 0; i < m.constraints().size(); ++i) {
    const Constraint& c = m.constraints()[i];
    LineWriter w(out, " c" + std::to_string(i) + ":");
    write_terms(w, m, c.terms);
    w.token(std::string(to_string(c.rel)));
    w.token(std::to_string(c.rhs));
    w.finish();
  }

  std::vector<int> order(m.variables().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return m.variables()[a].name < m.variables()[b].name; });

  out << "Bounds\n";
  for (int v : order) {
    const Variable& var = m.variables()[v];
    if (var.domain == VarDomain::Integer)
      out << " " << var.lo << " <= " << var.name << " <= " << var.hi << "\n";
  }
  out << "Binary\n";
  for (int v : order)
    if (m.variables()[v].domain == VarDomain::Binary) out << " " << m.variables()[v].name << "\n";
  out << "Generals\n";
  for (int v : order)
    if (m.variables()[v].domain == VarDomain::Integer) out << " " << m.variables()[v].name << "\n";
  out << "End\n";
}

std::string lp_text(const MilpInstance& m) {
  std::ostringstream os;
  write_lp(m, os);
  return os.str();
}

}  // namespace cosma
