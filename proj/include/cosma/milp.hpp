#pragma once

// Solver-independent mixed-integer linear program: integer coefficients,
// binary or bounded-integer variables, a minimization objective.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cosma {

enum class VarDomain { Binary, Integer };
enum class Relation { LessEq, Equal, GreaterEq };

std::string_view to_string(Relation rel);

struct Variable {
  std::string name;
  VarDomain domain = VarDomain::Binary;
  std::int64_t lo = 0;
  std::int64_t hi = 1;
};

struct Term {
  int var = 0;
  std::int64_t coef = 0;
};

struct Constraint {
  std::vector<Term> terms;
  Relation rel = Relation::LessEq;
  std::int64_t rhs = 0;
  std::string family;  // which rule produced it, for diagnostics
};

/// Values indexed like MilpInstance::variables.
using Assignment = std::vector<double>;

class MilpInstance {
 public:
  struct Metadata {
    std::string mode;
    std::string graph;
    std::int64_t budget = 0;
  };

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Term>& objective() const { return objective_; }
  const Metadata& metadata() const { return meta_; }
  Metadata& metadata() { return meta_; }

  std::optional<int> find(std::string_view name) const;

  /// Adds a variable; throws NameCollision if the name is taken.
  int add_variable(std::string name, VarDomain domain, std::int64_t lo, std::int64_t hi);
  /// Appends a constraint as given (no simplification).
  void add_constraint(Constraint c);
  void set_objective(std::vector<Term> terms) { objective_ = std::move(terms); }

  double evaluate(const std::vector<Term>& terms, const Assignment& values) const;
  double objective_value(const Assignment& values) const { return evaluate(objective_, values); }

  /// Index of the first constraint violated by more than `tolerance`, if any.
  std::optional<int> first_violation(const Assignment& values, double tolerance) const;
  /// Index of the first variable outside its bounds or, for integer domains,
  /// further than `tolerance` from an integer.
  std::optional<int> first_domain_violation(const Assignment& values, double tolerance) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<Term> objective_;
  std::unordered_map<std::string, int> by_name_;
  Metadata meta_;
};

/// Linear expression with a constant part; the encoder's building block.
struct LinExpr {
  std::vector<Term> terms;
  std::int64_t constant = 0;

  LinExpr& add(int var, std::int64_t coef = 1) {
    terms.push_back({var, coef});
    return *this;
  }
  LinExpr& add_constant(std::int64_t c) {
    constant += c;
    return *this;
  }
  LinExpr& add(const LinExpr& other, std::int64_t scale = 1);
};

/// Adds `lhs rel rhs` after moving everything to the left, merging repeated
/// variables and folding constants. Constraints that the variable bounds
/// already imply are skipped; returns false in that case. Throws
/// Error(Infeasible) when the bounds make the constraint unsatisfiable.
bool add_linear_constraint(MilpInstance& m, const LinExpr& lhs, Relation rel, const LinExpr& rhs,
                           std::string family);

struct InstanceStats {
  int num_vars = 0;
  int num_constraints = 0;
};

InstanceStats instance_stats(const MilpInstance& m);

/// CPLEX-LP text. Variables are listed by name in the Bounds/Binary/Generals
/// sections, constraints in creation order as c0, c1, ...
void write_lp(const MilpInstance& m, std::ostream& out);
std::string lp_text(const MilpInstance& m);

}  // namespace cosma
