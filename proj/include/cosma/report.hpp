#pragma once

// Scheme-by-budget comparison in the style of the evaluation tables.

#include <optional>
#include <string>
#include <vector>

#include "cosma/partition.hpp"
#include "cosma/pipeline.hpp"

namespace cosma {

struct CompareRow {
  std::string scheme;
  Bytes budget = 0;
  std::optional<Bytes> bytes;  // non-compulsory bytes from the simulator
  std::optional<Bytes> peak;
  double seconds = 0.0;
  std::string status;  // solver status, "ok", or the error code of a failed run
};

struct CompareReport {
  BudgetTriple triple;
  std::vector<CompareRow> rows;
};

struct CompareOptions {
  std::vector<std::string> budgets{"mr", "mh", "mp"};  // selectors or integers
  std::optional<PartitionSpec> partition;              // adds the cosma_dnc row
};

/// "mr" / "mh" / "mp" or a byte count.
Bytes resolve_budget(const std::string& text, const BudgetTriple& triple);

/// Runs every scheme at every budget. Failures of individual rows are
/// recorded in their status.
CompareReport run_compare(const DataflowGraph& g, const SolverConfig& cfg, const CompareOptions& options);

std::string compare_csv(const CompareReport& report);
std::string compare_table(const CompareReport& report);

}  // namespace cosma
