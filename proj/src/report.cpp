#include "cosma/report.hpp"

#include <chrono>
#include <functional>
#include <iomanip>
#include <sstream>

#include "cosma/baselines.hpp"
#include "cosma/error.hpp"

namespace cosma {

Bytes resolve_budget(const std::string& text, const BudgetTriple& triple) {
  if (text == "mr") return triple.m_r;
  if (text == "mh") return triple.m_h;
  if (text == "mp") return triple.m_p;
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || value < 0) throw Error(ErrorCode::InvalidParams, "bad budget '" + text + "'");
  return value;
}

namespace {

CompareRow timed(const std::string& scheme, Bytes budget, const std::function<void(CompareRow&)>& body) {
  CompareRow row;
  row.scheme = scheme;
  row.budget = budget;
  auto start = std::chrono::steady_clock::now();
  try {
    body(row);
  } catch (const Error& e) {
    row.bytes.reset();
    row.peak.reset();
    row.status = std::string(to_string(e.code()));
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

void from_solution(CompareRow& row, const PlanSolution& s) {
  row.status = std::string(to_string(s.result.status));
  if (s.metrics) {
    row.bytes = s.metrics->non_compulsory_bytes;
    row.peak = s.metrics->peak_footprint;
  }
}

}  // namespace

CompareReport run_compare(const DataflowGraph& g, const SolverConfig& cfg, const CompareOptions& options) {
  CompareReport report;
  PeakSolution mpmf = solve_mpmf(g, cfg);
  report.triple.m_r = compute_min_budget(g);
  report.triple.m_p = mpmf.peak;
  report.triple.m_h = (report.triple.m_r + report.triple.m_p) / 2;
  const std::vector<int> by_default = default_schedule(g);

  for (const std::string& text : options.budgets) {
    const Bytes budget = resolve_budget(text, report.triple);
    report.rows.push_back(timed("cosma", budget, [&](CompareRow& row) {
      from_solution(row, solve_plan(g, MinAccess{budget}, cfg));
    }));
    for (auto [name, order] : {std::pair<const char*, const std::vector<int>*>{"default", &by_default},
                               {"mpmf", &mpmf.order}}) {
      for (Policy policy : {Policy::Belady, Policy::Greedy}) {
        report.rows.push_back(timed(std::string(name) + "+" + std::string(to_string(policy)), budget,
                                    [&](CompareRow& row) {
                                      TrafficMetrics m = validate(g, run_baseline(g, *order, budget, policy));
                                      row.bytes = m.non_compulsory_bytes;
                                      row.peak = m.peak_footprint;
                                      row.status = "ok";
                                    }));
      }
    }
    report.rows.push_back(timed("cosma_fs_default", budget, [&](CompareRow& row) {
      from_solution(row, solve_plan(g, FixedSchedule{budget, by_default}, cfg));
    }));
    report.rows.push_back(timed("cosma_fs_mpmf", budget, [&](CompareRow& row) {
      from_solution(row, solve_plan(g, FixedSchedule{budget, mpmf.order}, cfg));
    }));
    if (options.partition) {
      report.rows.push_back(timed("cosma_dnc", budget, [&](CompareRow& row) {
        StitchedPlan s = solve_partitioned(g, *options.partition, budget, cfg);
        TrafficMetrics m = validate(g, s.combined);
        if (m.non_compulsory_bytes != s.total_bytes)
          throw Error(ErrorCode::InconsistentAssignment, "stitched bytes disagree with the simulator");
        row.bytes = m.non_compulsory_bytes;
        row.peak = m.peak_footprint;
        row.status = "ok";
      }));
    }
  }
  return report;
}

std::string compare_csv(const CompareReport& report) {
  std::ostringstream os;
  os << "scheme,budget,bytes,peak,seconds,status\n";
  for (const CompareRow& r : report.rows) {
    os << r.scheme << ',' << r.budget << ',' << (r.bytes ? std::to_string(*r.bytes) : "") << ','
       << (r.peak ? std::to_string(*r.peak) : "") << ',' << std::fixed << std::setprecision(3) << r.seconds << ','
       << r.status << '\n';
  }
  return os.str();
}

std::string compare_table(const CompareReport& report) {
  std::ostringstream os;
  os << "M_R=" << report.triple.m_r << " M_P=" << report.triple.m_p << " M_H=" << report.triple.m_h << "\n";
  os << std::left << std::setw(18) << "scheme" << std::right << std::setw(10) << "budget" << std::setw(12) << "bytes"
     << std::setw(10) << "peak" << std::setw(10) << "seconds" << "  status\n";
  for (const CompareRow& r : report.rows) {
    os << std::left << std::setw(18) << r.scheme << std::right << std::setw(10) << r.budget << std::setw(12)
       << (r.bytes ? std::to_string(*r.bytes) : "-") << std::setw(10) << (r.peak ? std::to_string(*r.peak) : "-")
       << std::setw(10) << std::fixed << std::setprecision(3) << r.seconds << "  " << r.status << "\n";
  }
  return os.str();
}

}  // namespace cosma
