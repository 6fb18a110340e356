#include "cosma/solver.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "cosma/error.hpp"

namespace cosma {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Timeout: return "timeout";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

std::string_view to_string(Backend backend) { return backend == Backend::External ? "external" : "internal"; }

SolverConfig SolverConfig::from_environment() {
  SolverConfig cfg;
  if (const char* cmd = std::getenv("COSMA_SOLVER_CMD"); cmd && *cmd) {
    cfg.backend = Backend::External;
    cfg.command_template = cmd;
  }
  return cfg;
}

std::int64_t integral_objective(const MilpInstance& m, const Assignment& values, double tolerance) {
  Assignment snapped = values;
  for (double& x : snapped)
    if (std::abs(x - std::round(x)) <= tolerance) x = std::round(x);
  return std::llround(m.objective_value(snapped));
}

SolveResult read_solution(std::istream& in, const MilpInstance& m) {
  SolveResult r;
  r.status = SolveStatus::Feasible;
  r.assignment.assign(m.variables().size(), 0.0);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string name, value, extra;
    if (!(ls >> name)) continue;
    if (name[0] == '#' || name[0] == '=') continue;
    if (!(ls >> value) || (ls >> extra))
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": '" + line + "'");
    if (name == "status") {
      if (value == "optimal")
        r.status = SolveStatus::Optimal;
      else if (value == "infeasible")
        r.status = SolveStatus::Infeasible;
      continue;
    }
    auto var = m.find(name);
    if (!var) throw Error(ErrorCode::UnknownVariable, "line " + std::to_string(line_no) + ": '" + name + "'");
    char* end = nullptr;
    double x = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(x))
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": bad value '" + value + "'");
    r.assignment[*var] = x;
  }
  if (r.status == SolveStatus::Infeasible) {
    r.assignment.clear();
    return r;
  }
  r.objective = std::llround(m.objective_value(r.assignment));
  return r;
}

namespace {

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
  return text;
}

// Returns the exit status, or nullopt when the time limit killed the process group.
std::optional<int> run_command(const std::string& command, double time_limit) {
  pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::SolverError, "fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(time_limit);
  int status = 0;
  for (;;) {
    pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (std::chrono::steady_clock::now() > deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      return std::nullopt;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "cosma-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw Error(ErrorCode::IoError, "cannot create temporary directory");
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

SolveResult solve_external(const MilpInstance& m, const SolverConfig& cfg) {
  const std::string& cmd = cfg.command_template;
  if (cmd.find("{lp}") == std::string::npos || cmd.find("{sol}") == std::string::npos)
    throw Error(ErrorCode::SolverError, "solver command must contain {lp} and {sol}");
  TempDir dir;
  const auto lp = dir.path / "model.lp";
  const auto sol = dir.path / "model.sol";
  {
    std::ofstream out(lp);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + lp.string());
    write_lp(m, out);
  }
  std::string command = substitute(substitute(cmd, "{lp}", lp.string()), "{sol}", sol.string());
  setenv("COSMA_TIME_LIMIT", std::to_string(cfg.time_limit).c_str(), 1);

  auto start = std::chrono::steady_clock::now();
  auto code = run_command(command, cfg.time_limit);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!code) throw Error(ErrorCode::Timeout, "solver exceeded " + std::to_string(cfg.time_limit) + " s");
  if (*code != 0) throw Error(ErrorCode::SolverError, "solver exited with status " + std::to_string(*code));
  std::ifstream in(sol);
  if (!in) throw Error(ErrorCode::SolverError, "solver wrote no solution file");

  SolveResult r = read_solution(in, m);
  r.solve_seconds = seconds;
  if (!r.has_solution()) return r;
  if (auto bad = m.first_violation(r.assignment, cfg.tolerance))
    throw Error(ErrorCode::SolverError, "solution violates constraint c" + std::to_string(*bad) + " (" +
                                            m.constraints()[*bad].family + ")");
  if (auto bad = m.first_domain_violation(r.assignment, cfg.tolerance))
    throw Error(ErrorCode::SolverError, "solution puts " + m.variables()[*bad].name + " outside its domain");
  r.objective = integral_objective(m, r.assignment, cfg.tolerance);
  return r;
}

SolveResult solve(const DataflowGraph& g, const Encoding& enc, const SolverConfig& cfg) {
  if (cfg.backend == Backend::External) return solve_external(enc.instance, cfg);
  return solve_internal(g, enc, cfg);
}

}  // namespace cosma
