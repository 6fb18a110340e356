#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cosma {

enum class ErrorCode {
  // graph loading
  ParseError,
  CycleError,
  DanglingReference,
  DuplicateId,
  // encoding / decoding
  BudgetTooSmall,
  InvalidOrder,
  InvalidMode,
  NameCollision,
  NonIntegralSolution,
  InconsistentAssignment,
  // solving
  SolverError,
  Timeout,
  TooLarge,
  Infeasible,
  UnknownVariable,
  MalformedLine,
  IoError,
  // plan validation
  DepViolation,
  OverlapViolation,
  BudgetViolation,
  ResidencyViolation,
  AddressDrift,
  LostTensor,
  MultiSpill,
  MultiCreate,
  // baselines / partition / fixtures
  NoSpace,
  Stuck,
  InvalidBreaks,
  InvalidParams,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the plan simulator. Carries the offending timestep and tensors so
/// callers can report "OverlapViolation t=2" style diagnostics.
class ValidationError : public Error {
 public:
  ValidationError(ErrorCode code, int timestep, std::vector<std::string> tensors,
                  const std::string& detail)
      : Error(code, format(timestep, tensors, detail)),
        timestep_(timestep),
        tensors_(std::move(tensors)) {}

  int timestep() const noexcept { return timestep_; }
  const std::vector<std::string>& tensors() const noexcept { return tensors_; }

 private:
  static std::string format(int t, const std::vector<std::string>& tensors,
                            const std::string& detail);

  int timestep_;
  std::vector<std::string> tensors_;
};

}  // namespace cosma
