#include "cosma/error.hpp"

#include <sstream>

namespace cosma {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::InvalidMode: return "InvalidMode";
    case ErrorCode::NameCollision: return "NameCollision";
    case ErrorCode::NonIntegralSolution: return "NonIntegralSolution";
    case ErrorCode::InconsistentAssignment: return "InconsistentAssignment";
    case ErrorCode::SolverError: return "SolverError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DepViolation: return "DepViolation";
    case ErrorCode::OverlapViolation: return "OverlapViolation";
    case ErrorCode::BudgetViolation: return "BudgetViolation";
    case ErrorCode::ResidencyViolation: return "ResidencyViolation";
    case ErrorCode::AddressDrift: return "AddressDrift";
    case ErrorCode::LostTensor: return "LostTensor";
    case ErrorCode::MultiSpill: return "MultiSpill";
    case ErrorCode::MultiCreate: return "MultiCreate";
    case ErrorCode::NoSpace: return "NoSpace";
    case ErrorCode::Stuck: return "Stuck";
    case ErrorCode::InvalidBreaks: return "InvalidBreaks";
    case ErrorCode::InvalidParams: return "InvalidParams";
  }
  return "Unknown";
}

std::string ValidationError::format(int t, const std::vector<std::string>& tensors,
                                    const std::string& detail) {
  std::ostringstream os;
  os << "t=" << t;
  if (!tensors.empty()) {
    os << " [";
    for (std::size_t i = 0; i < tensors.size(); ++i) os << (i ? "," : "") << tensors[i];
    os << "]";
  }
  if (!detail.empty()) os << " " << detail;
  return os.str();
}

}  // namespace cosma
