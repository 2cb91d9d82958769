#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvcov {

/// Failure categories raised across the library. Each maps to a distinct
/// precondition or infeasibility the caller can react to.
enum class ErrorCode {
  CoincidentGenerators,
  OutsideArena,
  EmptyPolygon,
  TooFewAgents,
  ShapeMismatch,
  DimensionMismatch,
  BudgetDomain,
  BadShift,
  DomainError,
  PlannerInfeasible,
  TrackerInfeasible,
  CertificationFailed,
  MissingVote,
  EmptyLog,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace tvcov
