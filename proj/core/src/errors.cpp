#include "tvcov/errors.hpp"

namespace tvcov {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CoincidentGenerators: return "CoincidentGenerators";
    case ErrorCode::OutsideArena: return "OutsideArena";
    case ErrorCode::EmptyPolygon: return "EmptyPolygon";
    case ErrorCode::TooFewAgents: return "TooFewAgents";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BudgetDomain: return "BudgetDomain";
    case ErrorCode::BadShift: return "BadShift";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::PlannerInfeasible: return "PlannerInfeasible";
    case ErrorCode::TrackerInfeasible: return "TrackerInfeasible";
    case ErrorCode::CertificationFailed: return "CertificationFailed";
    case ErrorCode::MissingVote: return "MissingVote";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace tvcov
