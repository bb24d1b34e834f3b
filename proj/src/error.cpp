#include "ovp/error.hpp"

namespace ovp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NotDiagonal: return "NotDiagonal";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::InvalidSignal: return "InvalidSignal";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotSeparating: return "NotSeparating";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::BoundaryCase: return "BoundaryCase";
    case ErrorCode::EvenN: return "EvenN";
    case ErrorCode::EvenD: return "EvenD";
    case ErrorCode::InvalidRegime: return "InvalidRegime";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MemoryCap: return "MemoryCap";
    case ErrorCode::IncompleteData: return "IncompleteData";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ovp
