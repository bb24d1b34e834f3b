#pragma once

#include <stdexcept>
#include <string>

namespace ovp {

enum class ErrorCode {
  InvalidParams,
  NotDiagonal,
  Overflow,
  InvalidSignal,
  SingularGram,
  NotConverged,
  Infeasible,
  IndexOutOfRange,
  NotSeparating,
  DegenerateInput,
  BoundaryCase,
  EvenN,
  EvenD,
  InvalidRegime,
  ConfigError,
  MemoryCap,
  IncompleteData,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C API can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ovp
