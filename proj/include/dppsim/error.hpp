#pragma once

#include <stdexcept>
#include <string>

namespace dppsim {

enum class ErrorCode {
  NonPositiveProbabilitySum,
  NegativeProbability,
  NegativeRate,
  DuplicateState,
  SizeMismatch,
  SlotBeyondSchedule,
  RateOutOfRange,
  LambdaAtVertex,
  LambdaOutOfRange,
  EpsilonOutOfRange,
  InvalidInitialPoint,
  InfeasibleTarget,
  IndexOutOfRange,
  MissingState,
  BetaExceedsDelta,
  InvalidWindow,
  HorizonExceeded,
  NoArrivals,
  PreconditionViolated,
  GammaNonpositive,
  ParseError,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dppsim
