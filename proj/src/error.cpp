#include "dppsim/error.hpp"

namespace dppsim {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveProbabilitySum: return "NonPositiveProbabilitySum";
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::DuplicateState: return "DuplicateState";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::SlotBeyondSchedule: return "SlotBeyondSchedule";
    case ErrorCode::RateOutOfRange: return "RateOutOfRange";
    case ErrorCode::LambdaAtVertex: return "LambdaAtVertex";
    case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorCode::InvalidInitialPoint: return "InvalidInitialPoint";
    case ErrorCode::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingState: return "MissingState";
    case ErrorCode::BetaExceedsDelta: return "BetaExceedsDelta";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::NoArrivals: return "NoArrivals";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::GammaNonpositive: return "GammaNonpositive";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace dppsim
