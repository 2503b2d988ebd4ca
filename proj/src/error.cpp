#include "modelscope/error.hpp"

namespace modelscope {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::AlreadyHasRV: return "AlreadyHasRV";
    case ErrorCode::TooFewMains: return "TooFewMains";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DegenerateProbability: return "DegenerateProbability";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::TooManySkipped: return "TooManySkipped";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::AllModelsContainRV: return "AllModelsContainRV";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace modelscope
