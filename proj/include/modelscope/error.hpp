#pragma once

#include <stdexcept>
#include <string>

namespace modelscope {

enum class ErrorCode {
  InvalidArgument = 1,
  Io,
  MissingColumn,
  RankDeficient,
  NonFiniteValue,
  AlreadyHasRV,
  TooFewMains,
  NotPositiveDefinite,
  DegenerateProbability,
  UnknownVariable,
  TooManySkipped,
  NoPeak,
  AllModelsContainRV,
  Internal,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace modelscope
