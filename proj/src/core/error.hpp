#pragma once

#include <stdexcept>
#include <string>

namespace rlmpc {

enum class ErrorCode {
  InvalidArgument = 1,
  NonPositiveJt,
  SingularMassMatrix,
  InvalidPerturbation,
  IndivisibleSampling,
  DimensionMismatch,
  NotPositiveDefinite,
  StaleCache,
  EmptyDataset,
  EmptyBatch,
  InsufficientData,
  WindowOutOfRange,
  ResetTimeout,
  HardViolation,
  Config,
  Io,
  CorruptFile,
  MissingArtifact,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace rlmpc
