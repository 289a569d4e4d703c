#include "core/error.hpp"

namespace rlmpc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveJt: return "NonPositiveJt";
    case ErrorCode::SingularMassMatrix: return "SingularMassMatrix";
    case ErrorCode::InvalidPerturbation: return "InvalidPerturbation";
    case ErrorCode::IndivisibleSampling: return "IndivisibleSampling";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::ResetTimeout: return "ResetTimeout";
    case ErrorCode::HardViolation: return "HardViolation";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

}  // namespace rlmpc
