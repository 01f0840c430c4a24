#include "scopekit/error.hpp"

namespace scopekit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kDistortionInversionFailed: return "DistortionInversionFailed";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::kMaskCoversEverything: return "MaskCoversEverything";
    case ErrorCode::kBadKernel: return "BadKernel";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kChannelChainBroken: return "ChannelChainBroken";
    case ErrorCode::kInsufficientValidDepth: return "InsufficientValidDepth";
    case ErrorCode::kNoMatches: return "NoMatches";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kTrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::kNoConfidentPixels: return "NoConfidentPixels";
    case ErrorCode::kNonUniformSampling: return "NonUniformSampling";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kBadSize: return "BadSize";
    case ErrorCode::kBadRatio: return "BadRatio";
    case ErrorCode::kNoFeatures: return "NoFeatures";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kInsufficientMatches: return "InsufficientMatches";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kNonUnitLight: return "NonUnitLight";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kDiverged: return "Diverged";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace scopekit
