#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scopekit {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kParse,
  kNonPositiveDepth,
  kDistortionInversionFailed,
  kDimensionMismatch,
  kDegenerateHistogram,
  kMaskCoversEverything,
  kBadKernel,
  kEmptyMask,
  kShapeMismatch,
  kChannelChainBroken,
  kInsufficientValidDepth,
  kNoMatches,
  kDegenerateGeometry,
  kTrajectoryTooShort,
  kNoConfidentPixels,
  kNonUniformSampling,
  kSignalTooShort,
  kBadSize,
  kBadRatio,
  kNoFeatures,
  kEmptySet,
  kInsufficientMatches,
  kNoConsensus,
  kNonUnitLight,
  kTooFewPoints,
  kDiverged,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace scopekit
