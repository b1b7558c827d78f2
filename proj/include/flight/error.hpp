#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flight {

enum class ErrorCode {
  kInvalidArgument,
  kInsufficientData,
  kNoConsensus,
  kRegionTooSmall,
  kFoeAtInfinity,
  kNoValidSample,
  // correspondence file parsing
  kIo,
  kBadVersion,
  kMalformedHeader,
  kNonFinite,
  kMalformedRecord,
  kTooFewRecords,
  kInvalidRotation,
  kInvalidIntrinsics,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flight
