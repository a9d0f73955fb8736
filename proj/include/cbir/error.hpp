#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbir {

enum class ErrorCode {
  kDecode,
  kUnsupportedFormat,
  kInvalidArgument,
  kImageTooSmall,
  kEmptyGlcm,
  kInvariantViolation,
  kInsufficientData,
  kEmptyIndex,
  kEmptyResult,
  kInsufficientCorpus,
  kIo,
  kIncompatibleVersion,
  kCorruptIndex,
  kConfig,
  kGroundTruth,
  kNotFound,
  kPathTraversal,
  kPayloadTooLarge,
};

// Stable, machine-parsable spelling used by the CLI and HTTP error bodies.
std::string_view code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cbir
