#include "cbir/error.hpp"

namespace cbir {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDecode: return "decode-error";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kImageTooSmall: return "image-too-small";
    case ErrorCode::kEmptyGlcm: return "empty-glcm";
    case ErrorCode::kInvariantViolation: return "invariant-violation";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kEmptyIndex: return "empty-index";
    case ErrorCode::kEmptyResult: return "empty-result";
    case ErrorCode::kInsufficientCorpus: return "insufficient-corpus";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kIncompatibleVersion: return "incompatible-version";
    case ErrorCode::kCorruptIndex: return "corrupt-index";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kGroundTruth: return "ground-truth";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kPathTraversal: return "path-traversal";
    case ErrorCode::kPayloadTooLarge: return "payload-too-large";
  }
  return "unknown";
}

}  // namespace cbir
