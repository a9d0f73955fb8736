#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cbir/config.hpp"
#include "cbir/error.hpp"
#include "cbir/retrieval.hpp"

namespace cbir {

inline constexpr int kIndexFormatVersion = 1;

struct IndexFile {
  int format_version = kIndexFormatVersion;
  std::int64_t build_timestamp = 0;  // UTC seconds
  SearchIndex index;
};

struct SkippedFile {
  std::string path;
  ErrorCode code;
  std::string message;
};

struct BuildOutcome {
  IndexFile file;
  std::vector<SkippedFile> skipped;
};

/// Two-pass build over every regular file below image_dir (recursively).
///
/// Pass 1 decodes each file and extracts raw features; files that fail are
/// skipped and reported. The classifier, normalizer and one FCM model per
/// populated color group are then fitted, and pass 2 fills in each entry's
/// class, normalized vector and fuzzy memberships. image_id is the path
/// relative to image_dir with '/' separators; entries are sorted by it.
/// build_timestamp honours SOURCE_DATE_EPOCH when set.
BuildOutcome build_index(const std::string& image_dir, const EngineConfig& config);

// The config object as embedded in the index document (compact form).
std::string config_json(const EngineConfig& config);

// Canonical document: sorted keys, two-space indent, trailing newline.
std::string serialize_index(const IndexFile& file);

/// Parses and validates a serialized index. Throws kIncompatibleVersion for a
/// format_version other than 1 and kCorruptIndex naming the offending field for
/// any other violated invariant.
IndexFile deserialize_index(std::string_view text);

void save_index(const IndexFile& file, const std::string& path);
IndexFile load_index(const std::string& path);

}  // namespace cbir
