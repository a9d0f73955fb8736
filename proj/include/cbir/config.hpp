#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cbir {

struct EngineConfig {
  struct Preprocess {
    bool enabled = true;
    int window = 3;
    friend bool operator==(const Preprocess&, const Preprocess&) = default;
  } preprocess;
  struct Glcm {
    int levels = 16;
    int patch = 16;
    friend bool operator==(const Glcm&, const Glcm&) = default;
  } glcm;
  struct Fcm {
    int c = 3;
    double m = 2.0;
    double eps = 1e-5;
    int max_iter = 100;
    std::uint64_t seed = 42;
    friend bool operator==(const Fcm&, const Fcm&) = default;
  } fcm;
  struct Retrieval {
    int k_min = 10;
    friend bool operator==(const Retrieval&, const Retrieval&) = default;
  } retrieval;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

// Throws Error{kConfig} naming the offending key.
void validate(const EngineConfig& config);

/// Parses the flat `key = value` format. Keys are EngineConfig field paths
/// (`fcm.m`, `preprocess.enabled`, ...); `#` starts a comment line; missing
/// keys keep their defaults; unknown or repeated keys are errors.
EngineConfig parse_config(std::string_view text);
EngineConfig load_config(const std::string& path);

// Every key, in declaration order, in the same format parse_config reads.
std::string format_config(const EngineConfig& config);

}  // namespace cbir
