#include "cbir/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "cbir/error.hpp"

namespace cbir {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(ErrorCode::kConfig,
              fmt::format("{}: cannot parse '{}' as {}", key, value, want));
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "integer");
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  // from_chars for double is missing from GCC 11's libstdc++.
  const std::string s(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "real");
  }
  if (used != s.size() || !std::isfinite(out)) bad_value(key, value, "real");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value, "boolean (true|false)");
}

using Setter = std::function<void(EngineConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"preprocess.enabled",
       [](EngineConfig& c, auto k, auto v) { c.preprocess.enabled = parse_bool(k, v); }},
      {"preprocess.window",
       [](EngineConfig& c, auto k, auto v) { c.preprocess.window = parse_int<int>(k, v); }},
      {"glcm.levels", [](EngineConfig& c, auto k, auto v) { c.glcm.levels = parse_int<int>(k, v); }},
      {"glcm.patch", [](EngineConfig& c, auto k, auto v) { c.glcm.patch = parse_int<int>(k, v); }},
      {"fcm.c", [](EngineConfig& c, auto k, auto v) { c.fcm.c = parse_int<int>(k, v); }},
      {"fcm.m", [](EngineConfig& c, auto k, auto v) { c.fcm.m = parse_real(k, v); }},
      {"fcm.eps", [](EngineConfig& c, auto k, auto v) { c.fcm.eps = parse_real(k, v); }},
      {"fcm.max_iter", [](EngineConfig& c, auto k, auto v) { c.fcm.max_iter = parse_int<int>(k, v); }},
      {"fcm.seed",
       [](EngineConfig& c, auto k, auto v) { c.fcm.seed = parse_int<std::uint64_t>(k, v); }},
      {"retrieval.k_min",
       [](EngineConfig& c, auto k, auto v) { c.retrieval.k_min = parse_int<int>(k, v); }},
  };
  return table;
}

void require(bool ok, std::string_view key, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kConfig, fmt::format("{}: {}", key, what));
}

}  // namespace

void validate(const EngineConfig& c) {
  require(c.preprocess.window >= 3 && c.preprocess.window % 2 == 1, "preprocess.window",
          fmt::format("must be odd and >= 3, got {}", c.preprocess.window));
  require(c.glcm.levels >= 2 && c.glcm.levels <= 256, "glcm.levels",
          fmt::format("must be in [2,256], got {}", c.glcm.levels));
  require(c.glcm.patch >= 2, "glcm.patch", fmt::format("must be >= 2, got {}", c.glcm.patch));
  require(c.fcm.c >= 1, "fcm.c", fmt::format("must be >= 1, got {}", c.fcm.c));
  require(c.fcm.m > 1.0, "fcm.m", fmt::format("must be > 1, got {}", c.fcm.m));
  require(c.fcm.eps > 0.0, "fcm.eps", fmt::format("must be > 0, got {}", c.fcm.eps));
  require(c.fcm.max_iter >= 1, "fcm.max_iter",
          fmt::format("must be >= 1, got {}", c.fcm.max_iter));
  require(c.retrieval.k_min >= 1, "retrieval.k_min",
          fmt::format("must be >= 1, got {}", c.retrieval.k_min));
}

EngineConfig parse_config(std::string_view text) {
  EngineConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    if (!seen.emplace(key).second) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: duplicate key '{}'", line_no, key));
    }
    it->second(config, key, value);
  }
  validate(config);
  return config;
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open config {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const EngineConfig& c) {
  std::string out;
  out += fmt::format("preprocess.enabled = {}\n", c.preprocess.enabled ? "true" : "false");
  out += fmt::format("preprocess.window = {}\n", c.preprocess.window);
  out += fmt::format("glcm.levels = {}\n", c.glcm.levels);
  out += fmt::format("glcm.patch = {}\n", c.glcm.patch);
  out += fmt::format("fcm.c = {}\n", c.fcm.c);
  out += fmt::format("fcm.m = {}\n", c.fcm.m);
  out += fmt::format("fcm.eps = {}\n", c.fcm.eps);
  out += fmt::format("fcm.max_iter = {}\n", c.fcm.max_iter);
  out += fmt::format("fcm.seed = {}\n", c.fcm.seed);
  out += fmt::format("retrieval.k_min = {}\n", c.retrieval.k_min);
  return out;
}

}  // namespace cbir
