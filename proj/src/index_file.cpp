#include "cbir/index_file.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "cbir/error.hpp"

namespace cbir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- build ----------------------------------------------------------------

std::int64_t build_time_now() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != nullptr && *end == '\0') return v;
  }
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct Extracted {
  std::string image_id;
  std::string source_path;
  ImageFeatures features;
};

std::vector<fs::path> list_files(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kIo, fmt::format("{} is not a readable directory", root.string()));
  }
  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot list {}: {}", root.string(), ec.message()));
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot list {}: {}", root.string(), ec.message()));
    if (it->is_regular_file(ec)) files.push_back(it->path());
  }
  return files;
}

// ---- serialization --------------------------------------------------------

json config_to_json(const EngineConfig& c) {
  return {
      {"preprocess", {{"enabled", c.preprocess.enabled}, {"window", c.preprocess.window}}},
      {"glcm", {{"levels", c.glcm.levels}, {"patch", c.glcm.patch}}},
      {"fcm",
       {{"c", c.fcm.c},
        {"m", c.fcm.m},
        {"eps", c.fcm.eps},
        {"max_iter", c.fcm.max_iter},
        {"seed", c.fcm.seed}}},
      {"retrieval", {{"k_min", c.retrieval.k_min}}},
  };
}

json texture_to_json(const TextureFeature& t) {
  return {{"entropy", t.entropy},         {"contrast", t.contrast},
          {"dissimilarity", t.dissimilarity}, {"homogeneity", t.homogeneity},
          {"energy", t.energy},           {"correlation", t.correlation},
          {"mean", t.mean},               {"variance", t.variance},
          {"std_dev", t.std_dev}};
}

json entry_to_json(const IndexEntry& e) {
  return {
      {"image_id", e.image_id},
      {"source_path", e.source_path},
      {"color", {{"r_avg", e.color.r_avg}, {"g_avg", e.color.g_avg}, {"b_avg", e.color.b_avg}}},
      {"color_group", std::string(to_string(e.color_group))},
      {"texture", texture_to_json(e.texture)},
      {"texture_class", std::string(to_string(e.texture_class))},
      {"activity_index", e.activity_index},
      {"fcm_cluster", e.fcm_cluster},
      {"fcm_memberships", e.fcm_memberships},
      {"vector", e.vector.values},
  };
}

json fcm_to_json(const FcmSummary& s) {
  json centroids = json::array();
  for (std::size_t k = 0; k < s.centroids.rows(); ++k) {
    const auto row = s.centroids.row(k);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"centroids", std::move(centroids)},
          {"fuzzifier", s.fuzzifier},
          {"objective", s.objective},
          {"iterations", s.iterations},
          {"converged", s.converged}};
}

// ---- validation -----------------------------------------------------------

[[noreturn]] void corrupt(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kCorruptIndex, fmt::format("{}: {}", field, what));
}

const json& member(const json& obj, const std::string& field, const char* key) {
  if (!obj.is_object()) corrupt(field, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) corrupt(field + "." + key, "missing");
  return *it;
}

double real_at(const json& obj, const std::string& field, const char* key) {
  const json& v = member(obj, field, key);
  if (!v.is_number()) corrupt(field + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) corrupt(field + "." + key, "not finite");
  return d;
}

long long int_at(const json& obj, const std::string& field, const char* key) {
  const json& v = member(obj, field, key);
  if (!v.is_number_integer()) corrupt(field + "." + key, "expected an integer");
  return v.get<long long>();
}

std::string string_at(const json& obj, const std::string& field, const char* key) {
  const json& v = member(obj, field, key);
  if (!v.is_string()) corrupt(field + "." + key, "expected a string");
  return v.get<std::string>();
}

bool bool_at(const json& obj, const std::string& field, const char* key) {
  const json& v = member(obj, field, key);
  if (!v.is_boolean()) corrupt(field + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::vector<double> reals(const json& v, const std::string& field) {
  if (!v.is_array()) corrupt(field, "expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) corrupt(field, "expected numbers");
    const double d = x.get<double>();
    if (!std::isfinite(d)) corrupt(field, "not finite");
    out.push_back(d);
  }
  return out;
}

RawFeatures feature_array(const json& v, const std::string& field) {
  const auto values = reals(v, field);
  if (values.size() != kFeatureDims) {
    corrupt(field, fmt::format("expected {} values, got {}", kFeatureDims, values.size()));
  }
  RawFeatures out{};
  std::copy(values.begin(), values.end(), out.begin());
  return out;
}

void require_range(double v, double lo, double hi, const std::string& field) {
  if (!(v >= lo && v <= hi)) corrupt(field, fmt::format("{} not in [{}, {}]", v, lo, hi));
}

EngineConfig config_from_json(const json& j) {
  const std::string f = "config";
  const json& pre = member(j, f, "preprocess");
  const json& glcm = member(j, f, "glcm");
  const json& fcm = member(j, f, "fcm");
  const json& ret = member(j, f, "retrieval");
  EngineConfig c;
  c.preprocess.enabled = bool_at(pre, f + ".preprocess", "enabled");
  c.preprocess.window = static_cast<int>(int_at(pre, f + ".preprocess", "window"));
  c.glcm.levels = static_cast<int>(int_at(glcm, f + ".glcm", "levels"));
  c.glcm.patch = static_cast<int>(int_at(glcm, f + ".glcm", "patch"));
  c.fcm.c = static_cast<int>(int_at(fcm, f + ".fcm", "c"));
  c.fcm.m = real_at(fcm, f + ".fcm", "m");
  c.fcm.eps = real_at(fcm, f + ".fcm", "eps");
  c.fcm.max_iter = static_cast<int>(int_at(fcm, f + ".fcm", "max_iter"));
  const json& seed = member(fcm, f + ".fcm", "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    corrupt("config.fcm.seed", "expected a non-negative integer");
  }
  c.fcm.seed = seed.get<std::uint64_t>();
  c.retrieval.k_min = static_cast<int>(int_at(ret, f + ".retrieval", "k_min"));
  try {
    validate(c);
  } catch (const Error& e) {
    corrupt("config", e.what());
  }
  return c;
}

TextureFeature texture_from_json(const json& j, const std::string& f) {
  TextureFeature t;
  t.entropy = real_at(j, f, "entropy");
  t.contrast = real_at(j, f, "contrast");
  t.dissimilarity = real_at(j, f, "dissimilarity");
  t.homogeneity = real_at(j, f, "homogeneity");
  t.energy = real_at(j, f, "energy");
  t.correlation = real_at(j, f, "correlation");
  t.mean = real_at(j, f, "mean");
  t.variance = real_at(j, f, "variance");
  t.std_dev = real_at(j, f, "std_dev");
  if (t.entropy < 0.0) corrupt(f + ".entropy", "negative");
  if (t.contrast < 0.0) corrupt(f + ".contrast", "negative");
  if (t.dissimilarity < 0.0) corrupt(f + ".dissimilarity", "negative");
  if (!(t.homogeneity > 0.0 && t.homogeneity <= 1.0)) corrupt(f + ".homogeneity", "not in (0,1]");
  if (!(t.energy > 0.0 && t.energy <= 1.0)) corrupt(f + ".energy", "not in (0,1]");
  require_range(t.correlation, -1.0, 1.0, f + ".correlation");
  if (t.mean < 0.0) corrupt(f + ".mean", "negative");
  if (t.variance < 0.0) corrupt(f + ".variance", "negative");
  if (std::abs(t.std_dev - std::sqrt(t.variance)) > 1e-9 * std::max(1.0, t.std_dev)) {
    corrupt(f + ".std_dev", "is not sqrt(variance)");
  }
  return t;
}

FcmSummary fcm_from_json(const json& j, const std::string& f) {
  FcmSummary s;
  const json& centroids = member(j, f, "centroids");
  if (!centroids.is_array() || centroids.empty()) corrupt(f + ".centroids", "expected a non-empty array");
  std::vector<double> values;
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const auto row = feature_array(centroids[k], fmt::format("{}.centroids[{}]", f, k));
    values.insert(values.end(), row.begin(), row.end());
  }
  s.centroids = PointSet(centroids.size(), kFeatureDims, std::move(values));
  s.fuzzifier = real_at(j, f, "fuzzifier");
  if (!(s.fuzzifier > 1.0)) corrupt(f + ".fuzzifier", "must be > 1");
  s.objective = real_at(j, f, "objective");
  if (s.objective < 0.0) corrupt(f + ".objective", "negative");
  s.iterations = static_cast<int>(int_at(j, f, "iterations"));
  if (s.iterations < 0) corrupt(f + ".iterations", "negative");
  s.converged = bool_at(j, f, "converged");
  return s;
}

IndexEntry entry_from_json(const json& j, std::size_t pos, const SearchIndex& idx) {
  const std::string f = fmt::format("entries[{}]", pos);
  IndexEntry e;
  e.image_id = string_at(j, f, "image_id");
  if (e.image_id.empty()) corrupt(f + ".image_id", "empty");
  e.source_path = string_at(j, f, "source_path");

  const json& color = member(j, f, "color");
  e.color = {real_at(color, f + ".color", "r_avg"), real_at(color, f + ".color", "g_avg"),
             real_at(color, f + ".color", "b_avg")};
  require_range(e.color.r_avg, 0.0, 255.0, f + ".color.r_avg");
  require_range(e.color.g_avg, 0.0, 255.0, f + ".color.g_avg");
  require_range(e.color.b_avg, 0.0, 255.0, f + ".color.b_avg");
  const auto group = parse_color_group(string_at(j, f, "color_group"));
  if (!group) corrupt(f + ".color_group", "unknown group");
  if (*group != dominant_channel(e.color)) corrupt(f + ".color_group", "disagrees with color");
  e.color_group = *group;

  e.texture = texture_from_json(member(j, f, "texture"), f + ".texture");
  e.activity_index = real_at(j, f, "activity_index");
  require_range(e.activity_index, 0.0, 1.0, f + ".activity_index");
  const auto cls = parse_texture_class(string_at(j, f, "texture_class"));
  if (!cls) corrupt(f + ".texture_class", "unknown class");
  if (*cls != classify_texture(e.activity_index, idx.classifier)) {
    corrupt(f + ".texture_class", "disagrees with activity_index and classifier");
  }
  e.texture_class = *cls;

  e.fcm_memberships = reals(member(j, f, "fcm_memberships"), f + ".fcm_memberships");
  const auto model = idx.fcm_models.find(e.color_group);
  if (model == idx.fcm_models.end()) {
    corrupt(f + ".color_group", "no fcm model for this group");
  }
  if (e.fcm_memberships.size() != model->second.centroids.rows()) {
    corrupt(f + ".fcm_memberships",
            fmt::format("has {} values for {} clusters", e.fcm_memberships.size(),
                        model->second.centroids.rows()));
  }
  double total = 0.0;
  for (double u : e.fcm_memberships) {
    require_range(u, 0.0, 1.0, f + ".fcm_memberships");
    total += u;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    corrupt(f + ".fcm_memberships", fmt::format("row sums to {}", total));
  }
  const long long cluster = int_at(j, f, "fcm_cluster");
  if (cluster < 0 || static_cast<std::size_t>(cluster) >= e.fcm_memberships.size()) {
    corrupt(f + ".fcm_cluster", "out of range");
  }
  e.fcm_cluster = static_cast<int>(cluster);
  e.vector.values = feature_array(member(j, f, "vector"), f + ".vector");
  return e;
}

IndexFile from_json(const json& doc) {
  if (!doc.is_object()) corrupt("document", "expected an object");
  const json& version = member(doc, "document", "format_version");
  if (!version.is_number_integer()) corrupt("format_version", "expected an integer");
  if (version.get<long long>() != kIndexFormatVersion) {
    throw Error(ErrorCode::kIncompatibleVersion,
                fmt::format("index format_version {} is not supported (expected {})",
                            version.get<long long>(), kIndexFormatVersion));
  }

  IndexFile file;
  file.build_timestamp = int_at(doc, "document", "build_timestamp");
  SearchIndex& idx = file.index;
  idx.config = config_from_json(member(doc, "document", "config"));

  const json& order = member(doc, "document", "feature_order");
  if (!order.is_array() || order.size() != kFeatureDims) corrupt("feature_order", "wrong length");
  for (std::size_t d = 0; d < kFeatureDims; ++d) {
    if (!order[d].is_string() || order[d].get<std::string>() != kFeatureNames[d]) {
      corrupt(fmt::format("feature_order[{}]", d), "unexpected feature name");
    }
  }

  const json& norm = member(doc, "document", "normalizer");
  idx.normalizer.mean = feature_array(member(norm, "normalizer", "mean"), "normalizer.mean");
  idx.normalizer.std = feature_array(member(norm, "normalizer", "std"), "normalizer.std");
  for (double s : idx.normalizer.std) {
    if (s < 0.0) corrupt("normalizer.std", "negative");
  }

  const json& cls = member(doc, "document", "classifier");
  idx.classifier.t_low = real_at(cls, "classifier", "t_low");
  idx.classifier.t_high = real_at(cls, "classifier", "t_high");
  if (!(0.0 <= idx.classifier.t_low && idx.classifier.t_low <= idx.classifier.t_high)) {
    corrupt("classifier", "thresholds must satisfy 0 <= t_low <= t_high");
  }
  const json& lambda = member(cls, "classifier", "lambda_hat");
  if (lambda.is_null()) {
    idx.classifier.lambda_hat = std::numeric_limits<double>::infinity();
  } else {
    idx.classifier.lambda_hat = real_at(cls, "classifier", "lambda_hat");
    if (!(idx.classifier.lambda_hat > 0.0)) corrupt("classifier.lambda_hat", "must be > 0");
  }

  const json& models = member(doc, "document", "fcm_models");
  if (!models.is_object()) corrupt("fcm_models", "expected an object");
  for (const auto& [name, value] : models.items()) {
    const auto group = parse_color_group(name);
    if (!group) corrupt("fcm_models." + name, "unknown color group");
    idx.fcm_models.emplace(*group, fcm_from_json(value, "fcm_models." + name));
  }

  const json& entries = member(doc, "document", "entries");
  if (!entries.is_array() || entries.empty()) corrupt("entries", "expected a non-empty array");
  idx.entries.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    idx.entries.push_back(entry_from_json(entries[i], i, idx));
    if (i > 0 && !(idx.entries[i - 1].image_id < idx.entries[i].image_id)) {
      corrupt(fmt::format("entries[{}].image_id", i), "not unique and ascending");
    }
  }
  return file;
}

}  // namespace

BuildOutcome build_index(const std::string& image_dir, const EngineConfig& config) {
  validate(config);
  const fs::path root(image_dir);
  std::vector<fs::path> files = list_files(root);

  BuildOutcome out;
  std::vector<Extracted> extracted;
  for (const auto& path : files) {
    const std::string id = path.lexically_relative(root).generic_string();
    try {
      const RgbRaster img = decode_image(read_file(path.string()));
      extracted.push_back({id, path.lexically_normal().generic_string(), extract_features(img, config)});
    } catch (const Error& e) {
      out.skipped.push_back({id, e.code(), e.what()});
    }
  }
  std::sort(extracted.begin(), extracted.end(),
            [](const Extracted& a, const Extracted& b) { return a.image_id < b.image_id; });
  std::sort(out.skipped.begin(), out.skipped.end(),
            [](const SkippedFile& a, const SkippedFile& b) { return a.path < b.path; });
  if (extracted.size() < 3) {
    std::string reason;
    if (!out.skipped.empty()) {
      const SkippedFile& s = out.skipped.front();
      reason = fmt::format(" ({} skipped; first: {}: {}: {})", out.skipped.size(), s.path,
                           code_name(s.code), s.message);
    }
    throw Error(ErrorCode::kInsufficientCorpus,
                fmt::format("{} holds {} usable image(s); at least 3 are required{}", image_dir,
                            extracted.size(), reason));
  }

  SearchIndex& idx = out.file.index;
  idx.config = config;

  std::vector<double> activity;
  std::vector<RawFeatures> raw;
  for (const auto& x : extracted) {
    activity.push_back(x.features.activity_index);
    raw.push_back(x.features.raw);
  }
  idx.classifier = fit_classifier(activity);
  idx.normalizer = fit_normalizer(raw);

  idx.entries.reserve(extracted.size());
  for (auto& x : extracted) {
    IndexEntry e;
    e.image_id = std::move(x.image_id);
    e.source_path = std::move(x.source_path);
    e.color = x.features.color;
    e.color_group = dominant_channel(e.color);
    e.texture = x.features.texture;
    e.activity_index = x.features.activity_index;
    e.texture_class = classify_texture(e.activity_index, idx.classifier);
    e.vector = normalize(x.features.raw, idx.normalizer);
    idx.entries.push_back(std::move(e));
  }

  // Pre-clustering runs separately inside each color group.
  for (const ColorGroup group : kAllColorGroups) {
    std::vector<IndexEntry*> members;
    for (auto& e : idx.entries) {
      if (e.color_group == group) members.push_back(&e);
    }
    if (members.empty()) continue;
    std::vector<double> values;
    values.reserve(members.size() * kFeatureDims);
    for (const auto* e : members) values.insert(values.end(), e->vector.values.begin(), e->vector.values.end());
    const PointSet points(members.size(), kFeatureDims, std::move(values));

    FcmParams params;
    params.clusters = std::min(config.fcm.c, static_cast<int>(members.size()));
    params.fuzzifier = config.fcm.m;
    params.eps = config.fcm.eps;
    params.max_iter = config.fcm.max_iter;
    params.seed = config.fcm.seed;
    FcmModel model = fcm_fit(points, params);

    FcmSummary summary{std::move(model.centroids), model.fuzzifier, model.objective,
                       model.iterations, model.converged};
    for (auto* e : members) {
      e->fcm_memberships = fcm_assign(summary.centroids, summary.fuzzifier, e->vector.values);
      e->fcm_cluster = static_cast<int>(argmax_membership(e->fcm_memberships));
    }
    idx.fcm_models.emplace(group, std::move(summary));
  }

  out.file.build_timestamp = build_time_now();
  return out;
}

std::string config_json(const EngineConfig& config) { return config_to_json(config).dump(); }

std::string serialize_index(const IndexFile& file) {
  const SearchIndex& idx = file.index;
  json doc;
  doc["format_version"] = file.format_version;
  doc["build_timestamp"] = file.build_timestamp;
  doc["config"] = config_to_json(idx.config);
  doc["feature_order"] = kFeatureNames;
  doc["normalizer"] = {{"mean", idx.normalizer.mean}, {"std", idx.normalizer.std}};
  doc["classifier"] = {{"t_low", idx.classifier.t_low}, {"t_high", idx.classifier.t_high}};
  doc["classifier"]["lambda_hat"] =
      std::isfinite(idx.classifier.lambda_hat) ? json(idx.classifier.lambda_hat) : json(nullptr);
  doc["fcm_models"] = json::object();
  for (const auto& [group, summary] : idx.fcm_models) {
    doc["fcm_models"][std::string(to_string(group))] = fcm_to_json(summary);
  }
  doc["entries"] = json::array();
  for (const auto& e : idx.entries) doc["entries"].push_back(entry_to_json(e));
  return doc.dump(2) + "\n";
}

IndexFile deserialize_index(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptIndex, fmt::format("document: {}", e.what()));
  }
  try {
    return from_json(doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptIndex, fmt::format("document: {}", e.what()));
  }
}

void save_index(const IndexFile& file, const std::string& path) {
  const std::string text = serialize_index(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot open {} for writing", path));
  out << text;
  if (!out) throw Error(ErrorCode::kIo, fmt::format("write failed for {}", path));
}

IndexFile load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open index {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_index(buf.str());
}

}  // namespace cbir
