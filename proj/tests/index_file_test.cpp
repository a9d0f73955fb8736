#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "cbir/corpus.hpp"
#include "cbir/index_file.hpp"
#include "test_support.hpp"

namespace cbir {
namespace {

using nlohmann::json;
using testing::code_of;
using testing::message_of;
using testing::SharedCorpus;
using testing::TempDir;

void write_png(const std::filesystem::path& path, const RgbRaster& img) {
  std::filesystem::create_directories(path.parent_path());
  write_file(path.string(), encode_png(img));
}

std::string mutate(const std::string& text, const std::function<void(json&)>& fn) {
  json doc = json::parse(text);
  fn(doc);
  return doc.dump(2);
}

TEST(BuildIndex, ThreeSolidColors) {
  TempDir dir;
  write_png(dir.path() / "red.png", RgbRaster::filled(32, 32, {220, 10, 10}));
  write_png(dir.path() / "sub" / "green.png", RgbRaster::filled(32, 32, {10, 220, 10}));
  write_png(dir.path() / "blue.png", RgbRaster::filled(32, 32, {10, 10, 220}));
  const BuildOutcome out = build_index(dir.str(), EngineConfig{});
  EXPECT_TRUE(out.skipped.empty());
  const auto& entries = out.file.index.entries;
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].image_id, "blue.png");
  EXPECT_EQ(entries[0].color_group, ColorGroup::kBlue);
  EXPECT_EQ(entries[1].image_id, "red.png");
  EXPECT_EQ(entries[1].color_group, ColorGroup::kRed);
  EXPECT_EQ(entries[2].image_id, "sub/green.png");
  EXPECT_EQ(entries[2].color_group, ColorGroup::kGreen);
  EXPECT_EQ(out.file.index.fcm_models.size(), 3u);
}

TEST(BuildIndex, CorruptFileIsSkipped) {
  TempDir dir;
  for (int i = 0; i < 9; ++i) {
    write_png(dir.path() / ("img" + std::to_string(i) + ".png"),
              synthesize_image(kAllColorGroups[i % 3], kAllTextureClasses[i / 3], 48,
                               static_cast<std::uint64_t>(i)));
  }
  Bytes png = encode_png(RgbRaster::filled(48, 48, {1, 2, 3}));
  png.resize(png.size() / 2);
  write_file((dir.path() / "broken.png").string(), png);
  const BuildOutcome out = build_index(dir.str(), EngineConfig{});
  EXPECT_EQ(out.file.index.entries.size(), 9u);
  ASSERT_EQ(out.skipped.size(), 1u);
  EXPECT_EQ(out.skipped[0].code, ErrorCode::kDecode);
  EXPECT_NE(out.skipped[0].path.find("broken.png"), std::string::npos);
}

TEST(BuildIndex, TooFewImages) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { build_index(dir.str(), EngineConfig{}); }), ErrorCode::kInsufficientCorpus);
  write_png(dir.path() / "a.png", RgbRaster::filled(32, 32, {1, 2, 3}));
  write_png(dir.path() / "b.png", RgbRaster::filled(32, 32, {3, 2, 1}));
  EXPECT_EQ(code_of([&] { build_index(dir.str(), EngineConfig{}); }), ErrorCode::kInsufficientCorpus);
  write_png(dir.path() / "tiny.png", RgbRaster::filled(8, 8, {9, 9, 9}));
  EXPECT_NE(message_of([&] { build_index(dir.str(), EngineConfig{}); }).find("tiny.png: image-too-small"),
            std::string::npos);
  EXPECT_EQ(code_of([&] { build_index((dir.path() / "missing").string(), EngineConfig{}); }),
            ErrorCode::kIo);
}

TEST(BuildIndex, DeterministicAndHonoursSourceDateEpoch) {
  TempDir dir;
  const CorpusLayout layout = write_corpus(dir.str(), {.per_cell = 4, .seed = 3, .size = 64});
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const IndexFile a = build_index(layout.image_dir, EngineConfig{}).file;
  ::unsetenv("SOURCE_DATE_EPOCH");
  IndexFile b = build_index(layout.image_dir, EngineConfig{}).file;
  EXPECT_EQ(a.build_timestamp, 1700000000);
  EXPECT_NE(b.build_timestamp, a.build_timestamp);
  b.build_timestamp = a.build_timestamp;
  EXPECT_EQ(serialize_index(a), serialize_index(b));
}

TEST(IndexFile, SaveLoadRoundTrip) {
  const IndexFile& original = SharedCorpus::get().file;
  TempDir dir;
  const std::string path = (dir.path() / "index.json").string();
  save_index(original, path);
  const IndexFile loaded = load_index(path);
  EXPECT_EQ(serialize_index(loaded), serialize_index(original));
  EXPECT_EQ(loaded.index.config, original.index.config);
  EXPECT_EQ(loaded.index.normalizer, original.index.normalizer);
  EXPECT_EQ(loaded.index.classifier, original.index.classifier);
  ASSERT_EQ(loaded.index.entries.size(), original.index.entries.size());
  for (std::size_t i = 0; i < loaded.index.entries.size(); ++i) {
    const auto& x = loaded.index.entries[i];
    const auto& y = original.index.entries[i];
    EXPECT_EQ(x.image_id, y.image_id);
    EXPECT_EQ(x.vector, y.vector);
    EXPECT_EQ(x.fcm_memberships, y.fcm_memberships);
    EXPECT_EQ(x.texture, y.texture);
    EXPECT_EQ(x.activity_index, y.activity_index);
  }
}

TEST(IndexFile, CanonicalLayout) {
  const std::string text = serialize_index(SharedCorpus::get().file);
  EXPECT_EQ(text.back(), '\n');
  const json doc = json::parse(text);
  EXPECT_EQ(doc["format_version"], 1);
  EXPECT_EQ(doc["feature_order"].size(), kFeatureDims);
  EXPECT_EQ(doc["feature_order"][0], "r_avg");
  EXPECT_EQ(doc.dump(2) + "\n", text);
}

TEST(IndexFile, WrongVersion) {
  const std::string text = serialize_index(SharedCorpus::get().file);
  const std::string v99 = mutate(text, [](json& d) { d["format_version"] = 99; });
  EXPECT_EQ(code_of([&] { deserialize_index(v99); }), ErrorCode::kIncompatibleVersion);
}

TEST(IndexFile, MembershipRowMustSumToOne) {
  const std::string text = serialize_index(SharedCorpus::get().file);
  const std::string bad = mutate(text, [](json& d) {
    for (auto& u : d["entries"][7]["fcm_memberships"]) u = u.get<double>() * 0.8;
  });
  EXPECT_EQ(code_of([&] { deserialize_index(bad); }), ErrorCode::kCorruptIndex);
  EXPECT_NE(message_of([&] { deserialize_index(bad); }).find("fcm_memberships"), std::string::npos);
}

TEST(IndexFile, OtherCorruptions) {
  const std::string text = serialize_index(SharedCorpus::get().file);
  const std::vector<std::pair<std::string, std::function<void(json&)>>> cases = {
      {"entries", [](json& d) { d["entries"] = json::array(); }},
      {"color_group", [](json& d) { d["entries"][0]["color_group"] = "Purple"; }},
      {"vector", [](json& d) { d["entries"][0]["vector"].erase(0); }},
      {"entries", [](json& d) { std::swap(d["entries"][0], d["entries"][1]); }},
      {"normalizer", [](json& d) { d["normalizer"].erase("std"); }},
      {"config", [](json& d) { d["config"]["fcm"]["m"] = 0.5; }},
  };
  for (const auto& [field, fn] : cases) {
    const std::string bad = mutate(text, fn);
    EXPECT_EQ(code_of([&] { deserialize_index(bad); }), ErrorCode::kCorruptIndex) << field;
  }
  EXPECT_EQ(code_of([] { deserialize_index("{not json"); }), ErrorCode::kCorruptIndex);
  EXPECT_EQ(code_of([] { load_index("/nonexistent/index.json"); }), ErrorCode::kIo);
}

}  // namespace
}  // namespace cbir
