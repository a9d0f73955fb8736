#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbir/color_features.hpp"
#include "cbir/config.hpp"
#include "cbir/fcm.hpp"
#include "cbir/imaging.hpp"
#include "cbir/texture_features.hpp"

namespace cbir {

inline constexpr std::size_t kFeatureDims = 12;

// Dimension order of every feature vector; persisted in the index file.
inline constexpr std::array<std::string_view, kFeatureDims> kFeatureNames = {
    "r_avg",       "g_avg",  "b_avg",       "entropy", "contrast", "dissimilarity",
    "homogeneity", "energy", "correlation", "mean",    "variance", "std_dev"};

using RawFeatures = std::array<double, kFeatureDims>;

RawFeatures assemble_raw(const ColorFeature& color, const TextureFeature& texture);

struct NormStats {
  RawFeatures mean{};
  RawFeatures std{};  // population standard deviation, 0 for constant dimensions

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct FeatureVector {
  RawFeatures values{};

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

NormStats fit_normalizer(std::span<const RawFeatures> corpus);

// z-score per dimension; dimensions with std 0 map to 0.
FeatureVector normalize(const RawFeatures& raw, const NormStats& stats);

double euclidean(std::span<const double> a, std::span<const double> b);
inline double euclidean(const FeatureVector& a, const FeatureVector& b) {
  return euclidean(a.values, b.values);
}

// Everything the pipeline derives from one image before normalization.
struct ImageFeatures {
  ColorFeature color;
  TextureFeature texture;
  double activity_index = 0.0;
  RawFeatures raw{};
};

/// Color averages come from the unfiltered raster; texture statistics and the
/// activity index come from the (optionally median-filtered) luma plane.
ImageFeatures extract_features(const RgbRaster& img, const EngineConfig& config);

// Persisted part of a per-color-group FCM fit (training memberships dropped).
struct FcmSummary {
  PointSet centroids;
  double fuzzifier = 2.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct IndexEntry {
  std::string image_id;
  std::string source_path;
  ColorFeature color;
  ColorGroup color_group = ColorGroup::kRed;
  TextureFeature texture;
  TextureClass texture_class = TextureClass::kLow;
  double activity_index = 0.0;
  int fcm_cluster = 0;
  std::vector<double> fcm_memberships;
  FeatureVector vector;
};

/// Immutable searchable snapshot: fitted models plus entries sorted by image_id.
struct SearchIndex {
  EngineConfig config;
  NormStats normalizer;
  TextureClassifierModel classifier;
  std::map<ColorGroup, FcmSummary> fcm_models;
  std::vector<IndexEntry> entries;

  const IndexEntry* find(std::string_view image_id) const;
};

enum class SearchMode { kExhaustive, kClustered };

std::string_view to_string(SearchMode mode);
std::optional<SearchMode> parse_search_mode(std::string_view name);

struct QueryFeatures {
  ColorGroup color_group = ColorGroup::kRed;
  TextureClass texture_class = TextureClass::kLow;
  FeatureVector vector;
  // Memberships against the FCM model of color_group; empty if that group has none.
  std::vector<double> fcm_memberships;
};

QueryFeatures describe_query(const SearchIndex& index, const RgbRaster& img);
QueryFeatures describe_entry(const IndexEntry& entry);

/// Candidate cascade: texture class, then color group, then the query's FCM
/// clusters taken in decreasing membership order until k_min entries are
/// covered. If the narrowest stage still holds fewer than k_min entries the
/// filters are dropped innermost-first, ending at the whole index.
std::vector<const IndexEntry*> select_neighborhood(const QueryFeatures& query,
                                                   std::span<const IndexEntry> entries,
                                                   int k_min);

struct RankedHit {
  std::string image_id;
  double distance = 0.0;
  int rank = 0;

  friend bool operator==(const RankedHit&, const RankedHit&) = default;
};

struct RetrievalResult {
  std::vector<RankedHit> entries;
  SearchMode mode = SearchMode::kExhaustive;
  std::size_t candidates_examined = 0;
};

// Distance ascending, image_id ascending on ties; top min(k, candidates).
RetrievalResult rank_candidates(const QueryFeatures& query, const SearchIndex& index, int k,
                                SearchMode mode);

RetrievalResult query(const SearchIndex& index, const RgbRaster& query_image, int k,
                      SearchMode mode);

}  // namespace cbir
