#include "cbir/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "cbir/error.hpp"

namespace cbir {

RawFeatures assemble_raw(const ColorFeature& c, const TextureFeature& t) {
  return {c.r_avg,         c.g_avg,    c.b_avg,         t.entropy, t.contrast,
          t.dissimilarity, t.homogeneity, t.energy,     t.correlation, t.mean,
          t.variance,      t.std_dev};
}

NormStats fit_normalizer(std::span<const RawFeatures> corpus) {
  if (corpus.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("normalizer needs at least 2 vectors, got {}", corpus.size()));
  }
  const auto n = static_cast<double>(corpus.size());
  NormStats stats;
  for (const auto& v : corpus) {
    for (std::size_t d = 0; d < kFeatureDims; ++d) stats.mean[d] += v[d];
  }
  for (double& m : stats.mean) m /= n;
  for (const auto& v : corpus) {
    for (std::size_t d = 0; d < kFeatureDims; ++d) {
      const double diff = v[d] - stats.mean[d];
      stats.std[d] += diff * diff;
    }
  }
  for (double& s : stats.std) s = std::sqrt(s / n);
  return stats;
}

FeatureVector normalize(const RawFeatures& raw, const NormStats& stats) {
  FeatureVector out;
  for (std::size_t d = 0; d < kFeatureDims; ++d) {
    if (!std::isfinite(raw[d])) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("non-finite feature {} ({})", kFeatureNames[d], raw[d]));
    }
    out.values[d] = stats.std[d] > 0.0 ? (raw[d] - stats.mean[d]) / stats.std[d] : 0.0;
  }
  return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("euclidean: dimension mismatch {} vs {}", a.size(), b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

ImageFeatures extract_features(const RgbRaster& img, const EngineConfig& config) {
  ImageFeatures out;
  out.color = channel_averages(img);
  GrayRaster gray = to_gray(img);
  if (config.preprocess.enabled) gray = median_filter(gray, config.preprocess.window);
  out.texture = image_texture(gray, config.glcm.levels);
  out.activity_index = texture_activity(gray, config.glcm.patch).activity_index;
  out.raw = assemble_raw(out.color, out.texture);
  return out;
}

const IndexEntry* SearchIndex::find(std::string_view image_id) const {
  const auto it = std::lower_bound(
      entries.begin(), entries.end(), image_id,
      [](const IndexEntry& e, std::string_view id) { return e.image_id < id; });
  if (it == entries.end() || it->image_id != image_id) return nullptr;
  return &*it;
}

std::string_view to_string(SearchMode mode) {
  return mode == SearchMode::kExhaustive ? "exhaustive" : "clustered";
}

std::optional<SearchMode> parse_search_mode(std::string_view name) {
  if (name == "exhaustive") return SearchMode::kExhaustive;
  if (name == "clustered") return SearchMode::kClustered;
  return std::nullopt;
}

QueryFeatures describe_query(const SearchIndex& index, const RgbRaster& img) {
  const ImageFeatures f = extract_features(img, index.config);
  QueryFeatures q;
  q.color_group = dominant_channel(f.color);
  q.texture_class = classify_texture(f.activity_index, index.classifier);
  q.vector = normalize(f.raw, index.normalizer);
  if (const auto it = index.fcm_models.find(q.color_group); it != index.fcm_models.end()) {
    q.fcm_memberships = fcm_assign(it->second.centroids, it->second.fuzzifier, q.vector.values);
  }
  return q;
}

QueryFeatures describe_entry(const IndexEntry& entry) {
  return {entry.color_group, entry.texture_class, entry.vector, entry.fcm_memberships};
}

std::vector<const IndexEntry*> select_neighborhood(const QueryFeatures& query,
                                                   std::span<const IndexEntry> entries,
                                                   int k_min) {
  if (entries.empty()) throw Error(ErrorCode::kEmptyIndex, "index has no entries");
  if (k_min < 1) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("k_min {} < 1", k_min));
  }
  const auto need = static_cast<std::size_t>(k_min);

  std::vector<const IndexEntry*> by_class;
  for (const auto& e : entries) {
    if (e.texture_class == query.texture_class) by_class.push_back(&e);
  }
  std::vector<const IndexEntry*> by_group;
  for (const auto* e : by_class) {
    if (e->color_group == query.color_group) by_group.push_back(e);
  }

  if (by_group.size() >= need && !query.fcm_memberships.empty()) {
    std::vector<std::size_t> order(query.fcm_memberships.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return query.fcm_memberships[a] > query.fcm_memberships[b];
    });
    const std::size_t clusters = order.size();
    const auto in_range = [&](const IndexEntry* e) {
      return e->fcm_cluster >= 0 && static_cast<std::size_t>(e->fcm_cluster) < clusters;
    };
    std::vector<std::size_t> cluster_size(clusters, 0);
    for (const auto* e : by_group) {
      if (in_range(e)) ++cluster_size[static_cast<std::size_t>(e->fcm_cluster)];
    }
    std::vector<bool> chosen(clusters, false);
    std::size_t covered = 0;
    for (std::size_t cluster : order) {
      chosen[cluster] = true;
      covered += cluster_size[cluster];
      if (covered >= need) break;
    }
    if (covered >= need) {
      std::vector<const IndexEntry*> by_cluster;
      for (const auto* e : by_group) {
        if (in_range(e) && chosen[static_cast<std::size_t>(e->fcm_cluster)]) {
          by_cluster.push_back(e);
        }
      }
      return by_cluster;
    }
  }
  if (by_group.size() >= need) return by_group;
  if (by_class.size() >= need) return by_class;

  std::vector<const IndexEntry*> all;
  all.reserve(entries.size());
  for (const auto& e : entries) all.push_back(&e);
  return all;
}

RetrievalResult rank_candidates(const QueryFeatures& query, const SearchIndex& index, int k,
                                SearchMode mode) {
  if (index.entries.empty()) throw Error(ErrorCode::kEmptyIndex, "index has no entries");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, fmt::format("k {} < 1", k));

  std::vector<const IndexEntry*> candidates;
  if (mode == SearchMode::kClustered) {
    candidates = select_neighborhood(query, index.entries, index.config.retrieval.k_min);
  } else {
    candidates.reserve(index.entries.size());
    for (const auto& e : index.entries) candidates.push_back(&e);
  }

  std::vector<std::pair<double, const IndexEntry*>> scored;
  scored.reserve(candidates.size());
  for (const auto* e : candidates) scored.emplace_back(euclidean(query.vector, e->vector), e);

  const std::size_t take = std::min(static_cast<std::size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first < b.first;
                      return a.second->image_id < b.second->image_id;
                    });

  RetrievalResult result;
  result.mode = mode;
  result.candidates_examined = candidates.size();
  result.entries.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    result.entries.push_back(
        {scored[i].second->image_id, scored[i].first, static_cast<int>(i + 1)});
  }
  return result;
}

RetrievalResult query(const SearchIndex& index, const RgbRaster& query_image, int k,
                      SearchMode mode) {
  if (index.entries.empty()) throw Error(ErrorCode::kEmptyIndex, "index has no entries");
  return rank_candidates(describe_query(index, query_image), index, k, mode);
}

}  // namespace cbir
