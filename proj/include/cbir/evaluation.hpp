#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbir/retrieval.hpp"

namespace cbir {

using IdSet = std::set<std::string, std::less<>>;

struct GroundTruth {
  std::map<std::string, IdSet, std::less<>> relevance;
};

/// One record per line: `query_id<TAB>rel_id1,rel_id2,...`. Lines starting with
/// `#` and blank lines are skipped. Duplicate queries, empty ids and empty
/// relevant sets are kGroundTruth errors.
GroundTruth parse_ground_truth(std::string_view text);
GroundTruth load_ground_truth(const std::string& path);
std::string format_ground_truth(const GroundTruth& truth);

struct PrPoint {
  int k = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t relevant_retrieved = 0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

// Evaluated over the first min(k, result size) entries.
PrPoint precision_recall(const RetrievalResult& result, const IdSet& relevant, int k);

// One point per cutoff, sorted by k ascending.
std::vector<PrPoint> pr_curve(const RetrievalResult& result, const IdSet& relevant,
                              std::vector<int> cutoffs);

struct EvalQuery {
  std::string query_id;
  // Produces the query raster; called once per query.
  std::function<RgbRaster()> load_image;
  IdSet relevant;
};

struct QueryReport {
  std::string query_id;
  std::vector<PrPoint> points;
  std::size_t candidates_examined = 0;
};

struct EvalReport {
  SearchMode mode = SearchMode::kClustered;
  std::vector<int> ks;
  std::vector<QueryReport> queries;
  std::vector<PrPoint> macro;  // unweighted mean over queries, per k
  double mean_candidate_ratio = 0.0;  // candidates_examined / index size
};

/// Runs every query, dropping the query's own id from its result list
/// (leave-one-out), and macro-averages precision and recall per cutoff.
/// Query failures are rethrown with the failing query id in the message.
EvalReport evaluate_corpus(const SearchIndex& index, std::span<const EvalQuery> queries,
                           std::vector<int> ks, SearchMode mode);

// Structured report document (format_version 1).
std::string report_to_json(const EvalReport& report);

// Tab-separated `query_id k precision recall` rows with a header line.
std::string report_to_tsv(const EvalReport& report);

}  // namespace cbir
