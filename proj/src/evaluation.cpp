#include "cbir/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "cbir/error.hpp"

namespace cbir {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \r");
  return s.substr(first, last - first + 1);
}

void check_cutoffs(const std::vector<int>& ks) {
  if (ks.empty()) throw Error(ErrorCode::kInvalidArgument, "no cutoffs given");
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, fmt::format("cutoff {} < 1", k));
  }
}

nlohmann::json point_json(const PrPoint& p) {
  return {{"k", p.k}, {"precision", p.precision}, {"recall", p.recall}};
}

}  // namespace

GroundTruth parse_ground_truth(std::string_view text) {
  GroundTruth truth;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kGroundTruth, fmt::format("line {}: missing tab separator", line_no));
    }
    const std::string_view query = line.substr(0, tab);
    if (query.empty()) {
      throw Error(ErrorCode::kGroundTruth, fmt::format("line {}: empty query id", line_no));
    }
    IdSet relevant;
    std::string_view rest = line.substr(tab + 1);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view id = rest.substr(0, comma);
      if (id.empty()) {
        throw Error(ErrorCode::kGroundTruth, fmt::format("line {}: empty relevant id", line_no));
      }
      relevant.emplace(id);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (!truth.relevance.emplace(std::string(query), std::move(relevant)).second) {
      throw Error(ErrorCode::kGroundTruth,
                  fmt::format("line {}: duplicate query id '{}'", line_no, query));
    }
  }
  return truth;
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open ground truth {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ground_truth(buf.str());
}

std::string format_ground_truth(const GroundTruth& truth) {
  std::string out = "# query_id<TAB>relevant ids (comma separated)\n";
  for (const auto& [query, relevant] : truth.relevance) {
    out += query;
    out += '\t';
    bool first = true;
    for (const auto& id : relevant) {
      if (!first) out += ',';
      out += id;
      first = false;
    }
    out += '\n';
  }
  return out;
}

PrPoint precision_recall(const RetrievalResult& result, const IdSet& relevant, int k) {
  if (relevant.empty()) throw Error(ErrorCode::kInvalidArgument, "relevant set is empty");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, fmt::format("cutoff {} < 1", k));
  if (result.entries.empty()) {
    throw Error(ErrorCode::kEmptyResult, "precision is undefined for an empty result");
  }
  const std::size_t cutoff = std::min(static_cast<std::size_t>(k), result.entries.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cutoff; ++i) {
    if (relevant.contains(result.entries[i].image_id)) ++hits;
  }
  return {k, static_cast<double>(hits) / static_cast<double>(cutoff),
          static_cast<double>(hits) / static_cast<double>(relevant.size()), hits};
}

std::vector<PrPoint> pr_curve(const RetrievalResult& result, const IdSet& relevant,
                              std::vector<int> cutoffs) {
  check_cutoffs(cutoffs);
  std::sort(cutoffs.begin(), cutoffs.end());
  std::vector<PrPoint> out;
  out.reserve(cutoffs.size());
  for (int k : cutoffs) out.push_back(precision_recall(result, relevant, k));
  return out;
}

EvalReport evaluate_corpus(const SearchIndex& index, std::span<const EvalQuery> queries,
                           std::vector<int> ks, SearchMode mode) {
  if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "no evaluation queries");
  check_cutoffs(ks);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (index.entries.empty()) throw Error(ErrorCode::kEmptyIndex, "index has no entries");

  EvalReport report;
  report.mode = mode;
  report.ks = ks;
  report.macro.resize(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) report.macro[i].k = ks[i];

  const int deepest = ks.back();
  double ratio_sum = 0.0;
  for (const auto& q : queries) {
    try {
      const QueryFeatures features = describe_query(index, q.load_image());
      // One extra slot covers the query's own entry, which is removed below.
      RetrievalResult result = rank_candidates(features, index, deepest + 1, mode);
      std::erase_if(result.entries, [&](const RankedHit& h) { return h.image_id == q.query_id; });
      if (result.entries.size() > static_cast<std::size_t>(deepest)) {
        result.entries.resize(static_cast<std::size_t>(deepest));
      }
      for (std::size_t i = 0; i < result.entries.size(); ++i) {
        result.entries[i].rank = static_cast<int>(i + 1);
      }

      QueryReport qr{q.query_id, pr_curve(result, q.relevant, ks), result.candidates_examined};
      for (std::size_t i = 0; i < ks.size(); ++i) {
        report.macro[i].precision += qr.points[i].precision;
        report.macro[i].recall += qr.points[i].recall;
        report.macro[i].relevant_retrieved += qr.points[i].relevant_retrieved;
      }
      ratio_sum += static_cast<double>(result.candidates_examined) /
                   static_cast<double>(index.entries.size());
      report.queries.push_back(std::move(qr));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("query '{}': {}", q.query_id, e.what()));
    }
  }
  const auto n = static_cast<double>(queries.size());
  for (auto& p : report.macro) {
    p.precision /= n;
    p.recall /= n;
  }
  report.mean_candidate_ratio = ratio_sum / n;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["mode"] = std::string(to_string(report.mode));
  doc["ks"] = report.ks;
  doc["mean_candidate_ratio"] = report.mean_candidate_ratio;
  doc["query_count"] = report.queries.size();
  doc["macro"] = nlohmann::json::array();
  for (const auto& p : report.macro) doc["macro"].push_back(point_json(p));
  doc["queries"] = nlohmann::json::array();
  for (const auto& q : report.queries) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : q.points) points.push_back(point_json(p));
    doc["queries"].push_back({{"query_id", q.query_id},
                              {"candidates_examined", q.candidates_examined},
                              {"points", std::move(points)}});
  }
  return doc.dump(2) + "\n";
}

std::string report_to_tsv(const EvalReport& report) {
  std::string out = "query_id\tk\tprecision\trecall\n";
  for (const auto& q : report.queries) {
    for (const auto& p : q.points) {
      out += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\n", q.query_id, p.k, p.precision, p.recall);
    }
  }
  return out;
}

}  // namespace cbir
