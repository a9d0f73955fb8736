// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cbir/corpus.hpp"
#include "cbir/evaluation.hpp"
#include "cbir/fcm.hpp"
#include "cbir/http_api.hpp"
#include "cbir/imaging.hpp"
#include "cbir/index_file.hpp"
#include "cbir/texture_features.hpp"
#include "oracles.hpp"

namespace {

using namespace cbir;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

QuantizedRaster from_grid(const oracle::Grid& g, int levels) {
  std::vector<std::uint8_t> data;
  for (const auto& row : g) {
    for (int v : row) data.push_back(static_cast<std::uint8_t>(v));
  }
  return QuantizedRaster(static_cast<int>(g[0].size()), static_cast<int>(g.size()), levels,
                         std::move(data));
}

// Written to disk and indexed from the files, like the CLI would.
struct Corpus {
  std::filesystem::path root;
  CorpusLayout layout;
  IndexFile file;
  GroundTruth truth;
  double build_seconds = 0.0;

  Corpus() {
    std::random_device rd;
    root = std::filesystem::temp_directory_path() / fmt::format("cbir-acceptance-{}", rd());
    const auto t0 = Clock::now();
    layout = write_corpus(root.string(), CorpusSpec{});
    file = build_index(layout.image_dir, EngineConfig{}).file;
    truth = load_ground_truth(layout.ground_truth_path);
    build_seconds = seconds_since(t0);
  }
  ~Corpus() {
    std::error_code ec;
    std::filesystem::remove_all(root, ec);
  }

  RgbRaster image(const IndexEntry& e) const { return decode_image(read_file(e.source_path)); }
};

Outcome glcm_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  constexpr std::array<int, 3> kLevels = {4, 8, 16};
  std::size_t count_mismatches = 0;
  double worst_cell = 0.0;
  double worst_feature = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int levels = kLevels[static_cast<std::size_t>(trial % 3)];
    const oracle::Grid g = oracle::random_grid(rng, 8, 8, levels);
    const QuantizedRaster q = from_grid(g, levels);
    for (Offset off : kStandardOffsets) {
      const auto want = oracle::pair_counts(g, off.dx, off.dy);
      const GlcmCounts got = glcm_counts(q, off);
      for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
          const auto it = want.find({i, j});
          if (got.at(i, j) != (it == want.end() ? 0u : it->second)) ++count_mismatches;
        }
      }
      const auto p = oracle::symmetric_glcm(g, levels, off.dx, off.dy);
      const GlcmMatrix m = glcm(q, off);
      for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
          worst_cell = std::max(
              worst_cell,
              std::fabs(m.at(i, j) - p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
        }
      }
      const TextureFeature f = glcm_features(m);
      const oracle::Haralick h = oracle::haralick(p);
      for (auto [a, b] : {std::pair{f.entropy, h.entropy}, {f.contrast, h.contrast},
                          {f.dissimilarity, h.dissimilarity}, {f.homogeneity, h.homogeneity},
                          {f.energy, h.energy}, {f.correlation, h.correlation}, {f.mean, h.mean},
                          {f.variance, h.variance}, {f.std_dev, h.std_dev}}) {
        worst_feature = std::max(worst_feature, std::fabs(a - b));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {count_mismatches == 0 && worst_cell <= 1e-9 && worst_feature <= 1e-9 && elapsed < 10.0,
          fmt::format("count mismatches={} max |cell diff|={:.2e} max |feature diff|={:.2e} "
                      "time={:.2f}s",
                      count_mismatches, worst_cell, worst_feature, elapsed)};
}

Outcome glcm_worked_fixture() {
  const QuantizedRaster q = from_grid({{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 2, 2, 2}, {2, 2, 3, 3}}, 4);
  const GlcmCounts c = glcm_counts(q, {1, 0});
  const std::map<std::pair<int, int>, std::uint64_t> want = {
      {{0, 0}, 2}, {{0, 1}, 2}, {{1, 1}, 2}, {{0, 2}, 1}, {{2, 2}, 3}, {{2, 3}, 1}, {{3, 3}, 1}};
  std::map<std::pair<int, int>, std::uint64_t> got;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (c.at(i, j) != 0) got[{i, j}] = c.at(i, j);
    }
  }
  std::string listing;
  for (const auto& [ij, n] : got) listing += fmt::format("({},{}):{} ", ij.first, ij.second, n);
  return {got == want && c.total == 12, fmt::format("{}total={}", listing, c.total)};
}

Outcome fcm_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::normal_distribution<double> unit(0.0, 1.0);
  double worst_increase = 0.0;
  double worst_row = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + rng() % 80;
    const std::size_t dims = 1 + rng() % 6;
    std::vector<double> values(n * dims);
    for (auto& v : values) v = unit(rng);
    const PointSet pts(n, dims, std::move(values));
    FcmParams params;
    params.clusters = 2 + static_cast<int>(rng() % 4);
    params.fuzzifier = 1.5 + static_cast<double>(rng() % 4) * 0.5;
    params.eps = 1e-9;
    params.max_iter = 100;
    params.seed = rng();
    const FcmModel m = fcm_fit(pts, params);
    for (std::size_t i = 1; i < m.objective_history.size(); ++i) {
      worst_increase = std::max(worst_increase, m.objective_history[i] - m.objective_history[i - 1]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = m.membership_row(i);
      worst_row = std::max(worst_row, std::fabs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
    }
  }

  // Three blobs on an equilateral triangle with unit sides.
  const std::array<std::array<double, 2>, 3> centers = {
      std::array<double, 2>{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> values;
  std::vector<int> truth;
  for (int i = 0; i < 300; ++i) {
    const int label = i % 3;
    truth.push_back(label);
    values.push_back(centers[static_cast<std::size_t>(label)][0] + noise(rng));
    values.push_back(centers[static_cast<std::size_t>(label)][1] + noise(rng));
  }
  const PointSet blobs(300, 2, std::move(values));
  FcmParams params;
  params.clusters = 3;
  params.fuzzifier = 2.0;
  params.eps = 1e-6;
  params.max_iter = 300;
  const FcmModel m = fcm_fit(blobs, params);
  std::array<int, 3> perm = {0, 1, 2};
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 300; ++i) {
      if (perm[argmax_membership(m.membership_row(i))] == truth[i]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double accuracy = static_cast<double>(best) / 300.0;
  const double elapsed = seconds_since(t0);
  return {worst_increase <= 1e-12 && worst_row <= 1e-9 && accuracy >= 0.99 && elapsed < 10.0,
          fmt::format("max objective increase={:.2e} max |row sum - 1|={:.2e} blob accuracy={:.4f} "
                      "time={:.2f}s",
                      worst_increase, worst_row, accuracy, elapsed)};
}

Outcome filter_comparison() {
  // Flat-shaded regions with gentle ramps and a few hard edges.
  constexpr int kSize = 128;
  std::vector<std::uint8_t> data(kSize * kSize);
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      int v = x < 64 ? 70 + y / 4 : 180 - x / 8;
      if ((x - 90) * (x - 90) + (y - 40) * (y - 40) < 400) v = 230;
      if (y > 96) v = 40 + x / 2;
      data[static_cast<std::size_t>(y * kSize + x)] = static_cast<std::uint8_t>(v);
    }
  }
  const GrayRaster clean(kSize, kSize, std::move(data));
  const GrayRaster noisy = add_salt_pepper(clean, 0.05, 2024);
  const double med = psnr(clean, median_filter(noisy, 3));
  const double avg = psnr(clean, averaging_filter(noisy, 3));
  return {med - avg >= 3.0,
          fmt::format("PSNR median={:.2f} dB averaging={:.2f} dB gap={:.2f} dB", med, avg, med - avg)};
}

Outcome self_retrieval(const Corpus& corpus) {
  const SearchIndex& index = corpus.file.index;
  std::size_t failures = 0;
  for (const auto& e : index.entries) {
    const RetrievalResult r = query(index, corpus.image(e), 1, SearchMode::kExhaustive);
    if (r.entries.empty() || r.entries[0].image_id != e.image_id || r.entries[0].distance != 0.0) {
      ++failures;
    }
  }
  return {failures == 0,
          fmt::format("{}/{} images at rank 1 with distance 0", index.entries.size() - failures,
                      index.entries.size())};
}

Outcome pruning_fidelity(const Corpus& corpus) {
  const auto t0 = Clock::now();
  const SearchIndex& index = corpus.file.index;
  double jaccard_sum = 0.0;
  double ratio_sum = 0.0;
  for (const auto& e : index.entries) {
    const QueryFeatures q = describe_query(index, corpus.image(e));
    const RetrievalResult ex = rank_candidates(q, index, 10, SearchMode::kExhaustive);
    const RetrievalResult cl = rank_candidates(q, index, 10, SearchMode::kClustered);
    std::set<std::string> a, b;
    for (const auto& h : ex.entries) a.insert(h.image_id);
    for (const auto& h : cl.entries) b.insert(h.image_id);
    std::vector<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    jaccard_sum += static_cast<double>(inter.size()) /
                   static_cast<double>(a.size() + b.size() - inter.size());
    ratio_sum += static_cast<double>(cl.candidates_examined) / static_cast<double>(index.entries.size());
  }
  const double n = static_cast<double>(index.entries.size());
  const double jaccard = jaccard_sum / n;
  const double ratio = ratio_sum / n;
  const double elapsed = corpus.build_seconds + seconds_since(t0);
  return {jaccard >= 0.8 && ratio <= 0.4 && elapsed < 120.0,
          fmt::format("mean Jaccard@10={:.4f} mean candidate ratio={:.4f} (search space cut to "
                      "{:.1f}%) time incl. corpus build={:.2f}s",
                      jaccard, ratio, 100.0 * ratio, elapsed)};
}

std::vector<EvalQuery> corpus_queries(const Corpus& corpus) {
  std::vector<EvalQuery> qs;
  for (const auto& [id, relevant] : corpus.truth.relevance) {
    const IndexEntry* e = corpus.file.index.find(id);
    const std::string path = e != nullptr ? e->source_path : id;
    qs.push_back({id, [path] { return decode_image(read_file(path)); }, relevant});
  }
  return qs;
}

Outcome precision_recall_correctness(const Corpus& corpus) {
  auto make = [](std::vector<std::string> ids) {
    RetrievalResult r;
    for (std::size_t i = 0; i < ids.size(); ++i) r.entries.push_back({ids[i], 0.0, static_cast<int>(i + 1)});
    return r;
  };
  std::vector<std::string> ten;
  IdSet fourteen;
  for (int i = 0; i < 14; ++i) fourteen.insert(fmt::format("rel{}", i));
  for (int i = 0; i < 7; ++i) ten.push_back(fmt::format("rel{}", i));
  for (int i = 0; i < 3; ++i) ten.push_back(fmt::format("other{}", i));
  const PrPoint a = precision_recall(make(ten), fourteen, 10);
  const PrPoint b = precision_recall(make({"r0", "x0", "r1", "x1", "x2"}), {"r0", "r1", "r2", "r3"}, 20);
  const bool fixtures = a.precision == 0.7 && a.recall == 0.5 && b.precision == 0.4 && b.recall == 0.5;

  const int n = static_cast<int>(corpus.file.index.entries.size());
  const EvalReport r =
      evaluate_corpus(corpus.file.index, corpus_queries(corpus), {n}, SearchMode::kExhaustive);
  const auto full = std::count_if(r.queries.begin(), r.queries.end(),
                                  [](const QueryReport& q) { return q.points[0].recall == 1.0; });
  return {fixtures && full == static_cast<long>(r.queries.size()),
          fmt::format("fixture P={} R={} and P={} R={}; full-index recall 1 for {}/{} queries",
                      a.precision, a.recall, b.precision, b.recall, full, r.queries.size())};
}

Outcome retrieval_quality(const Corpus& corpus) {
  const EvalReport r =
      evaluate_corpus(corpus.file.index, corpus_queries(corpus), {10}, SearchMode::kClustered);
  return {r.macro[0].precision >= 0.9,
          fmt::format("macro P@10={:.4f} R@10={:.4f} over {} queries (clustered, query excluded)",
                      r.macro[0].precision, r.macro[0].recall, r.queries.size())};
}

Outcome determinism(const Corpus& corpus) {
  IndexFile again = build_index(corpus.layout.image_dir, EngineConfig{}).file;
  again.build_timestamp = corpus.file.build_timestamp;
  const bool builds = serialize_index(again) == serialize_index(corpus.file);
  std::size_t differing = 0;
  const SearchIndex& index = corpus.file.index;
  for (std::size_t i = 0; i < index.entries.size(); i += 9) {
    const RgbRaster img = corpus.image(index.entries[i]);
    for (SearchMode mode : {SearchMode::kClustered, SearchMode::kExhaustive}) {
      if (result_json(query(index, img, 10, mode)) != result_json(query(again.index, img, 10, mode))) {
        ++differing;
      }
    }
  }
  return {builds && differing == 0,
          fmt::format("rebuild byte-identical={} differing repeated queries={}", builds, differing)};
}

Outcome classifier_partition(const Corpus& corpus) {
  const auto& entries = corpus.file.index.entries;
  std::set<double> distinct;
  std::array<long, 3> sizes = {0, 0, 0};
  for (const auto& e : entries) {
    distinct.insert(e.activity_index);
    ++sizes[static_cast<std::size_t>(e.texture_class)];
  }
  const double third = static_cast<double>(entries.size()) / 3.0;
  const bool ok = distinct.size() == entries.size() &&
                  std::all_of(sizes.begin(), sizes.end(),
                              [&](long s) { return std::fabs(static_cast<double>(s) - third) <= 2.0; });
  return {ok, fmt::format("Low={} Average={} High={} (N/3={:.1f}, distinct indices {}/{})", sizes[0],
                          sizes[1], sizes[2], third, distinct.size(), entries.size())};
}

}  // namespace

int main() {
  std::unique_ptr<Corpus> corpus;
  auto shared = [&]() -> const Corpus& {
    if (!corpus) corpus = std::make_unique<Corpus>();
    return *corpus;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"GLCM oracle equivalence", glcm_oracle_equivalence},
      {"worked GLCM fixture", glcm_worked_fixture},
      {"FCM correctness", fcm_correctness},
      {"median vs averaging filter", filter_comparison},
      {"self-retrieval", [&] { return self_retrieval(shared()); }},
      {"cluster-pruning fidelity", [&] { return pruning_fidelity(shared()); }},
      {"precision/recall correctness", [&] { return precision_recall_correctness(shared()); }},
      {"end-to-end retrieval quality", [&] { return retrieval_quality(shared()); }},
      {"determinism", [&] { return determinism(shared()); }},
      {"classifier partition", [&] { return classifier_partition(shared()); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, fmt::format("exception: {}", e.what())};
    }
    if (!out.pass) ++failures;
    fmt::print("{} criterion {:>2}: {} | {} [{:.2f}s]\n", out.pass ? "PASS" : "FAIL", i + 1,
               criteria[i].first, out.detail, seconds_since(t0));
    std::fflush(stdout);
  }
  fmt::print("{} of {} acceptance criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
             criteria.size());
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
