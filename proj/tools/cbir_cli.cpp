// Command-line front end: index, query, eval, gen-corpus, serve.
//
// Every failure prints a single `error: <code>: <message>` line on stderr and
// exits nonzero (1 for engine errors, 2 for usage errors).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "cbir/corpus.hpp"
#include "cbir/error.hpp"
#include "cbir/evaluation.hpp"
#include "cbir/http_api.hpp"
#include "cbir/index_file.hpp"

namespace {

using namespace cbir;

SearchMode mode_arg(const std::string& s) {
  const auto mode = parse_search_mode(s);
  if (!mode) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("--mode must be exhaustive or clustered, got '{}'", s));
  }
  return *mode;
}

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size() || k < 1) throw std::invalid_argument(item);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("--ks: bad cutoff '{}'", item));
    }
  }
  if (ks.empty()) throw Error(ErrorCode::kInvalidArgument, "--ks is empty");
  return ks;
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int run_index(const std::string& input, const std::string& config_path, const std::string& output) {
  const EngineConfig config = config_path.empty() ? EngineConfig{} : load_config(config_path);
  const BuildOutcome outcome = build_index(input, config);
  for (const auto& s : outcome.skipped) {
    std::cerr << fmt::format("skip: {}: {}: {}\n", s.path, code_name(s.code), s.message);
  }
  save_index(outcome.file, output);
  std::cout << fmt::format("indexed {} image(s), skipped {}, wrote {}\n",
                           outcome.file.index.entries.size(), outcome.skipped.size(), output);
  return 0;
}

int run_query(const std::string& index_path, const std::string& image, int k,
              const std::string& mode, bool as_json) {
  const IndexFile file = load_index(index_path);
  const RgbRaster img = decode_image(read_file(image));
  const RetrievalResult result = query(file.index, img, k, mode_arg(mode));
  if (as_json) {
    std::cout << result_json(result) << "\n";
    return 0;
  }
  std::cout << fmt::format("# mode={} candidates_examined={}\n", to_string(result.mode),
                           result.candidates_examined);
  std::cout << "rank\tid\tdistance\n";
  for (const auto& hit : result.entries) {
    std::cout << fmt::format("{}\t{}\t{:.6f}\n", hit.rank, hit.image_id, hit.distance);
  }
  return 0;
}

int run_eval(const std::string& index_path, const std::string& truth_path, const std::string& ks,
             const std::string& mode, const std::string& out, const std::string& table,
             const std::string& images) {
  const IndexFile file = load_index(index_path);
  const GroundTruth truth = load_ground_truth(truth_path);

  std::vector<EvalQuery> queries;
  for (const auto& [id, relevant] : truth.relevance) {
    std::string path;
    if (!images.empty()) {
      path = (std::filesystem::path(images) / id).string();
    } else if (const IndexEntry* e = file.index.find(id)) {
      path = e->source_path;
    } else {
      throw Error(ErrorCode::kNotFound,
                  fmt::format("query '{}' is not in the index; pass --images to locate it", id));
    }
    queries.push_back({id, [path] { return decode_image(read_file(path)); }, relevant});
  }
  const EvalReport report = evaluate_corpus(file.index, queries, parse_ks(ks), mode_arg(mode));
  const std::string doc = report_to_json(report);
  if (out.empty()) {
    std::cout << doc;
  } else {
    write_text(out, doc);
  }
  if (!table.empty()) write_text(table, report_to_tsv(report));
  for (const auto& p : report.macro) {
    std::cerr << fmt::format("P@{} = {:.4f}  R@{} = {:.4f}\n", p.k, p.precision, p.k, p.recall);
  }
  std::cerr << fmt::format("mean candidate ratio = {:.4f}\n", report.mean_candidate_ratio);
  return 0;
}

int run_gen_corpus(const std::string& output, int per_cell, std::uint64_t seed, int size) {
  const CorpusLayout layout = write_corpus(output, {per_cell, seed, size});
  std::cout << fmt::format("wrote {} images to {} and ground truth to {}\n", 9 * per_cell,
                           layout.image_dir, layout.ground_truth_path);
  return 0;
}

int run_serve(const std::string& index_path, const std::string& images, const std::string& host,
              int port, std::size_t max_upload) {
  QueryService service(load_index(index_path), {images, max_upload});
  std::cerr << fmt::format("serving {} entries on http://{}:{}\n",
                           service.index().index.entries.size(), host, port);
  if (!service.listen(host, port)) {
    throw Error(ErrorCode::kIo, fmt::format("cannot listen on {}:{}", host, port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-based image retrieval engine"};
  app.require_subcommand(1);

  std::string input, config_path, output;
  auto* index_cmd = app.add_subcommand("index", "Build and save an index over an image directory");
  index_cmd->add_option("--input", input, "Image directory")->required();
  index_cmd->add_option("--config", config_path, "Engine config file (key = value)");
  index_cmd->add_option("--output", output, "Index file to write")->required();

  std::string index_path, image, mode = "clustered";
  int k = 10;
  bool as_json = false;
  auto* query_cmd = app.add_subcommand("query", "Rank indexed images against a query image");
  query_cmd->add_option("--index", index_path, "Index file")->required();
  query_cmd->add_option("--image", image, "Query image (PNG or JPEG)")->required();
  query_cmd->add_option("--k", k, "Result count")->check(CLI::PositiveNumber);
  query_cmd->add_option("--mode", mode, "exhaustive | clustered");
  query_cmd->add_flag("--json", as_json, "Print the structured result document");

  std::string truth_path, ks = "5,10,20", eval_out, table, eval_images;
  auto* eval_cmd = app.add_subcommand("eval", "Precision/recall evaluation against ground truth");
  eval_cmd->add_option("--index", index_path, "Index file")->required();
  eval_cmd->add_option("--ground-truth", truth_path, "Ground-truth TSV")->required();
  eval_cmd->add_option("--ks", ks, "Comma-separated cutoffs");
  eval_cmd->add_option("--mode", mode, "exhaustive | clustered");
  eval_cmd->add_option("--out", eval_out, "Report path (default stdout)");
  eval_cmd->add_option("--table", table, "Per-query (k, precision, recall) TSV path");
  eval_cmd->add_option("--images", eval_images, "Directory holding the query images");

  std::string corpus_out;
  int per_cell = 30;
  std::uint64_t seed = 7;
  int size = 128;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Write the synthetic 3x3-cell test corpus");
  gen_cmd->add_option("--output", corpus_out, "Output directory")->required();
  gen_cmd->add_option("--per-cell", per_cell, "Images per (color, texture) cell");
  gen_cmd->add_option("--seed", seed, "Generator seed");
  gen_cmd->add_option("--size", size, "Image side length in pixels");

  std::string serve_images, host = "127.0.0.1";
  int port = 8080;
  std::size_t max_upload = cbir::kDefaultMaxUpload;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP query API");
  serve_cmd->add_option("--index", index_path, "Index file")->required();
  serve_cmd->add_option("--images", serve_images, "Directory the index was built from")->required();
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--max-upload", max_upload, "Upload limit in bytes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*index_cmd) return run_index(input, config_path, output);
    if (*query_cmd) return run_query(index_path, image, k, mode, as_json);
    if (*eval_cmd) return run_eval(index_path, truth_path, ks, mode, eval_out, table, eval_images);
    if (*gen_cmd) return run_gen_corpus(corpus_out, per_cell, seed, size);
    if (*serve_cmd) return run_serve(index_path, serve_images, host, port, max_upload);
  } catch (const cbir::Error& e) {
    std::cerr << "error: " << cbir::code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
