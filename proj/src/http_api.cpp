#include "cbir/http_api.hpp"

#include <charconv>
#include <filesystem>
#include <map>

#include <fmt/core.h>
#include <httplib.h>
#include <json.hpp>

#include "cbir/error.hpp"

namespace cbir {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kPayloadTooLarge: return 413;
    case ErrorCode::kDecode:
    case ErrorCode::kUnsupportedFormat:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kImageTooSmall:
    case ErrorCode::kEmptyGlcm:
    case ErrorCode::kPathTraversal: return 400;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(json{{"code", code}, {"message", message}}.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, status_for(e.code()), code_name(e.code()), e.what());
}

int parse_k(const httplib::Request& req) {
  if (!req.has_param("k")) return 10;
  const std::string s = req.get_param_value("k");
  int k = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
  if (ec != std::errc() || ptr != s.data() + s.size() || k < 1) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("k must be a positive integer, got '{}'", s));
  }
  return k;
}

SearchMode parse_mode(const httplib::Request& req) {
  if (!req.has_param("mode")) return SearchMode::kClustered;
  const std::string s = req.get_param_value("mode");
  const auto mode = parse_search_mode(s);
  if (!mode) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("mode must be exhaustive or clustered, got '{}'", s));
  }
  return *mode;
}

std::string media_type(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
    return "image/png";
  }
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    return "image/jpeg";
  }
  return "application/octet-stream";
}

// Runs a handler body, mapping engine errors to their HTTP form.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace

bool is_safe_image_id(std::string_view id) {
  if (id.empty() || id.front() == '/') return false;
  if (id.find('\\') != std::string_view::npos || id.find('\0') != std::string_view::npos) {
    return false;
  }
  std::size_t start = 0;
  while (start <= id.size()) {
    const auto slash = id.find('/', start);
    const std::string_view segment =
        id.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
    if (segment == "..") return false;
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return true;
}

std::string result_json(const RetrievalResult& result) {
  json results = json::array();
  for (const auto& hit : result.entries) {
    results.push_back({{"id", hit.image_id}, {"distance", hit.distance}, {"rank", hit.rank}});
  }
  return json{{"results", std::move(results)},
              {"candidates_examined", result.candidates_examined},
              {"mode", to_string(result.mode)}}
      .dump();
}

std::string stats_json(const IndexFile& file) {
  const SearchIndex& idx = file.index;
  std::map<std::string, std::size_t> groups;
  std::map<std::string, std::size_t> classes;
  for (auto g : kAllColorGroups) groups[std::string(to_string(g))] = 0;
  for (auto c : kAllTextureClasses) classes[std::string(to_string(c))] = 0;
  for (const auto& e : idx.entries) {
    ++groups[std::string(to_string(e.color_group))];
    ++classes[std::string(to_string(e.texture_class))];
  }
  return json{{"entries", idx.entries.size()},
              {"groups", groups},
              {"classes", classes},
              {"config_echo", json::parse(config_json(idx.config))}}
      .dump();
}

QueryService::QueryService(IndexFile index, ServiceOptions options)
    : index_(std::move(index)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  if (index_.index.entries.empty()) throw Error(ErrorCode::kEmptyIndex, "index has no entries");
  mount();
}

QueryService::~QueryService() = default;

httplib::Server& QueryService::server() { return *server_; }

bool QueryService::listen(const std::string& host, int port) { return server_->listen(host, port); }

int QueryService::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool QueryService::listen_after_bind() { return server_->listen_after_bind(); }

void QueryService::stop() { server_->stop(); }

void QueryService::mount() {
  httplib::Server& srv = *server_;
  srv.set_payload_max_length(options_.max_upload_bytes);

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    switch (res.status) {
      case 413:
        send_error(res, 413, code_name(ErrorCode::kPayloadTooLarge), "upload exceeds the size limit");
        break;
      case 404:
        send_error(res, 404, code_name(ErrorCode::kNotFound), "no such resource");
        break;
      case 400:
        send_error(res, 400, code_name(ErrorCode::kInvalidArgument), "malformed request");
        break;
      default:
        send_error(res, res.status, fmt::format("http-{}", res.status), "request failed");
        break;
    }
    return httplib::Server::HandlerResponse::Handled;
  });

  srv.Post("/api/query", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_file("image")) {
        throw Error(ErrorCode::kInvalidArgument, "multipart field 'image' is required");
      }
      const int k = parse_k(req);
      const SearchMode mode = parse_mode(req);
      const auto& content = req.get_file_value("image").content;
      if (content.size() > options_.max_upload_bytes) {
        throw Error(ErrorCode::kPayloadTooLarge, "upload exceeds the size limit");
      }
      const auto* bytes = reinterpret_cast<const std::uint8_t*>(content.data());
      const RgbRaster img = decode_image(std::span(bytes, content.size()));
      res.set_content(result_json(query(index_.index, img, k, mode)), kJson);
    });
  });

  srv.Get(R"(/api/query-by-id/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const int k = parse_k(req);
      const SearchMode mode = parse_mode(req);
      const IndexEntry* entry = index_.index.find(id);
      if (entry == nullptr) throw Error(ErrorCode::kNotFound, fmt::format("unknown image id '{}'", id));
      res.set_content(result_json(rank_candidates(describe_entry(*entry), index_.index, k, mode)),
                      kJson);
    });
  });

  srv.Get(R"(/api/image/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!is_safe_image_id(id)) {
        throw Error(ErrorCode::kPathTraversal, fmt::format("rejected image id '{}'", id));
      }
      if (index_.index.find(id) == nullptr) {
        throw Error(ErrorCode::kNotFound, fmt::format("unknown image id '{}'", id));
      }
      const auto path = std::filesystem::path(options_.image_dir) / id;
      Bytes bytes;
      try {
        bytes = read_file(path.string());
      } catch (const Error&) {
        throw Error(ErrorCode::kNotFound, fmt::format("image '{}' is not readable", id));
      }
      const std::string type = media_type(bytes);
      res.set_content(std::string(bytes.begin(), bytes.end()), type);
    });
  });

  srv.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(stats_json(index_), kJson);
  });
}

}  // namespace cbir
