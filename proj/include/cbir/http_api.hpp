#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "cbir/index_file.hpp"

namespace httplib {
class Server;
}

namespace cbir {

inline constexpr std::size_t kDefaultMaxUpload = 16u * 1024u * 1024u;

struct ServiceOptions {
  std::string image_dir;
  std::size_t max_upload_bytes = kDefaultMaxUpload;
};

/// Read-only query service over one loaded index.
///
///   POST /api/query               multipart field `image`; query params k, mode
///   GET  /api/query-by-id/{id}    same response, indexed image as the query
///   GET  /api/image/{id}          original image bytes
///   GET  /api/stats               entry, group and class counts plus config
///
/// Errors carry `{"code": ..., "message": ...}` with a 4xx/5xx status.
class QueryService {
 public:
  QueryService(IndexFile index, ServiceOptions options);
  ~QueryService();

  QueryService(const QueryService&) = delete;
  QueryService& operator=(const QueryService&) = delete;

  httplib::Server& server();

  // Binds and serves until stop(); returns false if the bind failed.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (for tests); -1 on failure.
  int bind_any(const std::string& host);
  bool listen_after_bind();
  void stop();

  const IndexFile& index() const noexcept { return index_; }

 private:
  void mount();

  const IndexFile index_;
  const ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

// GET /api/stats body; exposed for the CLI and tests.
std::string stats_json(const IndexFile& index);

// Response body shared by the query endpoints.
std::string result_json(const RetrievalResult& result);

// Rejects ids that could escape the image directory: empty, absolute, or
// containing a `..` segment, a backslash or a NUL.
bool is_safe_image_id(std::string_view id);

}  // namespace cbir
