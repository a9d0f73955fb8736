#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cbir/http_api.hpp"
#include "test_support.hpp"

namespace cbir {
namespace {

using nlohmann::json;
using testing::SharedCorpus;

class HttpApiTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto& shared = SharedCorpus::get();
    service_ = new QueryService(shared.file, {shared.layout.image_dir, 64 * 1024});
    port_ = service_->bind_any("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = new std::thread([] { service_->listen_after_bind(); });
  }

  static void TearDownTestSuite() {
    service_->stop();
    thread_->join();
    delete thread_;
    delete service_;
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

  static httplib::Result post_image(httplib::Client& cli, const std::string& bytes,
                                    const std::string& query = "") {
    httplib::MultipartFormDataItems items = {{"image", bytes, "q.png", "image/png"}};
    return cli.Post("/api/query" + query, items);
  }

  static std::string entry_bytes(std::size_t i) {
    const auto& e = SharedCorpus::get().file.index.entries[i];
    const Bytes b = read_file(e.source_path);
    return std::string(b.begin(), b.end());
  }

  static inline QueryService* service_ = nullptr;
  static inline std::thread* thread_ = nullptr;
  static inline int port_ = 0;
};

TEST_F(HttpApiTest, QueryByIdFindsItself) {
  auto cli = client();
  const auto& e = SharedCorpus::get().file.index.entries[12];
  auto res = cli.Get("/api/query-by-id/" + e.image_id + "?k=1&mode=exhaustive");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json doc = json::parse(res->body);
  EXPECT_EQ(doc["mode"], "exhaustive");
  ASSERT_EQ(doc["results"].size(), 1u);
  EXPECT_EQ(doc["results"][0]["id"], e.image_id);
  EXPECT_EQ(doc["results"][0]["distance"], 0.0);
  EXPECT_EQ(doc["results"][0]["rank"], 1);
}

TEST_F(HttpApiTest, PostQueryIsDeterministic) {
  auto cli = client();
  const std::string bytes = entry_bytes(40);
  auto a = post_image(cli, bytes, "?k=5");
  auto b = post_image(cli, bytes, "?k=5");
  ASSERT_TRUE(a);
  ASSERT_TRUE(b);
  EXPECT_EQ(a->status, 200);
  EXPECT_EQ(a->body, b->body);
  const json doc = json::parse(a->body);
  EXPECT_EQ(doc["mode"], "clustered");
  EXPECT_EQ(doc["results"].size(), 5u);
  EXPECT_EQ(doc["results"][0]["id"], SharedCorpus::get().file.index.entries[40].image_id);
  EXPECT_LT(doc["candidates_examined"].get<int>(), 270);
}

TEST_F(HttpApiTest, BadRequests) {
  auto cli = client();
  auto undecodable = post_image(cli, "definitely not an image");
  ASSERT_TRUE(undecodable);
  EXPECT_EQ(undecodable->status, 400);
  EXPECT_EQ(json::parse(undecodable->body)["code"], "unsupported-format");

  auto bad_k = post_image(cli, entry_bytes(0), "?k=0");
  ASSERT_TRUE(bad_k);
  EXPECT_EQ(bad_k->status, 400);
  EXPECT_EQ(json::parse(bad_k->body)["code"], "invalid-argument");

  auto bad_mode = cli.Get("/api/query-by-id/" + SharedCorpus::get().file.index.entries[0].image_id +
                          "?mode=fast");
  ASSERT_TRUE(bad_mode);
  EXPECT_EQ(bad_mode->status, 400);

  auto no_field = cli.Post("/api/query", httplib::MultipartFormDataItems{{"file", "x", "x", "text/plain"}});
  ASSERT_TRUE(no_field);
  EXPECT_EQ(no_field->status, 400);
}

TEST_F(HttpApiTest, OversizedUploadIs413) {
  auto cli = client();
  auto res = post_image(cli, std::string(100 * 1024, 'x'));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 413);
  EXPECT_EQ(json::parse(res->body)["code"], "payload-too-large");
}

TEST_F(HttpApiTest, UnknownIdIs404) {
  auto cli = client();
  auto res = cli.Get("/api/query-by-id/no-such.png");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["code"], "not-found");
  auto img = cli.Get("/api/image/no-such.png");
  ASSERT_TRUE(img);
  EXPECT_EQ(img->status, 404);
}

TEST_F(HttpApiTest, PathTraversalIsRejected) {
  auto cli = client();
  for (const char* path : {"/api/image/../../etc/passwd", "/api/image/%2e%2e/%2e%2e/etc/passwd",
                           "/api/image/a/../../x.png"}) {
    auto res = cli.Get(path);
    ASSERT_TRUE(res) << path;
    EXPECT_EQ(res->status, 400) << path;
    EXPECT_EQ(json::parse(res->body)["code"], "path-traversal") << path;
  }
}

TEST_F(HttpApiTest, ImageBytesAreServed) {
  auto cli = client();
  const auto& e = SharedCorpus::get().file.index.entries[3];
  auto res = cli.Get("/api/image/" + e.image_id);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(res->body, entry_bytes(3));
}

TEST_F(HttpApiTest, StatsCounts) {
  auto cli = client();
  auto res = cli.Get("/api/stats");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json doc = json::parse(res->body);
  EXPECT_EQ(doc["entries"], 270);
  for (const char* g : {"Red", "Green", "Blue"}) EXPECT_EQ(doc["groups"][g], 90) << g;
  for (const char* c : {"Low", "Average", "High"}) EXPECT_EQ(doc["classes"][c], 90) << c;
  EXPECT_EQ(doc["config_echo"]["retrieval"]["k_min"], 10);
  EXPECT_EQ(res->body, cli.Get("/api/stats")->body);
}

TEST(SafeImageId, Rules) {
  EXPECT_TRUE(is_safe_image_id("a.png"));
  EXPECT_TRUE(is_safe_image_id("sub/dir/a..png"));
  EXPECT_FALSE(is_safe_image_id(""));
  EXPECT_FALSE(is_safe_image_id("/etc/passwd"));
  EXPECT_FALSE(is_safe_image_id("../x"));
  EXPECT_FALSE(is_safe_image_id("a/../../x"));
  EXPECT_FALSE(is_safe_image_id("a\\b"));
  EXPECT_FALSE(is_safe_image_id(std::string_view("a\0b", 3)));
}

}  // namespace
}  // namespace cbir
