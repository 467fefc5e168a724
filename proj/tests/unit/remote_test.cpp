#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "fame/embedding_space.hpp"
#include "fame/errors.hpp"
#include "fame/inspiration_graph.hpp"
#include "test_support.hpp"

#include <httplib.h>

using namespace fame;
using fame::testing::paper;
using nlohmann::json;

namespace {

// Local HTTP server running on a background thread for one test.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

graph::RemoteVerifierOptions options(const std::string& url) {
  graph::RemoteVerifierOptions o;
  o.endpoint = url;
  o.bearer_token = "secret";
  o.backoff_ms = 1;
  o.timeout_seconds = 5;
  return o;
}

const auto kEarlier = paper("e1", 0);
const auto kLater = paper("l1", 100);
const graph::CandidatePair kPair{"e1", "l1", 0.8, 100};

}  // namespace

TEST(RemoteVerifier, SendsPromptAndParsesVerdict) {
  LocalServer srv;
  std::string seen_auth, seen_prompt;
  srv.server().Post("/verify", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_prompt = json::parse(req.body).at("prompt");
    res.set_content(R"({"is_inspired": true, "confidence": 0.7, "rationale": "r"})", "application/json");
  });
  graph::RemoteVerifier v(options(srv.url("/verify")));
  const auto verdict = v.verify(kPair, kEarlier, kLater);
  EXPECT_TRUE(verdict.is_inspired);
  EXPECT_DOUBLE_EQ(verdict.confidence, 0.7);
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_prompt, graph::render_verification_prompt(kEarlier, kLater, 0.8, 100));
}

TEST(RemoteVerifier, RetriesServerErrors) {
  LocalServer srv;
  std::atomic<int> calls = 0;
  srv.server().Post("/v", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"is_inspired": false, "confidence": 0.2, "rationale": ""})", "application/json");
  });
  graph::RemoteVerifier v(options(srv.url("/v")));
  EXPECT_FALSE(v.verify(kPair, kEarlier, kLater).is_inspired);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteVerifier, GivesUpAfterMaxAttempts) {
  LocalServer srv;
  std::atomic<int> calls = 0;
  srv.server().Post("/v", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  graph::RemoteVerifier v(options(srv.url("/v")));
  EXPECT_THROW(v.verify(kPair, kEarlier, kLater), ServiceError);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteVerifier, ClientErrorIsNotRetried) {
  LocalServer srv;
  std::atomic<int> calls = 0;
  srv.server().Post("/v", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  graph::RemoteVerifier v(options(srv.url("/v")));
  EXPECT_THROW(v.verify(kPair, kEarlier, kLater), ServiceError);
  EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteVerifier, MalformedReplyIsSkippedByGraphBuilder) {
  LocalServer srv;
  srv.server().Post("/v", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("Sure! The answer is yes.", "text/plain");
  });
  graph::RemoteVerifier v(options(srv.url("/v")));
  EXPECT_THROW(v.verify(kPair, kEarlier, kLater), ServiceError);

  corpus::Corpus c;
  c.add(paper("e1", 0));
  c.add(paper("l1", 100, {"e1"}));
  Matrix rows(2, 2);
  rows << 0.9, 0.435889894354, 1, 0;
  embedding::EmbeddingMatrix emb({"e1", "l1"}, rows);
  graph::GraphStats stats;
  EXPECT_TRUE(graph::build_graph(c, emb, {}, v, &stats).empty());
  EXPECT_EQ(stats.failed, 1u);
}

TEST(RemoteVerifier, UnreachableEndpointThrows) {
  auto o = options("http://127.0.0.1:1/v");
  o.max_attempts = 1;
  o.timeout_seconds = 1;
  graph::RemoteVerifier v(o);
  EXPECT_THROW(v.verify(kPair, kEarlier, kLater), ServiceError);
  EXPECT_THROW(graph::RemoteVerifier(graph::RemoteVerifierOptions{}), ArgumentError);
}

TEST(CachingVerifier, ReplaysFromDisk) {
  fame::testing::TempDir dir("cache");
  LocalServer srv;
  std::atomic<int> calls = 0;
  srv.server().Post("/v", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.set_content(R"({"is_inspired": true, "confidence": 0.9, "rationale": "x"})", "application/json");
  });
  auto remote = std::make_shared<graph::RemoteVerifier>(options(srv.url("/v")));
  {
    graph::CachingVerifier cached(remote, dir / "cache.jsonl");
    cached.verify(kPair, kEarlier, kLater);
    cached.verify(kPair, kEarlier, kLater);
    EXPECT_EQ(cached.hits(), 1u);
    EXPECT_EQ(cached.misses(), 1u);
  }
  graph::CachingVerifier reloaded(remote, dir / "cache.jsonl");
  const auto v = reloaded.verify(kPair, kEarlier, kLater);
  EXPECT_TRUE(v.is_inspired);
  EXPECT_DOUBLE_EQ(v.confidence, 0.9);
  EXPECT_EQ(calls.load(), 1);
  // A changed prompt misses the cache.
  graph::CandidatePair other = kPair;
  other.similarity = 0.81;
  reloaded.verify(other, kEarlier, kLater);
  EXPECT_EQ(calls.load(), 2);
}

TEST(EmbeddingClient, FetchesRows) {
  LocalServer srv;
  std::string auth;
  srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    const auto texts = json::parse(req.body).at("texts");
    json rows = json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) rows.push_back({static_cast<double>(i), 0.5});
    res.set_content(json{{"embeddings", rows}}.dump(), "application/json");
  });
  const std::vector<std::string> texts{"a", "b", "c"};
  const auto m = embedding::fetch_embeddings(srv.url("/embed"), texts, "tok");
  ASSERT_EQ(m.rows(), 3);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_DOUBLE_EQ(m(2, 0), 2.0);
  EXPECT_EQ(auth, "Bearer tok");
}

TEST(EmbeddingClient, RejectsBadReplies) {
  LocalServer srv;
  std::string reply;
  int status = 200;
  srv.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    res.status = status;
    res.set_content(reply, "application/json");
  });
  const std::vector<std::string> texts{"a", "b"};
  for (const char* body : {"not json", R"({"vectors": []})", R"({"embeddings": [[1]]})",
                           R"({"embeddings": [[1, 2], [3]]})", R"({"embeddings": [[1, "x"], [3, 4]]})"}) {
    reply = body;
    EXPECT_THROW(embedding::fetch_embeddings(srv.url("/embed"), texts), ServiceError) << body;
  }
  status = 500;
  reply = "{}";
  EXPECT_THROW(embedding::fetch_embeddings(srv.url("/embed"), texts), ServiceError);
}
