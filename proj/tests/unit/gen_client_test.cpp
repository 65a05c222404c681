#include "perfedit/gen_client.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "perfedit/jsonl.hpp"

namespace perfedit {
namespace {

namespace fs = std::filesystem;

/// In-process stub endpoint with a scriptable handler.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&,
                                     httplib::Response&)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/generate",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   ++requests_;
                   handler_(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/generate";
  }
  int requests() const { return requests_; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
};

GenClientConfig client_config(const std::string& url,
                              const fs::path& cache_dir = {}) {
  GenClientConfig config;
  config.endpoint_url = url;
  config.cache_dir = cache_dir;
  config.max_retries = 4;
  config.initial_backoff_s = 0.01;  // keep tests fast
  return config;
}

fs::path temp_cache(const std::string& tag) {
  const auto dir = fs::temp_directory_path() /
                   ("perfedit-gencache-" + tag + "-" +
                    std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

TEST(GenClient, ReturnsSamplesInOrder) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"samples": ["first", "second", "third"]})",
                    "application/json");
  });
  GenClient client(client_config(server.url()));
  GenRequest req;
  req.prompt = "optimize this";
  req.n = 3;
  auto response = client.generate(req);
  ASSERT_TRUE(response.ok());
  EXPECT_EQ(response.value().samples,
            (std::vector<std::string>{"first", "second", "third"}));
  EXPECT_EQ(response.value().shortfall, 0);
  EXPECT_FALSE(response.value().from_cache);
}

TEST(GenClient, RetriesTransientServerErrors) {
  std::atomic<int> failures{3};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (failures-- > 0) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"samples": ["ok"]})", "application/json");
  });
  GenClient client(client_config(server.url()));
  GenRequest req;
  req.prompt = "p";
  auto response = client.generate(req);
  ASSERT_TRUE(response.ok());
  EXPECT_EQ(response.value().samples[0], "ok");
  EXPECT_EQ(server.requests(), 4);  // three 500s, then success
}

TEST(GenClient, GivesUpAfterRetryBudget) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  auto config = client_config(server.url());
  config.max_retries = 2;
  GenClient client(config);
  GenRequest req;
  req.prompt = "p";
  auto response = client.generate(req);
  ASSERT_FALSE(response.ok());
  EXPECT_EQ(response.error().kind, GenErrorKind::Transport);
  EXPECT_EQ(server.requests(), 3);  // initial try + two retries
}

TEST(GenClient, AuthFailureIsNotRetried) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
  });
  GenClient client(client_config(server.url()));
  GenRequest req;
  req.prompt = "p";
  auto response = client.generate(req);
  ASSERT_FALSE(response.ok());
  EXPECT_EQ(response.error().kind, GenErrorKind::Auth);
  EXPECT_EQ(server.requests(), 1);
}

TEST(GenClient, CacheHitMakesZeroNetworkCalls) {
  const auto cache = temp_cache("hit");
  std::optional<StubServer> server;
  server.emplace([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"samples": ["cached answer"]})", "application/json");
  });

  GenRequest req;
  req.prompt = "memoize me";
  {
    GenClient client(client_config(server->url(), cache));
    auto first = client.generate(req);
    ASSERT_TRUE(first.ok());
    EXPECT_FALSE(first.value().from_cache);
  }
  EXPECT_EQ(server->requests(), 1);
  server.reset();  // endpoint gone; only the cache can answer

  GenClient offline(client_config("http://127.0.0.1:9/generate", cache));
  auto replayed = offline.generate(req);
  ASSERT_TRUE(replayed.ok());
  EXPECT_TRUE(replayed.value().from_cache);
  EXPECT_EQ(replayed.value().samples[0], "cached answer");
  fs::remove_all(cache);
}

TEST(GenClient, CacheLayoutIsContentAddressed) {
  const auto cache = temp_cache("layout");
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"samples": ["x"]})", "application/json");
  });
  GenClient client(client_config(server.url(), cache));
  GenRequest req;
  req.prompt = "addressed";
  ASSERT_TRUE(client.generate(req).ok());

  const std::string digest = request_digest(req);
  const fs::path expected =
      cache / digest.substr(0, 2) / (digest + ".json");
  EXPECT_TRUE(fs::exists(expected));
  const Json entry = Json::parse(read_file(expected));
  EXPECT_EQ(entry.at("request").at("prompt"), "addressed");
  EXPECT_TRUE(entry.contains("timestamp"));
  fs::remove_all(cache);
}

TEST(GenClient, PromptChangeChangesCacheKey) {
  GenRequest a;
  a.prompt = "one";
  GenRequest b;
  b.prompt = "two";
  EXPECT_NE(request_digest(a), request_digest(b));
  GenRequest c = a;
  EXPECT_EQ(request_digest(a), request_digest(c));
  c.temperature = 0.9;
  EXPECT_NE(request_digest(a), request_digest(c));
}

TEST(GenClient, ShortfallRecordedNeverSilent) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"samples": ["only one"]})", "application/json");
  });
  GenClient client(client_config(server.url()));
  GenRequest req;
  req.prompt = "p";
  req.n = 4;
  auto response = client.generate(req);
  ASSERT_TRUE(response.ok());
  EXPECT_EQ(response.value().samples.size(), 1u);
  EXPECT_EQ(response.value().shortfall, 3);
}

TEST(GenClient, MalformedBodyIsAnError) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json at all", "text/plain");
  });
  GenClient client(client_config(server.url()));
  GenRequest req;
  req.prompt = "p";
  auto response = client.generate(req);
  ASSERT_FALSE(response.ok());
  EXPECT_EQ(response.error().kind, GenErrorKind::MalformedResponse);
}

TEST(GenClient, SendsBearerTokenFromEnv) {
  std::string seen_auth;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"({"samples": ["x"]})", "application/json");
  });
  ::setenv("PERFEDIT_TEST_TOKEN", "sekrit", 1);
  auto config = client_config(server.url());
  config.auth_token_env = "PERFEDIT_TEST_TOKEN";
  GenClient client(config);
  GenRequest req;
  req.prompt = "p";
  ASSERT_TRUE(client.generate(req).ok());
  EXPECT_EQ(seen_auth, "Bearer sekrit");
  ::unsetenv("PERFEDIT_TEST_TOKEN");
}

TEST(GenClient, RejectsInvalidRequests) {
  GenClient client(client_config("http://127.0.0.1:9/generate"));
  GenRequest req;  // empty prompt
  EXPECT_THROW((void)client.generate(req), std::invalid_argument);
  req.prompt = "p";
  req.n = 10000;
  EXPECT_THROW((void)client.generate(req), std::invalid_argument);
  req.n = 1;
  req.top_p = 0.0;
  EXPECT_THROW((void)client.generate(req), std::invalid_argument);
}

// --- extract_program ---------------------------------------------------------

TEST(ExtractProgram, TakesLastFencedBlock) {
  const auto result = extract_program(
      "reasoning...\n```\nint main(){}\n```\n");
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result.value(), "int main(){}");
}

TEST(ExtractProgram, PlainCodeUnchanged) {
  const std::string plain = "int main() { return 0; }\n";
  const auto result = extract_program(plain);
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result.value(), plain);
}

TEST(ExtractProgram, SecondOfTwoBlocksWins) {
  const auto result = extract_program(
      "```cpp\nfirst block\n```\nsome prose\n```cpp\nsecond block\n```\n"
      "trailing prose\n");
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result.value(), "second block");
}

TEST(ExtractProgram, LanguageTagsAndIndentTolerated) {
  const auto result =
      extract_program("  ```c++\nint x = 1;\nint y = 2;\n  ```");
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result.value(), "int x = 1;\nint y = 2;");
}

TEST(ExtractProgram, UnterminatedBlockRunsToEnd) {
  const auto result = extract_program("text\n```\nint main(){}\n");
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result.value(), "int main(){}");
}

TEST(ExtractProgram, EmptyExtractionIsAnError) {
  EXPECT_FALSE(extract_program("").ok());
  EXPECT_FALSE(extract_program("   \n \t\n").ok());
  EXPECT_FALSE(extract_program("prose\n```\n\n```\n").ok());
}

}  // namespace
}  // namespace perfedit
