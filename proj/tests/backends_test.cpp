#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "llmad/backends.hpp"
#include "llmad/parser.hpp"
#include "llmad/serializer.hpp"
#include "support/oracles.hpp"

namespace llmad {
namespace {

using nlohmann::json;

TEST(MockOracle, ConstantColumnFlagsNothing) {
  const std::vector<double> col = {5, 5, 5, 5};
  EXPECT_TRUE(mock_oracle_detect(col).empty());
}

TEST(MockOracle, SingleSpike) {
  const std::vector<double> col = {0, 0, 0, 0, 0, 50};
  const auto [mean, sigma] = testing::mean_and_sigma(col);
  EXPECT_NEAR(mean, 8.3333333, 1e-6);
  EXPECT_NEAR(sigma, 18.6338998, 1e-6);
  EXPECT_GT(50 - mean, 2 * sigma);
  EXPECT_EQ(mock_oracle_detect(col), (std::vector<std::int64_t>{6}));
}

TEST(MockOracle, StrictInequality) {
  const std::vector<double> pair = {-1, 1};
  EXPECT_TRUE(mock_oracle_detect(pair).empty());
}

TEST(MockOracle, ThreePointsNeverExceedTwoSigma) {
  // With N points the largest possible z-score is sqrt(N - 1), so the
  // two-sigma rule cannot flag anything for N <= 5.
  const std::vector<double> col = {0, 0, 99};
  const auto [mean, sigma] = testing::mean_and_sigma(col);
  EXPECT_LT(99 - mean, 2 * sigma);
  EXPECT_TRUE(mock_oracle_detect(col).empty());
  const std::vector<double> six = {0, 0, 0, 0, 0, 99};
  EXPECT_EQ(mock_oracle_detect(six), (std::vector<std::int64_t>{6}));
}

TEST(MockOracle, AffineEquivariant) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> dist(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(30);
    for (auto& v : x) v = dist(gen);
    x[gen() % x.size()] += 8;
    const double a = (t % 2 ? -1.0 : 1.0) * (0.5 + t % 7);
    const double b = static_cast<double>(t) - 50.0;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    EXPECT_EQ(mock_oracle_detect(x), mock_oracle_detect(y));
  }
}

TEST(MockOracle, PermutationEquivariant) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> dist(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(25);
    for (auto& v : x) v = std::round(dist(gen) * 4) / 4;
    x[3] = 9;
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[perm[i]];
    std::multiset<double> fx, fy;
    for (auto i : mock_oracle_detect(x)) fx.insert(x[i - 1]);
    for (auto i : mock_oracle_detect(y)) fy.insert(y[i - 1]);
    EXPECT_EQ(fx, fy);
  }
}

TEST(MockReply, FollowsTemplateOrFallsBack) {
  const std::vector<double> col = {0, 0, 0, 0, 0, 99};
  const PromptBundle p = build_prompt(col, DetectorConfig{});
  EXPECT_EQ(mock_reply(p.user, NamingScheme::kData).content, "Data 6 are abnormal.");
  const MockReply bad = mock_reply("what is this", NamingScheme::kRow);
  EXPECT_EQ(bad.content, "All rows are normal.");
  EXPECT_FALSE(bad.matched);
}

TEST(WireFormat, RequestFields) {
  BackendConfig config;
  config.model_name = "m";
  const std::vector<ChatMessage> msgs = {{Role::kSystem, "s"}, {Role::kUser, "u"}};
  const json body = json::parse(encode_chat_request(config, msgs));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "u");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(body["top_p"].get<double>(), 0.9);
  config.provider_defaults = true;
  const json bare = json::parse(encode_chat_request(config, msgs));
  EXPECT_FALSE(bare.contains("temperature"));
  EXPECT_FALSE(bare.contains("top_p"));
}

TEST(WireFormat, DecodeResponse) {
  EXPECT_EQ(decode_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})"),
            "hi");
  for (const char* bad : {"", "{}", R"({"choices":[]})", R"({"choices":[{"message":{}}]})",
                          R"({"choices":[{"message":{"content":3}}]})"}) {
    try {
      decode_chat_response(bad);
      FAIL() << bad;
    } catch (const BackendError& e) {
      EXPECT_EQ(e.kind(), BackendError::Kind::kMalformedResponse);
    }
  }
}

TEST(BackendConfig, Validation) {
  BackendConfig c;
  EXPECT_NO_THROW(c.validate());
  c.top_p = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.top_p = 1;
  c.temperature = -0.1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.temperature = 0;
  c.base_url = "ftp://x";
  EXPECT_THROW(HttpChatBackend{c}, InvalidArgument);
}

// Scripted server returning a fixed sequence of statuses.
class ScriptedServer {
 public:
  explicit ScriptedServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const std::size_t i = calls_++;
      last_auth_ = req.get_header_value("Authorization");
      const int status = i < statuses_.size() ? statuses_[i] : 200;
      res.status = status;
      if (status == 200) {
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Data 2 are abnormal."}}]})",
                        "application/json");
      } else {
        res.set_content(R"({"error":"nope"})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }
  BackendConfig config() const {
    BackendConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.backoff_base = std::chrono::milliseconds(1);
    return c;
  }
  std::size_t calls() const { return calls_; }
  std::string last_auth() const { return last_auth_; }

 private:
  std::vector<int> statuses_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> calls_{0};
  std::string last_auth_;
};

const std::vector<ChatMessage> kConversation = {{Role::kSystem, "Only answer data indices."},
                                                {Role::kUser, "Data 1 is 1.00."}};

TEST(HttpChatBackend, RetriesRateLimitThenSucceeds) {
  ScriptedServer server({429, 429, 200});
  BackendConfig config = server.config();
  config.api_key = "sk-test";
  EXPECT_EQ(complete_chat(config, kConversation), "Data 2 are abnormal.");
  EXPECT_EQ(server.calls(), 3u);
  EXPECT_EQ(server.last_auth(), "Bearer sk-test");
}

TEST(HttpChatBackend, AuthenticationFailureIsImmediate) {
  ScriptedServer server({401});
  try {
    complete_chat(server.config(), kConversation);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kAuthentication);
    EXPECT_EQ(e.status(), 401);
  }
  EXPECT_EQ(server.calls(), 1u);
}

TEST(HttpChatBackend, OtherClientErrorsAreFatal) {
  ScriptedServer server({404});
  try {
    complete_chat(server.config(), kConversation);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kHttpStatus);
  }
  EXPECT_EQ(server.calls(), 1u);
}

TEST(HttpChatBackend, GivesUpAfterRetries) {
  ScriptedServer server({500, 503, 502, 500});
  BackendConfig config = server.config();
  config.max_retries = 2;
  try {
    complete_chat(config, kConversation);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.status(), 502);
  }
  EXPECT_EQ(server.calls(), 3u);
}

TEST(HttpChatBackend, TransportFailure) {
  BackendConfig config;
  config.base_url = "http://127.0.0.1:1/v1";
  config.max_retries = 1;
  config.backoff_base = std::chrono::milliseconds(1);
  config.timeout = std::chrono::milliseconds(500);
  try {
    complete_chat(config, kConversation);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kTransport);
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(HttpChatBackend, NeedsUserMessage) {
  HttpChatBackend backend(BackendConfig{});
  const std::vector<ChatMessage> none = {{Role::kSystem, "x"}};
  EXPECT_THROW(backend.complete_chat(none), InvalidArgument);
}

TEST(MockServer, ServesCanonicalAnswers) {
  auto server = serve_mock(0, NamingScheme::kData);
  BackendConfig config;
  config.base_url = server->base_url();
  const std::vector<ChatMessage> msgs = {
      {Role::kUser, "Data 1 is 0.00. Data 2 is 0.00. Data 3 is 0.00. Data 4 is 0.00. "
                    "Data 5 is 0.00. Data 6 is 99.00. Which data are abnormal?"}};
  EXPECT_EQ(complete_chat(config, msgs), "Data 6 are abnormal.");
  const std::vector<ChatMessage> clean = {{Role::kUser, "Data 1 is 1.00. Data 2 is 1.00."}};
  EXPECT_EQ(complete_chat(config, clean), "All data are normal.");
}

TEST(MockServer, RowNamingAndDiagnostics) {
  auto server = serve_mock(0, NamingScheme::kRow);
  httplib::Client client("127.0.0.1", server->port());
  auto res = client.Post("/v1/chat/completions",
                         R"({"model":"x","messages":[{"role":"user","content":"garbage"}]})",
                         "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_TRUE(res->has_header("X-Mock-Diagnostic"));
  EXPECT_EQ(decode_chat_response(res->body), "All rows are normal.");
}

TEST(MockServer, MalformedBodyIs400) {
  auto server = serve_mock(0, NamingScheme::kData);
  httplib::Client client("127.0.0.1", server->port());
  for (const char* body : {"not json", "{}", R"({"messages":[{"role":"system","content":"x"}]})",
                           R"({"messages":[{"role":1}]})"}) {
    auto res = client.Post("/chat/completions", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400) << body;
  }
}

TEST(MockServer, OccupiedPortFails) {
  auto first = serve_mock(0, NamingScheme::kData);
  EXPECT_THROW(serve_mock(first->port(), NamingScheme::kData), IoError);
}

TEST(MockServer, LoopClosureWithParser) {
  auto server = serve_mock(0, NamingScheme::kData);
  BackendConfig config;
  config.base_url = server->base_url();
  HttpChatBackend http(config);
  std::mt19937_64 gen(12);
  std::normal_distribution<double> dist(10, 3);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> col(20 + t);
    for (auto& v : col) v = std::round(dist(gen) * 100) / 100;
    col[gen() % col.size()] = 60;
    const PromptBundle p = build_prompt(col, DetectorConfig{});
    const std::vector<ChatMessage> msgs = {{Role::kSystem, p.system}, {Role::kUser, p.user}};
    const auto parsed = parse_response(http.complete_chat(msgs), static_cast<std::int64_t>(col.size()));
    const auto expected = mock_oracle_detect(col);
    EXPECT_EQ(parsed.indices, std::set<std::int64_t>(expected.begin(), expected.end()));
  }
}

}  // namespace
}  // namespace llmad
