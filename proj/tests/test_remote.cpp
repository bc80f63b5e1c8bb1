#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "ragforensics/errors.hpp"
#include "ragforensics/llm/remote.hpp"

using namespace ragforensics;
using namespace ragforensics::llm;

namespace {

// Local OpenAI-compatible stand-in on an ephemeral port.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteConfig config_for(const std::string& url) {
  RemoteConfig c;
  c.base_url = url;
  c.model = "test-model";
  c.api_key = "secret";
  c.max_retries = 2;
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(5);
  return c;
}

ChatRequest user(std::string text) {
  ChatRequest r;
  r.messages.push_back({Role::User, std::move(text)});
  return r;
}

const char* kReply = R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})";

}  // namespace

TEST(RemoteChat, SendsOpenAiShapedRequest) {
  FakeServer fake;
  nlohmann::json seen;
  std::string auth;
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(kReply, "application/json");
  });
  RemoteChatModel model(config_for(fake.base_url()));
  EXPECT_EQ(model.complete(user("hi")), "hello");
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(seen["model"], "test-model");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["messages"][0]["role"], "user");
  EXPECT_EQ(seen["messages"][0]["content"], "hi");
}

TEST(RemoteChat, UnauthorizedCarriesStatusWithoutRetry) {
  FakeServer fake;
  std::atomic<int> calls{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
    res.set_content(R"({"error":"invalid key"})", "application/json");
  });
  RemoteChatModel model(config_for(fake.base_url()));
  try {
    model.complete(user("hi"));
    FAIL() << "expected GatewayError";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.status(), 401);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteChat, ServerErrorsAreRetried) {
  FakeServer fake;
  std::atomic<int> calls{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(kReply, "application/json");
  });
  RemoteChatModel model(config_for(fake.base_url()));
  EXPECT_EQ(model.complete(user("hi")), "hello");
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteChat, PersistentServerErrorBecomesGatewayError) {
  FakeServer fake;
  std::atomic<int> calls{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 429;
  });
  RemoteChatModel model(config_for(fake.base_url()));
  try {
    model.complete(user("hi"));
    FAIL() << "expected GatewayError";
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.status(), 429);
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteChat, TransportFailureIsRetryable) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }  // closed again: nothing listens there now
  auto cfg = config_for("http://127.0.0.1:" + std::to_string(port) + "/v1");
  cfg.timeout = std::chrono::seconds(1);
  RemoteChatModel model(cfg);
  EXPECT_THROW(model.complete(user("hi")), RetryableError);
}

TEST(RemoteChat, MalformedReplyIsGatewayError) {
  FakeServer fake;
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"unexpected":true})", "application/json");
  });
  RemoteChatModel model(config_for(fake.base_url()));
  EXPECT_THROW(model.complete(user("hi")), GatewayError);
}

TEST(RemoteChat, InFlightCapHolds) {
  FakeServer fake;
  std::atomic<int> current{0};
  std::atomic<int> peak{0};
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++current;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --current;
    res.set_content(kReply, "application/json");
  });
  auto cfg = config_for(fake.base_url());
  cfg.max_in_flight = 2;
  RemoteChatModel model(cfg);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&] { EXPECT_EQ(model.complete(user("x")), "hello"); });
  for (auto& t : threads) t.join();
  EXPECT_LE(peak.load(), 2);
}

TEST(RemoteEmbedder, ParsesVectorAndChecksDimension) {
  FakeServer fake;
  fake.server().Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"data":[{"embedding":[0.5,0.25,0.25]}]})", "application/json");
  });
  RemoteEmbedder good(config_for(fake.base_url()), 3);
  EXPECT_EQ(good.embed("text").values, (std::vector<double>{0.5, 0.25, 0.25}));
  RemoteEmbedder wrong(config_for(fake.base_url()), 4);
  EXPECT_THROW(wrong.embed("text"), EmbedError);
  EXPECT_THROW(good.embed(""), InvalidInput);
}

TEST(RemoteConfig, BaseUrlNeedsScheme) {
  EXPECT_THROW(RemoteChatModel(config_for("localhost:8080")), ConfigError);
}

TEST(RemoteConfig, ApiKeyFromEnvironment) {
  ::setenv(kApiKeyEnv, "from-env", 1);
  EXPECT_EQ(api_key_from_env(), "from-env");
  ::unsetenv(kApiKeyEnv);
  EXPECT_EQ(api_key_from_env(), "");
}
