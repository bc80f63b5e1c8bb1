#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ragforensics/llm/remote.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <deque>
#include <mutex>
#include <semaphore>
#include <thread>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::llm {
namespace {

struct SplitUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

SplitUrl split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("base URL must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string api_key_from_env() {
  const char* value = std::getenv(kApiKeyEnv);
  return value == nullptr ? std::string{} : std::string(value);
}

struct HttpJsonClient::Impl {
  explicit Impl(const RemoteConfig& config)
      : url(split_base_url(config.base_url)),
        in_flight(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config.max_in_flight))) {}

  // Blocks until the per-minute budget has room.
  void admit(std::size_t per_minute) {
    if (per_minute == 0) return;
    std::unique_lock lock(window_mutex);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      while (!window.empty() && now - window.front() >= std::chrono::minutes(1)) {
        window.pop_front();
      }
      if (window.size() < per_minute) {
        window.push_back(now);
        return;
      }
      const auto wait = window.front() + std::chrono::minutes(1) - now;
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

  SplitUrl url;
  std::counting_semaphore<> in_flight;
  std::mutex window_mutex;
  std::deque<std::chrono::steady_clock::time_point> window;
};

HttpJsonClient::HttpJsonClient(RemoteConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_)) {}

HttpJsonClient::~HttpJsonClient() = default;

nlohmann::json HttpJsonClient::post(const std::string& path, const nlohmann::json& body) const {
  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{impl_->in_flight};

  httplib::Client client(impl_->url.scheme_host_port);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const std::string full_path = impl_->url.path_prefix + path;
  const std::string payload = body.dump();
  auto backoff = config_.initial_backoff;
  std::string last_error;
  int last_status = 0;

  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    impl_->admit(config_.requests_per_minute);
    auto res = client.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      spdlog::warn("POST {} failed ({}), attempt {}", full_path, last_error, attempt + 1);
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw GatewayError(std::string("response is not JSON: ") + e.what(), res->status);
      }
    }
    last_status = res->status;
    last_error = res->body;
    if (!retryable_status(res->status)) break;
    spdlog::warn("POST {} returned HTTP {}, attempt {}", full_path, res->status, attempt + 1);
  }
  if (last_status == 0) {
    throw RetryableError("transport failure after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
  }
  throw GatewayError("HTTP " + std::to_string(last_status) + ": " + last_error.substr(0, 500),
                     last_status);
}

RemoteChatModel::RemoteChatModel(RemoteConfig config) : client_(std::move(config)) {}

nlohmann::json RemoteChatModel::request_body(const ChatRequest& req) const {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) {
    messages.push_back(
        {{"role", m.role == Role::System ? "system" : "user"}, {"content", m.content}});
  }
  return {{"model", client_.config().model},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens}};
}

std::string RemoteChatModel::complete(const ChatRequest& req) const {
  validate(req);
  const auto reply = client_.post("/chat/completions", request_body(req));
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(std::string("malformed chat completion: ") + e.what(), 200);
  }
}

RemoteEmbedder::RemoteEmbedder(RemoteConfig config, std::size_t dimension)
    : client_(std::move(config)), dimension_(dimension) {}

kb::Embedding RemoteEmbedder::embed(std::string_view text) const {
  if (text::is_blank(text)) throw InvalidInput("cannot embed empty text");
  const auto reply =
      client_.post("/embeddings", {{"model", client_.config().model}, {"input", text}});
  kb::Embedding e;
  try {
    e.values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw EmbedError(std::string("malformed embedding response: ") + ex.what());
  }
  if (e.dim() != dimension_) {
    throw EmbedError("remote embedding has dimension " + std::to_string(e.dim()) +
                     ", configured " + std::to_string(dimension_));
  }
  return e;
}

}  // namespace ragforensics::llm
