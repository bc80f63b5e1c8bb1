#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "ragforensics/kb/embedding.hpp"
#include "ragforensics/llm/chat_model.hpp"

namespace ragforensics::llm {

inline constexpr const char* kApiKeyEnv = "RAGFORENSICS_API_KEY";

struct RemoteConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t max_in_flight = 4;
  std::size_t requests_per_minute = 0;  // 0 = unlimited
  std::chrono::seconds timeout{60};
};

/// Reads the key from RAGFORENSICS_API_KEY; empty when unset.
std::string api_key_from_env();

/// POSTs JSON to an OpenAI-compatible endpoint with bounded retries,
/// exponential backoff, a max-in-flight cap and an optional per-minute budget.
/// Transport failures that outlive the retries raise RetryableError; a non-2xx
/// status raises GatewayError (429 and 5xx are retried first).
class HttpJsonClient {
 public:
  explicit HttpJsonClient(RemoteConfig config);
  ~HttpJsonClient();
  HttpJsonClient(const HttpJsonClient&) = delete;
  HttpJsonClient& operator=(const HttpJsonClient&) = delete;

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  const RemoteConfig& config() const noexcept { return config_; }

 private:
  struct Impl;
  RemoteConfig config_;
  std::unique_ptr<Impl> impl_;
};

class RemoteChatModel final : public ChatModel {
 public:
  explicit RemoteChatModel(RemoteConfig config);
  std::string complete(const ChatRequest& req) const override;

  /// Request body sent to /chat/completions.
  nlohmann::json request_body(const ChatRequest& req) const;

 private:
  HttpJsonClient client_;
};

/// OpenAI-compatible /embeddings backend for the knowledge database.
class RemoteEmbedder final : public kb::Embedder {
 public:
  RemoteEmbedder(RemoteConfig config, std::size_t dimension);
  kb::Embedding embed(std::string_view text) const override;
  std::size_t dimension() const override { return dimension_; }

 private:
  HttpJsonClient client_;
  std::size_t dimension_;
};

}  // namespace ragforensics::llm
