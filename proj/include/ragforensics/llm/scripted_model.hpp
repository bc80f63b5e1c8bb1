#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "ragforensics/llm/chat_model.hpp"

namespace ragforensics::llm {

/// Replays responses from a table keyed by prompt_digest(). An unknown digest
/// raises ScriptMiss; nothing is ever made up.
class ScriptedChatModel final : public ChatModel {
 public:
  ScriptedChatModel() = default;

  /// Script file: JSON object mapping SHA-256 prompt digest -> response text.
  static ScriptedChatModel from_json(const nlohmann::json& table);
  static ScriptedChatModel from_file(const std::filesystem::path& path);

  void set(std::string digest, std::string response);
  void set_for(const ChatRequest& req, std::string response);

  std::string complete(const ChatRequest& req) const override;

  std::size_t size() const noexcept { return table_.size(); }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string, std::less<>> table_;
};

}  // namespace ragforensics::llm
