#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ragforensics::llm {

enum class Role { System, User };

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

enum class PromptVariant { Standard, BTE, ExpGen };

std::string_view to_string(PromptVariant v);
PromptVariant prompt_variant_from_string(std::string_view s);

// Structured copy of what a prompt asks for. Remote and scripted models ignore
// it and see only the rendered messages; simulated models in ragforensics::sim
// read it instead of re-parsing prompt text.
namespace intent {

struct Judge {
  std::string query;
  std::string context;
  std::string response;
};

struct Answer {
  std::string query;
  std::vector<std::string> contexts;
  PromptVariant variant = PromptVariant::Standard;
};

struct BenignText {
  std::string query;
  std::string answer;
};

struct PoisonPayload {
  std::string query;
  std::string target_answer;
  std::size_t index = 0;
};

struct Keywords {
  std::string text;
};

struct Partition {
  std::string query;
  std::vector<std::string> contexts;
};

struct Compose {
  std::string query;
  std::vector<std::pair<std::string, std::size_t>> keywords;  // keyword, support count
};

}  // namespace intent

using Intent = std::variant<std::monostate, intent::Judge, intent::Answer, intent::BenignText,
                            intent::PoisonPayload, intent::Keywords, intent::Partition,
                            intent::Compose>;

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  Intent intent;
};

/// Throws InvalidInput for an empty message list, negative temperature or a
/// non-positive token budget.
void validate(const ChatRequest& req);

/// Canonical text of a request: "<role>: <content>" per message with
/// whitespace collapsed, joined by newlines.
std::string normalized_prompt(const ChatRequest& req);

/// SHA-256 hex of normalized_prompt(); the key of script files.
std::string prompt_digest(const ChatRequest& req);

/// Anything that turns a chat request into text.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual std::string complete(const ChatRequest& req) const = 0;
};

}  // namespace ragforensics::llm
