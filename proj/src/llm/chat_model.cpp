#include "ragforensics/llm/chat_model.hpp"

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::llm {

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::Standard: return "standard";
    case PromptVariant::BTE: return "bte";
    case PromptVariant::ExpGen: return "expgen";
  }
  return "standard";
}

PromptVariant prompt_variant_from_string(std::string_view s) {
  if (s == "standard") return PromptVariant::Standard;
  if (s == "bte") return PromptVariant::BTE;
  if (s == "expgen") return PromptVariant::ExpGen;
  throw InvalidInput("unknown prompt variant '" + std::string(s) + "'");
}

void validate(const ChatRequest& req) {
  if (req.messages.empty()) throw InvalidInput("chat request needs at least one message");
  if (req.temperature < 0.0) throw InvalidInput("temperature must be non-negative");
  if (req.max_tokens <= 0) throw InvalidInput("max_tokens must be positive");
}

std::string normalized_prompt(const ChatRequest& req) {
  std::string out;
  for (std::size_t i = 0; i < req.messages.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += req.messages[i].role == Role::System ? "system: " : "user: ";
    out += text::collapse_whitespace(req.messages[i].content);
  }
  return out;
}

std::string prompt_digest(const ChatRequest& req) {
  return text::sha256_hex(normalized_prompt(req));
}

}  // namespace ragforensics::llm
