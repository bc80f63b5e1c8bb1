#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragforensics/llm/chat_model.hpp"

// Prompt templates. Each render_* returns the full user-message text.
namespace ragforensics::llm::prompts {

inline constexpr std::string_view kLabelYes = "[Label: Yes]";
inline constexpr std::string_view kLabelNo = "[Label: No]";
inline constexpr std::string_view kTriggerOpen = "[LATEST]";
inline constexpr std::string_view kTriggerClose = "[/LATEST]";
inline constexpr std::string_view kDontKnow = "I don't know";
inline constexpr std::string_view kUsedPrefix = "USED:";

/// Numbered context block: "[1] first\n[2] second".
std::string format_contexts(std::span<const std::string> contexts);

/// Asks whether `context` pushes the model toward `response` for `query`.
std::string render_judge(std::string_view query, std::string_view context,
                         std::string_view response);

std::string render_answer(std::string_view query, std::span<const std::string> contexts,
                          PromptVariant variant);

std::string render_benign_text(std::string_view query, std::string_view answer);

std::string render_poison_payload(std::string_view query, std::string_view target_answer,
                                  std::size_t index);

std::string render_keywords(std::string_view text);

std::string render_partition(std::string_view query, std::span<const std::string> contexts);

std::string render_compose(std::string_view query,
                           std::span<const std::pair<std::string, std::size_t>> keywords);

}  // namespace ragforensics::llm::prompts
