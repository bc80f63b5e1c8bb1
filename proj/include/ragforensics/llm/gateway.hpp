#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragforensics/llm/chat_model.hpp"

namespace ragforensics::llm {

enum class Verdict { Poisoned, Benign, Unparseable };

std::string_view to_string(Verdict v);

struct Judgment {
  Verdict verdict = Verdict::Unparseable;
  std::string explanation;
  std::string raw;

  /// Unparseable judgments resolve to benign.
  bool poisoned() const noexcept { return verdict == Verdict::Poisoned; }
};

/// "[Label: Yes]" anywhere wins; otherwise "[Label: No]" means benign; anything
/// else is unparseable.
Verdict parse_verdict(std::string_view raw);
Judgment parse_judgment(std::string raw);

/// Splits an ExpGen reply into the answer text and the 1-based entry numbers
/// on its final "USED: [...]" line. nullopt when the line is absent or malformed.
struct ExplainedAnswer {
  std::string answer;
  std::optional<std::vector<std::size_t>> used;
};
ExplainedAnswer parse_explained_answer(std::string_view reply);

/// Parses "Group 1: [..]" / "Group 2: [..]" into two 1-based index lists.
/// nullopt unless the groups exactly partition 1..n.
std::optional<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> parse_partition(
    std::string_view reply, std::size_t n);

/// Parses a comma-separated keyword reply.
std::vector<std::string> parse_keyword_list(std::string_view reply);

struct GatewayOptions {
  int max_tokens = 512;
  /// Extra attempts for benign-text generation when validation rejects a reply.
  int benign_regenerations = 1;
  std::size_t benign_word_limit = 45;
  bool allow_context_free = false;
};

struct GatewayStats {
  std::size_t judge_requests = 0;
  std::size_t unparseable_retries = 0;
  std::size_t unparseable_fallbacks = 0;
};

/// Builds every prompt the toolkit sends and parses the replies. All model
/// traffic goes through one ChatModel; temperature is always 0.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<const ChatModel> model, GatewayOptions options = {});

  std::string complete(const ChatRequest& req) const;

  /// One judgment, retried once on an unparseable reply. A second unparseable
  /// reply is returned as-is (it resolves to benign) and logged.
  Judgment judge_poisoned(std::string_view query, std::string_view context,
                          std::string_view response) const;

  std::string generate_answer(std::string_view query, std::span<const std::string> contexts,
                              PromptVariant variant) const;

  /// Declarative passage for (query, answer). Replies starting with Yes/No or
  /// longer than the word limit are regenerated once, then BenignGenError.
  std::string generate_benign_text(std::string_view query, std::string_view correct_answer) const;

  std::string generate_poison_payload(std::string_view query, std::string_view target_answer,
                                      std::size_t index) const;

  std::vector<std::string> extract_keywords(std::string_view text) const;

  std::string partition_contexts(std::string_view query,
                                 std::span<const std::string> contexts) const;

  std::string compose_from_keywords(
      std::string_view query, std::span<const std::pair<std::string, std::size_t>> keywords) const;

  GatewayStats stats() const;
  const GatewayOptions& options() const noexcept { return options_; }

 private:
  ChatRequest make_request(std::string prompt, Intent intent) const;

  std::shared_ptr<const ChatModel> model_;
  GatewayOptions options_;
  mutable std::atomic<std::size_t> judge_requests_{0};
  mutable std::atomic<std::size_t> unparseable_retries_{0};
  mutable std::atomic<std::size_t> unparseable_fallbacks_{0};
};

/// True when a benign-text reply passes the generation validator.
bool acceptable_benign_text(std::string_view reply, std::size_t word_limit);

}  // namespace ragforensics::llm
