#include "ragforensics/llm/gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>

#include "ragforensics/errors.hpp"
#include "ragforensics/llm/prompts.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::llm {
namespace {

void require_text(std::string_view value, const char* name) {
  if (text::is_blank(value)) throw InvalidInput(std::string(name) + " must be non-empty");
}

// Reads "[1, 2, 3]" (brackets optional). Empty list is allowed.
std::optional<std::vector<std::size_t>> parse_index_list(std::string_view s) {
  std::string body = text::collapse_whitespace(s);
  if (!body.empty() && body.front() == '[') body.erase(body.begin());
  if (!body.empty() && body.back() == ']') body.pop_back();
  std::vector<std::size_t> out;
  if (text::is_blank(body)) return out;
  std::size_t start = 0;
  while (start <= body.size()) {
    const std::size_t comma = body.find(',', start);
    std::string item = text::collapse_whitespace(
        std::string_view(body).substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start));
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) return std::nullopt;
    out.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t nl = s.find('\n', start);
    out.emplace_back(s.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                  : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Poisoned: return "poisoned";
    case Verdict::Benign: return "benign";
    case Verdict::Unparseable: return "unparseable";
  }
  return "unparseable";
}

Verdict parse_verdict(std::string_view raw) {
  if (raw.find(prompts::kLabelYes) != std::string_view::npos) return Verdict::Poisoned;
  if (raw.find(prompts::kLabelNo) != std::string_view::npos) return Verdict::Benign;
  return Verdict::Unparseable;
}

Judgment parse_judgment(std::string raw) {
  Judgment j;
  j.verdict = parse_verdict(raw);
  std::size_t cut = raw.size();
  for (auto marker : {prompts::kLabelYes, prompts::kLabelNo}) {
    cut = std::min(cut, raw.find(marker));
  }
  j.explanation = text::collapse_whitespace(std::string_view(raw).substr(0, cut));
  j.raw = std::move(raw);
  return j;
}

ExplainedAnswer parse_explained_answer(std::string_view reply) {
  auto lines = lines_of(reply);
  while (!lines.empty() && text::is_blank(lines.back())) lines.pop_back();
  ExplainedAnswer out;
  if (!lines.empty()) {
    const std::string last = text::collapse_whitespace(lines.back());
    if (last.rfind(prompts::kUsedPrefix, 0) == 0) {
      out.used = parse_index_list(std::string_view(last).substr(prompts::kUsedPrefix.size()));
      lines.pop_back();
    }
  }
  out.answer = text::collapse_whitespace(text::join(lines, "\n"));
  return out;
}

std::optional<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> parse_partition(
    std::string_view reply, std::size_t n) {
  std::optional<std::vector<std::size_t>> groups[2];
  for (const auto& raw_line : lines_of(reply)) {
    const std::string line = text::to_lower(text::collapse_whitespace(raw_line));
    for (int g = 0; g < 2; ++g) {
      const std::string prefix = "group " + std::to_string(g + 1) + ":";
      if (line.rfind(prefix, 0) == 0) {
        groups[g] = parse_index_list(std::string_view(line).substr(prefix.size()));
        if (!groups[g]) return std::nullopt;
      }
    }
  }
  if (!groups[0] || !groups[1]) return std::nullopt;
  std::vector<int> seen(n + 1, 0);
  for (const auto& g : groups) {
    for (std::size_t idx : *g) {
      if (idx == 0 || idx > n || seen[idx]++ > 0) return std::nullopt;
    }
  }
  if (std::count(seen.begin() + 1, seen.end(), 1) != static_cast<long>(n)) return std::nullopt;
  return std::make_pair(std::move(*groups[0]), std::move(*groups[1]));
}

std::vector<std::string> parse_keyword_list(std::string_view reply) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= reply.size()) {
    const std::size_t comma = reply.find_first_of(",\n", start);
    std::string item = text::normalize(
        reply.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                            : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool acceptable_benign_text(std::string_view reply, std::size_t word_limit) {
  if (text::is_blank(reply)) return false;
  const auto tokens = text::word_tokens(reply);
  if (!tokens.empty() && (tokens.front() == "yes" || tokens.front() == "no")) return false;
  return text::word_count(reply) <= word_limit;
}

Gateway::Gateway(std::shared_ptr<const ChatModel> model, GatewayOptions options)
    : model_(std::move(model)), options_(options) {
  if (!model_) throw InvalidInput("gateway requires a chat model");
}

std::string Gateway::complete(const ChatRequest& req) const {
  validate(req);
  return model_->complete(req);
}

ChatRequest Gateway::make_request(std::string prompt, Intent intent) const {
  ChatRequest req;
  req.messages.push_back({Role::User, std::move(prompt)});
  req.temperature = 0.0;
  req.max_tokens = options_.max_tokens;
  req.intent = std::move(intent);
  return req;
}

Judgment Gateway::judge_poisoned(std::string_view query, std::string_view context,
                                 std::string_view response) const {
  require_text(query, "query");
  require_text(context, "context");
  require_text(response, "response");
  const ChatRequest req =
      make_request(prompts::render_judge(query, context, response),
                   intent::Judge{std::string(query), std::string(context), std::string(response)});
  ++judge_requests_;
  Judgment j = parse_judgment(complete(req));
  if (j.verdict != Verdict::Unparseable) return j;
  ++unparseable_retries_;
  j = parse_judgment(complete(req));
  if (j.verdict == Verdict::Unparseable) {
    ++unparseable_fallbacks_;
    spdlog::warn("judge reply unparseable twice; treating context as benign (reply: {:.80})",
                 j.raw);
  }
  return j;
}

std::string Gateway::generate_answer(std::string_view query,
                                     std::span<const std::string> contexts,
                                     PromptVariant variant) const {
  require_text(query, "query");
  if (contexts.empty() && !options_.allow_context_free) {
    throw InvalidInput("answer generation needs at least one context");
  }
  return complete(make_request(
      prompts::render_answer(query, contexts, variant),
      intent::Answer{std::string(query), {contexts.begin(), contexts.end()}, variant}));
}

std::string Gateway::generate_benign_text(std::string_view query,
                                          std::string_view correct_answer) const {
  require_text(query, "query");
  require_text(correct_answer, "correct answer");
  const ChatRequest req =
      make_request(prompts::render_benign_text(query, correct_answer),
                   intent::BenignText{std::string(query), std::string(correct_answer)});
  for (int attempt = 0; attempt <= options_.benign_regenerations; ++attempt) {
    std::string reply = text::collapse_whitespace(complete(req));
    if (acceptable_benign_text(reply, options_.benign_word_limit)) return reply;
    spdlog::warn("benign text rejected by validator (attempt {}): {:.80}", attempt + 1, reply);
  }
  throw BenignGenError("benign text generation failed validation for query: " +
                       std::string(query));
}

std::string Gateway::generate_poison_payload(std::string_view query,
                                             std::string_view target_answer,
                                             std::size_t index) const {
  require_text(query, "query");
  require_text(target_answer, "target answer");
  return text::collapse_whitespace(
      complete(make_request(prompts::render_poison_payload(query, target_answer, index),
                            intent::PoisonPayload{std::string(query), std::string(target_answer),
                                                  index})));
}

std::vector<std::string> Gateway::extract_keywords(std::string_view text) const {
  require_text(text, "text");
  return parse_keyword_list(complete(
      make_request(prompts::render_keywords(text), intent::Keywords{std::string(text)})));
}

std::string Gateway::partition_contexts(std::string_view query,
                                        std::span<const std::string> contexts) const {
  return complete(
      make_request(prompts::render_partition(query, contexts),
                   intent::Partition{std::string(query), {contexts.begin(), contexts.end()}}));
}

std::string Gateway::compose_from_keywords(
    std::string_view query, std::span<const std::pair<std::string, std::size_t>> keywords) const {
  return complete(
      make_request(prompts::render_compose(query, keywords),
                   intent::Compose{std::string(query), {keywords.begin(), keywords.end()}}));
}

GatewayStats Gateway::stats() const {
  return {judge_requests_.load(), unparseable_retries_.load(), unparseable_fallbacks_.load()};
}

}  // namespace ragforensics::llm
