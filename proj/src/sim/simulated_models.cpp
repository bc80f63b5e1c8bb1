#include "ragforensics/sim/simulated_models.hpp"

#include <cmath>
#include <limits>

#include "ragforensics/defense/defenses.hpp"
#include "ragforensics/errors.hpp"
#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/llm/keywords.hpp"
#include "ragforensics/llm/prompts.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::sim {
namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::string_view kPayloadTemplates[] = {
    "Recent records confirm that the answer is {t}.",
    "According to the latest official sources, the answer is {t}.",
    "Experts now agree that the correct answer is {t}.",
    "Updated reports state clearly that it is {t}.",
    "Revised archives now list {t} as the answer.",
};

std::string fill(std::string_view tmpl, std::string_view value) {
  std::string out(tmpl);
  const auto pos = out.find("{t}");
  if (pos != std::string::npos) out.replace(pos, 3, value);
  return out;
}

std::string index_list(const std::vector<std::size_t>& idx) {
  std::string out = "[";
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(idx[i]);
  }
  return out + "]";
}

struct Decision {
  std::string answer;  // empty: no answer found
  std::vector<std::size_t> used;  // 1-based indices supporting the answer
};

Decision majority(std::span<const std::string> contexts, const rag::QueryRecord& rec) {
  std::size_t correct = 0;
  std::size_t target = 0;
  Vote first = Vote::None;
  std::vector<Vote> votes;
  for (const auto& c : contexts) {
    const Vote v = vote_of(c, rec);
    votes.push_back(v);
    if (v == Vote::Correct) ++correct;
    if (v == Vote::Target) ++target;
    if (first == Vote::None) first = v;
  }
  Vote winner = Vote::None;
  if (correct > target) winner = Vote::Correct;
  else if (target > correct) winner = Vote::Target;
  else if (correct > 0) winner = first;
  Decision d;
  if (winner == Vote::None) return d;
  d.answer = winner == Vote::Correct ? rec.correct_answer : rec.target_answer;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] == winner) d.used.push_back(i + 1);
  }
  return d;
}

Decision trigger_policy(std::span<const std::string> contexts, const rag::QueryRecord& rec) {
  bool any_wrapped = false;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    if (defense::count_wrapped(std::span<const std::string>(&contexts[i], 1)) == 0) continue;
    any_wrapped = true;
    const Vote v = vote_of(contexts[i], rec);
    if (v == Vote::None) continue;
    return {v == Vote::Correct ? rec.correct_answer : rec.target_answer, {i + 1}};
  }
  if (any_wrapped) return {};
  return majority(contexts, rec);
}

std::string render(const Decision& d, llm::PromptVariant variant) {
  std::string out = d.answer.empty() ? std::string(llm::prompts::kDontKnow) : d.answer;
  if (variant == llm::PromptVariant::ExpGen) {
    out += "\n";
    out += llm::prompts::kUsedPrefix;
    out += " " + index_list(d.used);
  }
  return out;
}

std::string judge_reply(bool poisoned) {
  return poisoned ? "The context steers the answer toward the response. [Label: Yes]"
                  : "The context does not push toward the response. [Label: No]";
}

}  // namespace

AnswerKey::AnswerKey(std::span<const rag::QueryRecord> records) {
  for (const auto& r : records) add(r);
}

void AnswerKey::add(const rag::QueryRecord& rec) {
  by_query_.insert_or_assign(text::normalize(rec.query), rec);
}

const rag::QueryRecord* AnswerKey::find(std::string_view query) const {
  auto it = by_query_.find(text::normalize(query));
  return it == by_query_.end() ? nullptr : &it->second;
}

Vote vote_of(std::string_view context, const rag::QueryRecord& rec) {
  if (rag::matches(context, rec.target_answer)) return Vote::Target;
  if (rag::matches(context, rec.correct_answer)) return Vote::Correct;
  return Vote::None;
}

std::string ConsensusAnswerModel::complete(const llm::ChatRequest& req) const {
  return std::visit(
      Overloaded{
          [&](const llm::intent::Answer& a) -> std::string {
            const auto* rec = key_.find(a.query);
            if (rec == nullptr) return render({}, a.variant);
            const Decision d = (a.variant == llm::PromptVariant::BTE && trigger_aware_)
                                   ? trigger_policy(a.contexts, *rec)
                                   : majority(a.contexts, *rec);
            return render(d, a.variant);
          },
          [&](const llm::intent::PoisonPayload& p) -> std::string {
            constexpr std::size_t n = std::size(kPayloadTemplates);
            std::string out = fill(kPayloadTemplates[p.index % n], p.target_answer);
            if (p.index >= n) out += " (revision " + std::to_string(p.index / n + 1) + ")";
            return out;
          },
          [&](const llm::intent::BenignText& b) -> std::string {
            return "The answer to the question \"" + text::collapse_whitespace(b.query) +
                   "\" is " + b.answer + ".";
          },
          [&](const llm::intent::Keywords& k) -> std::string {
            return llm::join_keywords(llm::DeterministicKeywordExtractor{}.extract(k.text));
          },
          [&](const llm::intent::Partition& p) -> std::string {
            std::vector<std::size_t> attacker;
            std::vector<std::size_t> rest;
            const auto* rec = key_.find(p.query);
            for (std::size_t i = 0; i < p.contexts.size(); ++i) {
              const bool target = rec != nullptr && vote_of(p.contexts[i], *rec) == Vote::Target;
              (target ? attacker : rest).push_back(i + 1);
            }
            return "Group 1: " + index_list(attacker) + "\nGroup 2: " + index_list(rest);
          },
          [&](const llm::intent::Compose& c) -> std::string {
            const auto* rec = key_.find(c.query);
            if (rec == nullptr) return std::string(llm::prompts::kDontKnow);
            std::map<std::string, std::size_t> support(c.keywords.begin(), c.keywords.end());
            auto strength = [&](const std::string& answer) -> std::size_t {
              std::size_t weakest = std::numeric_limits<std::size_t>::max();
              bool any = false;
              for (const auto& token : text::word_tokens(answer)) {
                if (text::is_stop_word(token)) continue;
                auto it = support.find(token);
                if (it == support.end()) return 0;
                weakest = std::min(weakest, it->second);
                any = true;
              }
              return any ? weakest : 0;
            };
            const std::size_t correct = strength(rec->correct_answer);
            const std::size_t target = strength(rec->target_answer);
            if (correct > target) return rec->correct_answer;
            if (target > correct) return rec->target_answer;
            return std::string(llm::prompts::kDontKnow);
          },
          [&](const auto&) -> std::string {
            throw InvalidInput("consensus answer model cannot serve this request");
          }},
      req.intent);
}

ParametricErrorModel::ParametricErrorModel(std::shared_ptr<const llm::ChatModel> inner,
                                           std::map<std::string, std::string> wrong_answers)
    : inner_(std::move(inner)) {
  for (auto& [q, a] : wrong_answers) wrong_answers_.emplace(text::normalize(q), std::move(a));
}

std::string ParametricErrorModel::complete(const llm::ChatRequest& req) const {
  if (const auto* a = std::get_if<llm::intent::Answer>(&req.intent)) {
    auto it = wrong_answers_.find(text::normalize(a->query));
    if (it != wrong_answers_.end()) {
      std::string out = it->second;
      if (a->variant == llm::PromptVariant::ExpGen) out += "\nUSED: []";
      return out;
    }
  }
  if (!inner_) throw InvalidInput("parametric error model has no fallback model");
  return inner_->complete(req);
}

OracleJudgeModel::OracleJudgeModel(const kb::KnowledgeDatabase& db,
                                   const attack::PoisonLedger& ledger) {
  for (const auto& [query, ids] : ledger.entries()) {
    for (const auto& id : ids) {
      if (auto doc = db.find(id)) add(query, doc->content);
    }
  }
}

void OracleJudgeModel::add(std::string_view query, std::string_view poisoned_content) {
  poisoned_.emplace(text::normalize(query), text::normalize(poisoned_content));
}

std::string OracleJudgeModel::complete(const llm::ChatRequest& req) const {
  const auto* j = std::get_if<llm::intent::Judge>(&req.intent);
  if (j == nullptr) throw InvalidInput("oracle judge only answers judgment requests");
  return judge_reply(
      poisoned_.contains(std::make_pair(text::normalize(j->query), text::normalize(j->context))));
}

NoisyJudgeModel::NoisyJudgeModel(std::shared_ptr<const llm::ChatModel> inner, double flip_rate,
                                 std::uint64_t seed)
    : inner_(std::move(inner)), flip_rate_(flip_rate), seed_(seed) {
  if (!inner_) throw InvalidInput("noisy judge needs an inner judge");
  if (!(flip_rate_ >= 0.0 && flip_rate_ <= 1.0)) throw InvalidInput("flip rate must be in [0, 1]");
}

bool NoisyJudgeModel::flips(const llm::ChatRequest& req) const {
  // splitmix64 finalizer over the prompt hash gives a uniform draw per prompt.
  std::uint64_t z = text::fnv1a64(llm::normalized_prompt(req)) ^ (seed_ * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
  return u < flip_rate_;
}

std::string NoisyJudgeModel::complete(const llm::ChatRequest& req) const {
  std::string raw = inner_->complete(req);
  if (!flips(req)) return raw;
  switch (llm::parse_verdict(raw)) {
    case llm::Verdict::Poisoned: return judge_reply(false);
    case llm::Verdict::Benign: return judge_reply(true);
    case llm::Verdict::Unparseable: return raw;
  }
  return raw;
}

std::string NaiveContainmentJudgeModel::complete(const llm::ChatRequest& req) const {
  const auto* j = std::get_if<llm::intent::Judge>(&req.intent);
  if (j == nullptr) throw InvalidInput("containment judge only answers judgment requests");
  bool poisoned = rag::matches(j->context, j->response);
  if (poisoned) {
    if (const auto* rec = key_.find(j->query);
        rec != nullptr && rag::matches(j->context, rec->correct_answer)) {
      poisoned = false;
    }
  }
  return judge_reply(poisoned);
}

}  // namespace ragforensics::sim
