#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ragforensics/attack/forge.hpp"
#include "ragforensics/kb/knowledge_database.hpp"
#include "ragforensics/llm/chat_model.hpp"
#include "ragforensics/rag/pipeline.hpp"

// Deterministic stand-ins for the RAG model and the judge. They read the
// request intent rather than prompt text and know the ground truth through an
// answer key, so experiments can run offline and reproducibly.
namespace ragforensics::sim {

/// Ground-truth answers per query, looked up by normalized query text.
class AnswerKey {
 public:
  AnswerKey() = default;
  explicit AnswerKey(std::span<const rag::QueryRecord> records);

  void add(const rag::QueryRecord& rec);
  const rag::QueryRecord* find(std::string_view query) const;

 private:
  std::map<std::string, rag::QueryRecord, std::less<>> by_query_;
};

enum class Vote { None, Correct, Target };

/// A context supports the attacker when it mentions the target answer,
/// otherwise the correct answer when it mentions that.
Vote vote_of(std::string_view context, const rag::QueryRecord& rec);

/// The RAG model double.
///  - Standard / ExpGen: majority vote of the contexts; ties go to the answer of
///    the earliest voting context; no votes gives "I don't know". ExpGen adds a
///    "USED: [...]" line naming the contexts that voted for the winner.
///  - BTE: the smallest-index trigger-wrapped context that votes decides; with
///    no wrapped context it falls back to the majority rule.
///  - Poison payloads, benign passages, keyword lists, clusterings (by vote) and
///    keyword composition are template-based.
class ConsensusAnswerModel final : public llm::ChatModel {
 public:
  explicit ConsensusAnswerModel(AnswerKey key, bool trigger_aware = true)
      : key_(std::move(key)), trigger_aware_(trigger_aware) {}

  std::string complete(const llm::ChatRequest& req) const override;

 private:
  AnswerKey key_;
  bool trigger_aware_;
};

/// Answers a fixed wrong answer for the listed queries whatever the context
/// (the model's own error); everything else goes to `inner`.
class ParametricErrorModel final : public llm::ChatModel {
 public:
  ParametricErrorModel(std::shared_ptr<const llm::ChatModel> inner,
                       std::map<std::string, std::string> wrong_answers);
  std::string complete(const llm::ChatRequest& req) const override;

 private:
  std::shared_ptr<const llm::ChatModel> inner_;
  std::map<std::string, std::string, std::less<>> wrong_answers_;  // normalized query -> answer
};

/// Judge that knows which texts were injected for which query.
class OracleJudgeModel final : public llm::ChatModel {
 public:
  OracleJudgeModel() = default;
  /// Collects the current content of every ledger id still in `db`.
  OracleJudgeModel(const kb::KnowledgeDatabase& db, const attack::PoisonLedger& ledger);

  void add(std::string_view query, std::string_view poisoned_content);
  std::string complete(const llm::ChatRequest& req) const override;

 private:
  std::set<std::pair<std::string, std::string>, std::less<>> poisoned_;  // normalized
};

/// Wraps a judge and flips its label with probability `flip_rate`. The flip is
/// a deterministic function of (seed, prompt), so repeated prompts agree.
class NoisyJudgeModel final : public llm::ChatModel {
 public:
  NoisyJudgeModel(std::shared_ptr<const llm::ChatModel> inner, double flip_rate,
                  std::uint64_t seed);
  std::string complete(const llm::ChatRequest& req) const override;
  bool flips(const llm::ChatRequest& req) const;

 private:
  std::shared_ptr<const llm::ChatModel> inner_;
  double flip_rate_;
  std::uint64_t seed_;
};

/// A judge that can be fooled: flags a context that mentions the response
/// unless the context also mentions the query's correct answer.
class NaiveContainmentJudgeModel final : public llm::ChatModel {
 public:
  explicit NaiveContainmentJudgeModel(AnswerKey key) : key_(std::move(key)) {}
  std::string complete(const llm::ChatRequest& req) const override;

 private:
  AnswerKey key_;
};

/// Returns the same text for every request.
class FixedResponseModel final : public llm::ChatModel {
 public:
  explicit FixedResponseModel(std::string response) : response_(std::move(response)) {}
  std::string complete(const llm::ChatRequest&) const override { return response_; }

 private:
  std::string response_;
};

}  // namespace ragforensics::sim
