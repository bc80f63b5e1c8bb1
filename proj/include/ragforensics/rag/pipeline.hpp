#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragforensics/kb/knowledge_database.hpp"
#include "ragforensics/llm/chat_model.hpp"

namespace ragforensics::llm {
class Gateway;
}

namespace ragforensics::rag {

/// A query with its ground-truth answer and the answer an attacker wants.
struct QueryRecord {
  std::string query;
  std::string correct_answer;
  std::string target_answer;

  bool operator==(const QueryRecord&) const = default;
};

/// A user report: the query and the output they flagged as wrong.
struct FeedbackEvent {
  std::string event_id;
  std::string query;
  std::string incorrect_output;
  std::vector<std::string> retrieved_ids;

  bool operator==(const FeedbackEvent&) const = default;
};

struct RagOutput {
  std::string answer;
  kb::RetrievalResult retrieved;
  std::vector<std::string> contexts;
  llm::PromptVariant variant = llm::PromptVariant::Standard;
};

/// Case-insensitive, whitespace-normalized containment of `reference` in
/// `output`. A blank reference never matches.
bool matches(std::string_view output, std::string_view reference);

class Matcher {
 public:
  virtual ~Matcher() = default;
  virtual bool matches(std::string_view output, std::string_view reference) const = 0;
};

class SubstringMatcher final : public Matcher {
 public:
  bool matches(std::string_view output, std::string_view reference) const override {
    return rag::matches(output, reference);
  }
};

/// Retrieve-then-generate. Contexts are the retrieved documents in rank order
/// (proxies already substituted). An empty retrieval answers "I don't know"
/// without calling the model.
class RagPipeline {
 public:
  RagPipeline(const llm::Gateway& llm, std::size_t k);

  RagOutput answer(const kb::KnowledgeDatabase& db, std::string_view query,
                   llm::PromptVariant variant = llm::PromptVariant::Standard,
                   const kb::IdSet& exclude = {}, std::optional<std::size_t> k = {}) const;

  std::size_t k() const noexcept { return k_; }
  const llm::Gateway& llm() const noexcept { return llm_; }

 private:
  const llm::Gateway& llm_;
  std::size_t k_;
};

/// Append-only JSONL feedback log:
///   {"event_id": str, "query": str, "incorrect_output": str, "retrieved_ids": [str]}
/// Appends hold an exclusive file lock. Event ids are "evt-<n>" with n one past
/// the number of events already in the file.
class FeedbackLog {
 public:
  explicit FeedbackLog(std::filesystem::path path);

  FeedbackEvent record(std::string_view query, const RagOutput& output);
  std::vector<FeedbackEvent> load() const;

  static std::vector<FeedbackEvent> read(const std::filesystem::path& path);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

}  // namespace ragforensics::rag
