#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>

#include "ragforensics/baselines/tracers.hpp"
#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/llm/keywords.hpp"
#include "ragforensics/rag/pipeline.hpp"

namespace ragforensics::defense {

/// Removes the union of flagged ids from the database; returns the count removed.
std::size_t ptr(kb::KnowledgeDatabase& db, std::span<const forensics::TracebackResult> results);

/// "[LATEST] <text> [/LATEST]"
std::string wrap_with_trigger(std::string_view benign_text);

/// Number of contexts carrying the trigger pair.
std::size_t count_wrapped(std::span<const std::string> contexts);

struct BenignEnhancement {
  std::string query;
  std::string correct_answer;
  std::string benign_text;
  std::string wrapped_text;
  std::string proxy_doc_id;
  std::string benign_doc_id;
};

/// Installed enhancements keyed by query; re-installing a query replaces it.
class EnhancementRegistry {
 public:
  void put(BenignEnhancement e);
  const std::map<std::string, BenignEnhancement>& entries() const noexcept { return entries_; }
  void write_jsonl(std::ostream& out) const;

 private:
  std::map<std::string, BenignEnhancement> entries_;
};

/// Generates a benign passage for the correct answer, stores it wrapped in the
/// trigger, and stores the raw query as a proxy that retrieves it. Ids derive
/// from the query, so a second install for the same query replaces the pair.
BenignEnhancement bte_install(kb::KnowledgeDatabase& db, const llm::Gateway& generator,
                              const rag::QueryRecord& rec,
                              EnhancementRegistry* registry = nullptr);

/// Answer with the trigger-aware system prompt.
rag::RagOutput bte_answer(const kb::KnowledgeDatabase& db, const rag::RagPipeline& rag,
                          std::string_view query, std::size_t k);

/// Knowledge expansion: a plain answer over the top-x texts.
rag::RagOutput ke_answer(const kb::KnowledgeDatabase& db, const rag::RagPipeline& rag,
                         std::string_view query, std::size_t x);

/// Keyword isolate-then-aggregate: answer from each text alone, count each
/// answer's keywords once, keep keywords supported by at least `mu` answers and
/// compose the final answer from them.
rag::RagOutput robustrag_answer(const kb::KnowledgeDatabase& db, const llm::Gateway& llm,
                                const llm::KeywordExtractor& extractor, std::string_view query,
                                std::size_t k, std::size_t mu = 2);

/// Scores every stored text and removes those above the calibrated threshold.
std::size_t ppl_removal_defense(kb::KnowledgeDatabase& db, const llm::PerplexityScorer& scorer,
                                const baselines::PplCalibration& cal, baselines::PplMode mode);

}  // namespace ragforensics::defense
