#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragforensics/kb/knowledge_database.hpp"
#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/rag/pipeline.hpp"

namespace ragforensics::forensics {

enum class TerminationReason { BenignQuota, CorpusExhausted, IterationCap };

std::string_view to_string(TerminationReason reason);

struct TracebackRound {
  std::vector<std::string> retrieved;
  std::vector<std::string> newly_judged;
};

/// Per-event traceback state: the flagged (poisoned) and cleared (benign) sets
/// in the order they were decided, the cached judgment of every examined text,
/// and one record per retrieval round.
struct TracebackState {
  std::vector<std::string> flagged_poisoned;
  std::vector<std::string> cleared_benign;
  std::map<std::string, llm::Judgment> judgments;
  std::vector<TracebackRound> rounds;
  std::vector<std::string> audit_notes;

  bool judged(const std::string& id) const { return judgments.contains(id); }
  kb::IdSet flagged_set() const { return {flagged_poisoned.begin(), flagged_poisoned.end()}; }
  kb::IdSet cleared_set() const { return {cleared_benign.begin(), cleared_benign.end()}; }
};

/// Shared result schema for RAGForensics and every baseline tracer.
struct TracebackResult {
  std::string event_id;
  std::string tracer = "ragforensics";
  TracebackState state;
  TerminationReason terminated_by = TerminationReason::BenignQuota;
  std::size_t judge_calls = 0;
  std::string diagnostic;

  std::size_t iterations() const noexcept { return state.rounds.size(); }
};

enum class CandidateClass { Poisoned, Benign };

/// Judges one not-yet-judged document and files it into the state. A gateway
/// failure files the document as benign with an unparseable judgment and an
/// audit note. Re-judging an id throws PreconditionError.
CandidateClass classify_candidate(TracebackState& state, const llm::Gateway& judge,
                                  std::string_view query, const kb::Document& doc,
                                  std::string_view incorrect_output);

/// Every round that does not terminate flags at least one new text, so a
/// consistent judge needs at most |D| + 1 rounds. The default cap is that
/// bound; ceil(|D| / k) + 1 can be undercut by a judge that clears only k - 1
/// texts and then flags one text per round.
std::size_t default_iteration_cap(std::size_t corpus_size, std::size_t k);

struct TracebackOptions {
  /// Maximum retrieval rounds; default default_iteration_cap(|D|, k).
  std::optional<std::size_t> iteration_cap;
  /// Judge calls issued concurrently within one round (1 = sequential).
  std::size_t judge_parallelism = 1;
};

/// Iterative traceback for one feedback event. Each round retrieves the top-k
/// for the query with every flagged text excluded and judges the texts not seen
/// before. Stops once k texts are cleared, when the corpus runs out, or at the
/// iteration cap. The database is only read.
TracebackResult traceback(const kb::KnowledgeDatabase& db, const llm::Gateway& judge,
                          const rag::FeedbackEvent& event, std::size_t k,
                          const TracebackOptions& options = {});

/// Re-answers the event's query with the flagged texts excluded; true when the
/// answer still matches the reported output, i.e. the error did not come from
/// the database.
bool is_non_poisoned_feedback(const kb::KnowledgeDatabase& db, const rag::RagPipeline& rag,
                              const rag::FeedbackEvent& event, const TracebackResult& result,
                              const rag::Matcher& matcher = rag::SubstringMatcher{});

/// Union of flagged ids over independent per-event runs.
kb::IdSet union_flagged(std::span<const TracebackResult> results);

/// {event_id, tracer, flagged, cleared, iterations, judge_calls, terminated_by, diagnostic}
nlohmann::json to_json(const TracebackResult& result);

/// One audit record per judged id.
std::vector<nlohmann::json> audit_records(const TracebackResult& result);

}  // namespace ragforensics::forensics
