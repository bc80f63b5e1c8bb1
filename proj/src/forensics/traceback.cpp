#include "ragforensics/forensics/traceback.hpp"

#include <spdlog/spdlog.h>

#include <future>

#include "ragforensics/errors.hpp"

namespace ragforensics::forensics {
namespace {

struct Outcome {
  llm::Judgment judgment;
  std::optional<std::string> failure;
};

Outcome judge_document(const llm::Gateway& judge, std::string_view query,
                       const kb::Document& doc, std::string_view incorrect_output) {
  try {
    return {judge.judge_poisoned(query, doc.content, incorrect_output), std::nullopt};
  } catch (const std::exception& e) {
    llm::Judgment fallback;
    fallback.verdict = llm::Verdict::Unparseable;
    fallback.explanation = std::string("judge unavailable: ") + e.what();
    return {std::move(fallback), std::string(e.what())};
  }
}

CandidateClass file_outcome(TracebackState& state, const std::string& id, Outcome outcome) {
  if (outcome.failure) {
    spdlog::warn("judge failed for {}: {}; filing as benign", id, *outcome.failure);
    state.audit_notes.push_back("judge failure on " + id + ": " + *outcome.failure);
  } else if (outcome.judgment.verdict == llm::Verdict::Unparseable) {
    state.audit_notes.push_back("unparseable judgment on " + id + ", filed as benign");
  }
  const bool poisoned = outcome.judgment.poisoned();
  state.judgments.emplace(id, std::move(outcome.judgment));
  if (poisoned) {
    state.flagged_poisoned.push_back(id);
    return CandidateClass::Poisoned;
  }
  state.cleared_benign.push_back(id);
  return CandidateClass::Benign;
}

}  // namespace

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::BenignQuota: return "benign_quota";
    case TerminationReason::CorpusExhausted: return "corpus_exhausted";
    case TerminationReason::IterationCap: return "iteration_cap";
  }
  return "benign_quota";
}

CandidateClass classify_candidate(TracebackState& state, const llm::Gateway& judge,
                                  std::string_view query, const kb::Document& doc,
                                  std::string_view incorrect_output) {
  if (state.judged(doc.id)) {
    throw PreconditionError("document '" + doc.id + "' was already judged for this event");
  }
  return file_outcome(state, doc.id, judge_document(judge, query, doc, incorrect_output));
}

std::size_t default_iteration_cap(std::size_t corpus_size, std::size_t k) {
  (void)k;
  return corpus_size + 1;
}

TracebackResult traceback(const kb::KnowledgeDatabase& db, const llm::Gateway& judge,
                          const rag::FeedbackEvent& event, std::size_t k,
                          const TracebackOptions& options) {
  if (k == 0) throw InvalidInput("k must be at least 1");
  const std::size_t cap = options.iteration_cap.value_or(default_iteration_cap(db.size(), k));
  if (cap == 0) throw InvalidInput("iteration cap must be at least 1");

  TracebackResult result;
  result.event_id = event.event_id;
  TracebackState& state = result.state;
  const kb::Embedding query = db.embed(event.query);

  for (;;) {
    const auto retrieved = db.retrieve_top_k(query, k, state.flagged_set());
    TracebackRound round;
    round.retrieved = retrieved.ids();

    std::vector<kb::Document> fresh;
    for (const auto& id : round.retrieved) {
      if (state.judged(id)) continue;
      auto doc = db.find(id);
      if (!doc) throw InvalidInput("retrieved document '" + id + "' vanished during traceback");
      fresh.push_back(std::move(*doc));
    }

    if (options.judge_parallelism <= 1) {
      for (const auto& doc : fresh) {
        classify_candidate(state, judge, event.query, doc, event.incorrect_output);
        round.newly_judged.push_back(doc.id);
        ++result.judge_calls;
      }
    } else {
      // Judgments are issued in parallel batches but filed in retrieval order.
      for (std::size_t start = 0; start < fresh.size(); start += options.judge_parallelism) {
        const std::size_t end = std::min(fresh.size(), start + options.judge_parallelism);
        std::vector<std::future<Outcome>> pending;
        for (std::size_t i = start; i < end; ++i) {
          pending.push_back(std::async(std::launch::async, judge_document, std::cref(judge),
                                       std::string_view(event.query), std::cref(fresh[i]),
                                       std::string_view(event.incorrect_output)));
        }
        for (std::size_t i = start; i < end; ++i) {
          file_outcome(state, fresh[i].id, pending[i - start].get());
          round.newly_judged.push_back(fresh[i].id);
          ++result.judge_calls;
        }
      }
    }
    state.rounds.push_back(std::move(round));

    if (state.cleared_benign.size() >= k) {
      result.terminated_by = TerminationReason::BenignQuota;
      break;
    }
    if (retrieved.short_result) {
      result.terminated_by = TerminationReason::CorpusExhausted;
      result.diagnostic = "eligible corpus exhausted with " +
                          std::to_string(state.cleared_benign.size()) + " of " +
                          std::to_string(k) + " benign texts";
      break;
    }
    if (state.rounds.size() >= cap) {
      result.terminated_by = TerminationReason::IterationCap;
      result.diagnostic = "iteration cap " + std::to_string(cap) + " reached with " +
                          std::to_string(state.cleared_benign.size()) + " of " +
                          std::to_string(k) + " benign texts";
      spdlog::warn("traceback for {} stopped: {}", event.event_id, result.diagnostic);
      break;
    }
  }
  return result;
}

bool is_non_poisoned_feedback(const kb::KnowledgeDatabase& db, const rag::RagPipeline& rag,
                              const rag::FeedbackEvent& event, const TracebackResult& result,
                              const rag::Matcher& matcher) {
  if (result.event_id != event.event_id) {
    throw PreconditionError("traceback result " + result.event_id + " does not belong to event " +
                            event.event_id);
  }
  const auto rerun = rag.answer(db, event.query, llm::PromptVariant::Standard,
                                result.state.flagged_set());
  return matcher.matches(rerun.answer, event.incorrect_output);
}

kb::IdSet union_flagged(std::span<const TracebackResult> results) {
  kb::IdSet out;
  for (const auto& r : results) {
    out.insert(r.state.flagged_poisoned.begin(), r.state.flagged_poisoned.end());
  }
  return out;
}

nlohmann::json to_json(const TracebackResult& result) {
  return {{"event_id", result.event_id},
          {"tracer", result.tracer},
          {"flagged", result.state.flagged_poisoned},
          {"cleared", result.state.cleared_benign},
          {"iterations", result.iterations()},
          {"judge_calls", result.judge_calls},
          {"terminated_by", to_string(result.terminated_by)},
          {"diagnostic", result.diagnostic}};
}

std::vector<nlohmann::json> audit_records(const TracebackResult& result) {
  std::vector<nlohmann::json> out;
  for (std::size_t round = 0; round < result.state.rounds.size(); ++round) {
    for (const auto& id : result.state.rounds[round].newly_judged) {
      const auto& j = result.state.judgments.at(id);
      out.push_back({{"event_id", result.event_id},
                     {"tracer", result.tracer},
                     {"round", round + 1},
                     {"document_id", id},
                     {"verdict", to_string(j.verdict)},
                     {"explanation", j.explanation},
                     {"raw", j.raw}});
    }
  }
  return out;
}

}  // namespace ragforensics::forensics
