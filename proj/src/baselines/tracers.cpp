#include "ragforensics/baselines/tracers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ragforensics/errors.hpp"
#include "ragforensics/llm/prompts.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::baselines {
namespace {

struct Candidates {
  std::vector<kb::Document> docs;
  std::vector<std::string> contents;
};

Candidates first_top_k(const kb::KnowledgeDatabase& db, const rag::FeedbackEvent& event,
                       std::size_t k) {
  Candidates out;
  const auto retrieved = db.retrieve_top_k(event.query, k);
  for (const auto& id : retrieved.ids()) {
    auto doc = db.find(id);
    if (!doc) throw InvalidInput("retrieved document '" + id + "' vanished");
    out.contents.push_back(doc->content);
    out.docs.push_back(std::move(*doc));
  }
  return out;
}

forensics::TracebackResult start(const rag::FeedbackEvent& event, std::string tracer,
                                 const Candidates& c) {
  forensics::TracebackResult r;
  r.event_id = event.event_id;
  r.tracer = std::move(tracer);
  forensics::TracebackRound round;
  for (const auto& d : c.docs) round.retrieved.push_back(d.id);
  r.state.rounds.push_back(std::move(round));
  return r;
}

void decide(forensics::TracebackResult& r, const std::string& id, bool poisoned,
            std::string explanation) {
  llm::Judgment j;
  j.verdict = poisoned ? llm::Verdict::Poisoned : llm::Verdict::Benign;
  j.explanation = std::move(explanation);
  r.state.judgments.emplace(id, std::move(j));
  (poisoned ? r.state.flagged_poisoned : r.state.cleared_benign).push_back(id);
  r.state.rounds.front().newly_judged.push_back(id);
}

std::string format_indices(const std::vector<std::size_t>& idx) {
  std::string out = "[";
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(idx[i]);
  }
  return out + "]";
}

}  // namespace

PplCalibration calibration_from_scores(std::vector<double> scores) {
  if (scores.empty()) throw InsufficientSample("perplexity calibration needs at least one score");
  std::sort(scores.begin(), scores.end());
  PplCalibration cal;
  cal.sample_size = scores.size();
  const double max = scores.back();
  cal.threshold_100 = max + 1e-9 * std::abs(max);
  if (cal.threshold_100 <= max) cal.threshold_100 = std::nextafter(max, INFINITY);
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(scores.size())));
  cal.threshold_90 = scores[std::max<std::size_t>(rank, 1) - 1];
  cal.scores = std::move(scores);
  return cal;
}

PplCalibration calibrate_ppl(const kb::KnowledgeDatabase& db, std::size_t sample_size,
                             std::uint64_t seed, llm::BigramPerplexityScorer& scorer) {
  if (sample_size == 0) throw InsufficientSample("sample size must be positive");
  const auto docs = db.documents();
  if (docs.size() < sample_size) {
    throw InsufficientSample("corpus has " + std::to_string(docs.size()) +
                             " documents, calibration needs " + std::to_string(sample_size));
  }
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates; std::shuffle's exact draws vary by library.
  for (std::size_t i = 0; i < sample_size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
    std::swap(order[i], order[j]);
  }
  std::vector<std::string> sample;
  sample.reserve(sample_size);
  for (std::size_t i = 0; i < sample_size; ++i) sample.push_back(docs[order[i]].content);
  scorer.calibrate(sample);
  std::vector<double> scores;
  scores.reserve(sample.size());
  for (const auto& s : sample) scores.push_back(scorer.score(s).value);
  return calibration_from_scores(std::move(scores));
}

double threshold(const PplCalibration& cal, PplMode mode) {
  if (cal.sample_size == 0) throw NotCalibrated("perplexity thresholds are not calibrated");
  return mode == PplMode::P100 ? cal.threshold_100 : cal.threshold_90;
}

forensics::TracebackResult trace_ppl(const kb::KnowledgeDatabase& db,
                                     const rag::FeedbackEvent& event, std::size_t k,
                                     const llm::PerplexityScorer& scorer,
                                     const PplCalibration& cal, PplMode mode) {
  const double limit = threshold(cal, mode);
  const auto c = first_top_k(db, event, k);
  auto r = start(event, mode == PplMode::P100 ? "ppl100" : "ppl90", c);
  for (const auto& doc : c.docs) {
    const double ppl = scorer.score(doc.content).value;
    decide(r, doc.id, ppl > limit,
           "perplexity " + std::to_string(ppl) + " vs threshold " + std::to_string(limit));
  }
  return r;
}

forensics::TracebackResult trace_expgen(const kb::KnowledgeDatabase& db,
                                        const llm::Gateway& rag_llm,
                                        const rag::FeedbackEvent& event, std::size_t k) {
  const auto c = first_top_k(db, event, k);
  auto r = start(event, "expgen", c);
  if (c.docs.empty()) return r;
  const auto reply = llm::parse_explained_answer(
      rag_llm.generate_answer(event.query, c.contents, llm::PromptVariant::ExpGen));
  std::set<std::size_t> cited;
  const bool answer_matches = rag::matches(reply.answer, event.incorrect_output);
  if (!reply.used) {
    r.state.audit_notes.push_back("expgen reply has no parseable USED line; nothing flagged");
    spdlog::warn("expgen: unparseable USED line for {}", event.event_id);
  } else if (answer_matches) {
    for (std::size_t idx : *reply.used) {
      if (idx == 0 || idx > c.docs.size()) {
        r.state.audit_notes.push_back("expgen cited out-of-range entry " + std::to_string(idx));
        spdlog::warn("expgen: cited entry {} out of range for {}", idx, event.event_id);
        continue;
      }
      cited.insert(idx);
    }
  }
  for (std::size_t i = 0; i < c.docs.size(); ++i) {
    const bool flagged = cited.contains(i + 1);
    decide(r, c.docs[i].id, flagged,
           flagged ? "cited for the reported answer"
                   : (answer_matches ? "not cited" : "answer does not match the report"));
  }
  return r;
}

bool keyword_hit(const llm::KeywordSet& keywords, std::string_view output) {
  const std::string haystack = text::normalize(output);
  return std::any_of(keywords.begin(), keywords.end(), [&](const std::string& kw) {
    return haystack.find(text::to_lower(kw)) != std::string::npos;
  });
}

forensics::TracebackResult trace_rkm(const kb::KnowledgeDatabase& db,
                                     const llm::Gateway& rag_llm,
                                     const llm::KeywordExtractor& extractor,
                                     const rag::FeedbackEvent& event, std::size_t k) {
  const auto c = first_top_k(db, event, k);
  auto r = start(event, "rkm", c);
  for (std::size_t i = 0; i < c.docs.size(); ++i) {
    const std::string answer = rag_llm.generate_answer(
        event.query, std::span<const std::string>(&c.contents[i], 1), llm::PromptVariant::Standard);
    const auto keywords = extractor.extract(answer);
    decide(r, c.docs[i].id, keyword_hit(keywords, event.incorrect_output),
           "single-context answer: " + answer);
  }
  return r;
}

forensics::TracebackResult trace_tkm(const kb::KnowledgeDatabase& db,
                                     const llm::KeywordExtractor& extractor,
                                     const rag::FeedbackEvent& event, std::size_t k) {
  const auto c = first_top_k(db, event, k);
  auto r = start(event, "tkm", c);
  for (const auto& doc : c.docs) {
    decide(r, doc.id, keyword_hit(extractor.extract(doc.content), event.incorrect_output),
           "keywords taken from the text");
  }
  return r;
}

forensics::TracebackResult trace_poifor(const kb::KnowledgeDatabase& db,
                                        const llm::Gateway& rag_llm,
                                        const rag::FeedbackEvent& event, std::size_t k) {
  const auto c = first_top_k(db, event, k);
  auto r = start(event, "poifor", c);
  const std::size_t n = c.docs.size();
  if (n == 0) return r;

  auto groups = llm::parse_partition(rag_llm.partition_contexts(event.query, c.contents), n);
  if (!groups) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 2; i <= n; ++i) rest.push_back(i);
    groups.emplace(std::vector<std::size_t>{1}, std::move(rest));
    r.state.audit_notes.push_back("partition unparseable; fell back to rank 1 vs rest");
    spdlog::warn("poifor: unparseable partition for {}", event.event_id);
  }

  std::vector<bool> flagged(n + 1, false);
  std::size_t matching_groups = 0;
  for (const auto* group : {&groups->first, &groups->second}) {
    if (group->empty()) continue;
    std::vector<std::string> contexts;
    for (std::size_t idx : *group) contexts.push_back(c.contents[idx - 1]);
    const std::string answer =
        rag_llm.generate_answer(event.query, contexts, llm::PromptVariant::Standard);
    if (rag::matches(answer, event.incorrect_output)) {
      ++matching_groups;
      for (std::size_t idx : *group) flagged[idx] = true;
    }
  }
  if (matching_groups == 2) {
    r.state.audit_notes.push_back("both clusters reproduce the reported output; both flagged");
  }
  for (std::size_t i = 0; i < n; ++i) {
    decide(r, c.docs[i].id, flagged[i + 1],
           "clusters " + format_indices(groups->first) + " / " + format_indices(groups->second));
  }
  return r;
}

}  // namespace ragforensics::baselines
