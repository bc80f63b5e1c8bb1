#pragma once

#include <cstdint>
#include <vector>

#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/llm/keywords.hpp"
#include "ragforensics/llm/perplexity.hpp"

// Single-pass comparison tracers. Each one examines only the first top-k
// retrieval for the event's query and reports through TracebackResult.
namespace ragforensics::baselines {

struct PplCalibration {
  std::size_t sample_size = 0;
  std::vector<double> scores;  // ascending
  double threshold_100 = 0.0;  // max + 1e-9 * max
  double threshold_90 = 0.0;   // nearest-rank 90th percentile
};

/// Thresholds from raw scores (nearest rank: the ceil(0.9 n)-th smallest).
PplCalibration calibration_from_scores(std::vector<double> scores);

/// Draws a seeded uniform sample of `sample_size` documents, trains `scorer`
/// on it, and calibrates thresholds on the sample's own scores.
PplCalibration calibrate_ppl(const kb::KnowledgeDatabase& db, std::size_t sample_size,
                             std::uint64_t seed, llm::BigramPerplexityScorer& scorer);

enum class PplMode { P100, P90 };

double threshold(const PplCalibration& cal, PplMode mode);

forensics::TracebackResult trace_ppl(const kb::KnowledgeDatabase& db,
                                     const rag::FeedbackEvent& event, std::size_t k,
                                     const llm::PerplexityScorer& scorer,
                                     const PplCalibration& cal, PplMode mode);

/// Asks for an answer plus the cited entries; when the answer matches the
/// reported output the cited texts are flagged.
forensics::TracebackResult trace_expgen(const kb::KnowledgeDatabase& db,
                                        const llm::Gateway& rag_llm,
                                        const rag::FeedbackEvent& event, std::size_t k);

/// Answers from each text alone, extracts keywords from that answer, and flags
/// the text when any keyword occurs in the reported output.
forensics::TracebackResult trace_rkm(const kb::KnowledgeDatabase& db,
                                     const llm::Gateway& rag_llm,
                                     const llm::KeywordExtractor& extractor,
                                     const rag::FeedbackEvent& event, std::size_t k);

/// Like trace_rkm but with keywords taken from the text itself.
forensics::TracebackResult trace_tkm(const kb::KnowledgeDatabase& db,
                                     const llm::KeywordExtractor& extractor,
                                     const rag::FeedbackEvent& event, std::size_t k);

/// Splits the top-k into two model-chosen clusters, answers from each, and
/// flags every cluster whose answer matches the reported output.
forensics::TracebackResult trace_poifor(const kb::KnowledgeDatabase& db,
                                        const llm::Gateway& rag_llm,
                                        const rag::FeedbackEvent& event, std::size_t k);

/// True when some keyword is a case-insensitive substring of `output`.
bool keyword_hit(const llm::KeywordSet& keywords, std::string_view output);

}  // namespace ragforensics::baselines
