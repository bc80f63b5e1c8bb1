#pragma once

#include <span>
#include <utility>

#include <json.hpp>

#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/rag/pipeline.hpp"

namespace ragforensics::eval {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t universe() const noexcept { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// A rate whose denominator was zero is reported as 0 with `undefined` set.
struct Rate {
  double value = 0.0;
  bool undefined = false;
};

struct DetectionRates {
  Rate dacc;  // (tp + tn) / universe
  Rate fpr;   // fp / (fp + tn)
  Rate fnr;   // fn / (fn + tp)
};

/// Universe = texts the tracer examined (flagged + cleared), scored against
/// the event's injected ids.
ConfusionMatrix confusion(const kb::IdSet& ledger_ids, const forensics::TracebackResult& result);

/// Alternative universe: injected ids + the first top-k + everything flagged.
/// Unflagged members count as cleared.
ConfusionMatrix confusion_alternative(const kb::IdSet& ledger_ids,
                                      const forensics::TracebackResult& result,
                                      std::span<const std::string> first_top_k);

DetectionRates rates(const ConfusionMatrix& m);

using ScoredOutput = std::pair<std::string, rag::QueryRecord>;  // answer, record

/// Fraction of answers matching the attacker's target. 0 for an empty list.
double asr(std::span<const ScoredOutput> outputs, const rag::Matcher& matcher = rag::SubstringMatcher{});
/// Fraction of answers matching the correct answer. 0 for an empty list.
double acc(std::span<const ScoredOutput> outputs, const rag::Matcher& matcher = rag::SubstringMatcher{});

nlohmann::json to_json(const ConfusionMatrix& m);
nlohmann::json to_json(const DetectionRates& r);

}  // namespace ragforensics::eval
