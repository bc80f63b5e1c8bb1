#include "ragforensics/eval/metrics.hpp"

namespace ragforensics::eval {
namespace {

Rate ratio(std::size_t num, std::size_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

double match_rate(std::span<const ScoredOutput> outputs, const rag::Matcher& matcher,
                  bool target) {
  if (outputs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& [answer, rec] : outputs) {
    if (matcher.matches(answer, target ? rec.target_answer : rec.correct_answer)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

nlohmann::json rate_json(const Rate& r) {
  return {{"value", r.value}, {"undefined", r.undefined}};
}

}  // namespace

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionMatrix confusion(const kb::IdSet& ledger_ids, const forensics::TracebackResult& result) {
  ConfusionMatrix m;
  for (const auto& id : result.state.flagged_poisoned) {
    (ledger_ids.contains(id) ? m.tp : m.fp) += 1;
  }
  for (const auto& id : result.state.cleared_benign) {
    (ledger_ids.contains(id) ? m.fn : m.tn) += 1;
  }
  return m;
}

ConfusionMatrix confusion_alternative(const kb::IdSet& ledger_ids,
                                      const forensics::TracebackResult& result,
                                      std::span<const std::string> first_top_k) {
  const kb::IdSet flagged = result.state.flagged_set();
  kb::IdSet universe = ledger_ids;
  universe.insert(first_top_k.begin(), first_top_k.end());
  universe.insert(flagged.begin(), flagged.end());
  ConfusionMatrix m;
  for (const auto& id : universe) {
    const bool poisoned = ledger_ids.contains(id);
    if (flagged.contains(id)) {
      (poisoned ? m.tp : m.fp) += 1;
    } else {
      (poisoned ? m.fn : m.tn) += 1;
    }
  }
  return m;
}

DetectionRates rates(const ConfusionMatrix& m) {
  return {ratio(m.tp + m.tn, m.universe()), ratio(m.fp, m.fp + m.tn), ratio(m.fn, m.fn + m.tp)};
}

double asr(std::span<const ScoredOutput> outputs, const rag::Matcher& matcher) {
  return match_rate(outputs, matcher, true);
}

double acc(std::span<const ScoredOutput> outputs, const rag::Matcher& matcher) {
  return match_rate(outputs, matcher, false);
}

nlohmann::json to_json(const ConfusionMatrix& m) {
  return {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

nlohmann::json to_json(const DetectionRates& r) {
  return {{"dacc", rate_json(r.dacc)}, {"fpr", rate_json(r.fpr)}, {"fnr", rate_json(r.fnr)}};
}

}  // namespace ragforensics::eval
