#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

namespace ragforensics::llm {

struct PerplexityScore {
  double value = 0.0;
  std::string scorer_id;
};

class PerplexityScorer {
 public:
  virtual ~PerplexityScorer() = default;
  virtual PerplexityScore score(std::string_view text) const = 0;
};

/// Word-bigram language model with add-one smoothing, trained on a corpus
/// sample. The first token is conditioned on a start symbol; there is no end
/// symbol, so a one-token text scores 1/p(token | <s>).
///   p(w | v) = (c(v, w) + 1) / (c(v) + V),  V = training vocabulary + 1 (unknown)
///   PPL = exp(-(1/n) * sum ln p(w_i | w_{i-1}))
class BigramPerplexityScorer final : public PerplexityScorer {
 public:
  static constexpr std::string_view kScorerId = "bigram-add1";

  void calibrate(std::span<const std::string> corpus);
  bool calibrated() const noexcept { return calibrated_; }

  /// Throws NotCalibrated before calibrate(), InvalidInput for token-free text.
  PerplexityScore score(std::string_view text) const override;

  /// Smoothed conditional probability; `previous` empty means start of text.
  double probability(std::string_view previous, std::string_view word) const;

  std::size_t vocabulary_size() const noexcept { return vocabulary_.size() + 1; }

 private:
  bool calibrated_ = false;
  std::unordered_map<std::string, std::size_t> vocabulary_;  // word -> count
  std::unordered_map<std::string, std::size_t> context_counts_;
  std::unordered_map<std::string, std::size_t> bigram_counts_;  // "prev\x1fword"
};

}  // namespace ragforensics::llm
