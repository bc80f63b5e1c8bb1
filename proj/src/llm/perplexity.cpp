#include "ragforensics/llm/perplexity.hpp"

#include <cmath>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::llm {
namespace {

constexpr std::string_view kStart = "<s>";

std::string bigram_key(std::string_view previous, std::string_view word) {
  std::string key(previous.empty() ? kStart : previous);
  key.push_back('\x1f');
  key.append(word);
  return key;
}

template <typename Map>
std::size_t count_of(const Map& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

void BigramPerplexityScorer::calibrate(std::span<const std::string> corpus) {
  vocabulary_.clear();
  context_counts_.clear();
  bigram_counts_.clear();
  for (const auto& doc : corpus) {
    std::string previous;
    for (const auto& token : text::word_tokens(doc)) {
      ++vocabulary_[token];
      ++context_counts_[previous.empty() ? std::string(kStart) : previous];
      ++bigram_counts_[bigram_key(previous, token)];
      previous = token;
    }
  }
  calibrated_ = true;
}

double BigramPerplexityScorer::probability(std::string_view previous,
                                           std::string_view word) const {
  if (!calibrated_) throw NotCalibrated("perplexity scorer used before calibration");
  const std::string context(previous.empty() ? kStart : previous);
  const double numerator = static_cast<double>(count_of(bigram_counts_, bigram_key(previous, word))) + 1.0;
  const double denominator =
      static_cast<double>(count_of(context_counts_, context) + vocabulary_size());
  return numerator / denominator;
}

PerplexityScore BigramPerplexityScorer::score(std::string_view input) const {
  if (!calibrated_) throw NotCalibrated("perplexity scorer used before calibration");
  const auto tokens = text::word_tokens(input);
  if (tokens.empty()) throw InvalidInput("perplexity needs at least one word");
  double log_sum = 0.0;
  std::string_view previous;
  for (const auto& token : tokens) {
    log_sum += std::log(probability(previous, token));
    previous = token;
  }
  return {std::exp(-log_sum / static_cast<double>(tokens.size())), std::string(kScorerId)};
}

}  // namespace ragforensics::llm
