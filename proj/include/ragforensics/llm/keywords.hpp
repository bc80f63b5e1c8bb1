#pragma once

#include <set>
#include <string>
#include <string_view>

namespace ragforensics::llm {

class Gateway;

using KeywordSet = std::set<std::string>;

class KeywordExtractor {
 public:
  virtual ~KeywordExtractor() = default;
  virtual KeywordSet extract(std::string_view text) const = 0;
};

/// Lower-cases, drops stop words, and returns the remaining unigrams plus
/// bigrams of neighbouring kept words. Punctuation and stop words both break
/// adjacency, so extract(join(extract(x), ", ")) == extract(x).
class DeterministicKeywordExtractor final : public KeywordExtractor {
 public:
  KeywordSet extract(std::string_view text) const override;
};

/// Asks the model for keywords, then normalizes each reply item through the
/// deterministic extractor.
class LlmKeywordExtractor final : public KeywordExtractor {
 public:
  explicit LlmKeywordExtractor(const Gateway& gateway) : gateway_(gateway) {}
  KeywordSet extract(std::string_view text) const override;

 private:
  const Gateway& gateway_;
};

/// Keywords joined by ", ".
std::string join_keywords(const KeywordSet& keywords);

}  // namespace ragforensics::llm
