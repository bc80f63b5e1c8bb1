#include "ragforensics/llm/keywords.hpp"

#include <cctype>
#include <vector>

#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::llm {

KeywordSet DeterministicKeywordExtractor::extract(std::string_view input) const {
  KeywordSet out;
  std::string token;
  std::string previous;  // last kept word in the current run, empty if the run is broken

  auto flush = [&](bool breaks_run) {
    if (!token.empty()) {
      if (text::is_stop_word(token)) {
        previous.clear();
      } else {
        out.insert(token);
        if (!previous.empty()) out.insert(previous + " " + token);
        previous = token;
      }
      token.clear();
    }
    if (breaks_run) previous.clear();
  };

  for (unsigned char c : input) {
    if (std::isalnum(c) != 0 || c >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush(std::isspace(c) == 0);
    }
  }
  flush(true);
  return out;
}

KeywordSet LlmKeywordExtractor::extract(std::string_view input) const {
  KeywordSet out;
  const DeterministicKeywordExtractor normalizer;
  for (const auto& item : gateway_.extract_keywords(input)) {
    auto normalized = normalizer.extract(item);
    out.insert(normalized.begin(), normalized.end());
  }
  return out;
}

std::string join_keywords(const KeywordSet& keywords) {
  return text::join(std::vector<std::string>(keywords.begin(), keywords.end()), ", ");
}

}  // namespace ragforensics::llm
