#include "ragforensics/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "ragforensics/errors.hpp"

namespace ragforensics::text {
namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

const std::unordered_set<std::string_view>& stop_words() {
  static const std::unordered_set<std::string_view> words = {
      "a",       "about",  "above",   "after",  "again",   "against", "all",
      "also",    "am",     "an",      "and",    "any",     "are",     "as",
      "at",      "be",     "because", "been",   "before",  "being",   "below",
      "between", "both",   "but",     "by",     "can",     "could",   "d",
      "did",     "do",     "does",    "doing",  "don",     "down",    "during",
      "each",    "few",    "for",     "from",   "further", "had",     "has",
      "have",    "having", "he",      "her",    "here",    "hers",    "herself",
      "him",     "himself", "his",    "how",    "i",       "if",      "in",
      "into",    "is",     "it",      "its",    "itself",  "just",    "ll",
      "m",       "me",     "more",    "most",   "my",      "myself",  "no",
      "nor",     "not",    "now",     "of",     "off",     "on",      "once",
      "only",    "or",     "other",   "our",    "ours",    "ourselves", "out",
      "over",    "own",    "re",      "s",      "same",    "she",     "should",
      "so",      "some",   "such",    "t",      "than",    "that",    "the",
      "their",   "theirs", "them",    "themselves", "then", "there",  "these",
      "they",    "this",   "those",   "through", "to",     "too",     "under",
      "until",   "up",     "ve",      "very",   "was",     "we",      "were",
      "what",    "when",   "where",   "which",  "while",   "who",     "whom",
      "why",     "will",   "with",    "would",  "yes",     "you",     "your",
      "yours",   "yourself", "yourselves"};
  return words;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : s) {
    if (is_word_byte(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (is_space_byte(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::string normalize(std::string_view s) { return to_lower(collapse_whitespace(s)); }

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return is_space_byte(c); });
}

std::size_t word_count(std::string_view s) { return split_whitespace(s).size(); }

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char c : s) {
    if (is_space_byte(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(c));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string ensure_sentence_end(std::string_view s) {
  std::string out = collapse_whitespace(s);
  if (out.empty()) return out;
  const char last = out.back();
  if (last != '.' && last != '!' && last != '?') out.push_back('.');
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sha256_hex(std::string_view s) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(s.data(), s.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

bool is_stop_word(std::string_view lowered_word) {
  return stop_words().contains(lowered_word);
}

}  // namespace ragforensics::text
