#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small text utilities shared by the embedder, keyword extractor, matcher and
// perplexity scorer. All of them operate on UTF-8 bytes; bytes >= 0x80 count as
// word characters so non-ASCII words are kept intact.
namespace ragforensics::text {

std::string to_lower(std::string_view s);

/// Lower-cased runs of word characters. Punctuation and whitespace separate.
std::vector<std::string> word_tokens(std::string_view s);

/// Collapses whitespace runs to a single space and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// Lower-cased collapse_whitespace; the form used by substring matching.
std::string normalize(std::string_view s);

bool is_blank(std::string_view s);

/// Whitespace-delimited word count.
std::size_t word_count(std::string_view s);

/// Splits on whitespace, keeping punctuation attached to its word.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Appends '.' unless the trimmed text already ends in '.', '!' or '?'.
std::string ensure_sentence_end(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

/// FNV-1a, used for embedding buckets and id derivation.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view s);

/// Fixed English stop-word list used by keyword extraction.
bool is_stop_word(std::string_view lowered_word);

}  // namespace ragforensics::text
