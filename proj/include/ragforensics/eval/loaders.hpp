#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ragforensics/kb/corpus_io.hpp"
#include "ragforensics/rag/pipeline.hpp"

namespace ragforensics::eval {

/// Query JSONL: {"query": str, "correct_answer": str, "target_answer": str}.
/// LoadError names the first missing or mistyped field and its line.
std::vector<rag::QueryRecord> read_queries_jsonl(std::istream& in);
std::vector<rag::QueryRecord> read_queries_jsonl(const std::filesystem::path& path);

void write_queries_jsonl(std::ostream& out, const std::vector<rag::QueryRecord>& queries);
void write_queries_jsonl(const std::filesystem::path& path,
                         const std::vector<rag::QueryRecord>& queries);

inline std::vector<kb::Document> load_corpus(const std::filesystem::path& path) {
  return kb::read_corpus_jsonl(path);
}

inline std::vector<rag::QueryRecord> load_queries(const std::filesystem::path& path) {
  return read_queries_jsonl(path);
}

}  // namespace ragforensics::eval
