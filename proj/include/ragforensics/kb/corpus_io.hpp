#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ragforensics/kb/document.hpp"
#include "ragforensics/kb/knowledge_database.hpp"

namespace ragforensics::kb {

// Corpus JSON Lines: {"id": str, "text": str, "label": "benign"|"poisoned"|"proxy", "meta": {...}?}
// A poisoned document's attack id lives in meta.attack; a proxy's target in meta.target.

/// Streaming parse. Blank lines are skipped; the first malformed line raises
/// LoadError carrying its 1-based line number.
std::vector<Document> read_corpus_jsonl(std::istream& in);
std::vector<Document> read_corpus_jsonl(const std::filesystem::path& path);

void write_corpus_jsonl(std::ostream& out, const std::vector<Document>& docs);
void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Loads documents into `db` in dependency order (proxies after their targets).
void ingest(KnowledgeDatabase& db, std::vector<Document> docs);

}  // namespace ragforensics::kb
