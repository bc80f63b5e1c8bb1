#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ragforensics/kb/document.hpp"
#include "ragforensics/kb/embedding.hpp"

namespace ragforensics::kb {

using IdSet = std::set<std::string>;

struct RetrievalEntry {
  std::string id;         // document handed to the caller (proxy target after substitution)
  double score = 0.0;
  std::string source_id;  // document that actually ranked; differs from id for proxies

  bool operator==(const RetrievalEntry&) const = default;
};

struct RetrievalResult {
  std::vector<RetrievalEntry> entries;
  std::size_t k_requested = 0;
  bool short_result = false;  // fewer than k eligible documents

  std::vector<std::string> ids() const;
  bool operator==(const RetrievalResult&) const = default;
};

/// The knowledge database: documents plus their embeddings, with exact top-k
/// retrieval. Readers may run concurrently; upsert and remove take an
/// exclusive lock. Copies (and snapshot()) are independent deep copies.
class KnowledgeDatabase {
 public:
  explicit KnowledgeDatabase(std::shared_ptr<const Embedder> embedder,
                             SimilarityKind similarity_kind = SimilarityKind::DotProduct);

  KnowledgeDatabase(const KnowledgeDatabase& other);
  KnowledgeDatabase& operator=(const KnowledgeDatabase& other);
  KnowledgeDatabase(KnowledgeDatabase&& other) noexcept;
  KnowledgeDatabase& operator=(KnowledgeDatabase&& other) noexcept;
  ~KnowledgeDatabase() = default;

  /// Inserts or atomically replaces a document.
  void upsert(Document doc);

  /// All-or-nothing batch insert: every document is validated and embedded
  /// before any of them becomes visible.
  void upsert_batch(std::vector<Document> docs);

  /// Removes the listed ids and returns how many were present. Proxies whose
  /// target disappears are dropped too (not counted).
  std::size_t remove(const IdSet& ids);

  std::optional<Document> find(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::vector<std::string> ids() const;
  std::vector<Document> documents() const;

  /// Exact top-k by similarity over documents not in `exclude`. Proxy
  /// documents rank by their own content but are reported as their target;
  /// each target id appears at most once. Ordering: score descending, then
  /// ascending returned id, then ascending source id. Under cosine a document
  /// with a zero embedding scores 0 and a zero query raises DegenerateVector.
  RetrievalResult retrieve_top_k(std::string_view query, std::size_t k,
                                 const IdSet& exclude = {}) const;
  RetrievalResult retrieve_top_k(const Embedding& query, std::size_t k,
                                 const IdSet& exclude = {}) const;

  /// Contents of the returned documents in retrieval order.
  std::vector<std::string> contents(const RetrievalResult& result) const;

  Embedding embed(std::string_view text) const;
  std::optional<Embedding> embedding_of(std::string_view id) const;
  double score(const Embedding& query, std::string_view id) const;

  SimilarityKind similarity_kind() const noexcept { return similarity_kind_; }
  const Embedder& embedder() const noexcept { return *embedder_; }
  std::shared_ptr<const Embedder> shared_embedder() const noexcept { return embedder_; }

  KnowledgeDatabase snapshot() const { return *this; }

 private:
  struct Entry {
    Document doc;
    Embedding embedding;
  };

  Entry prepare(Document doc) const;
  void validate_proxy_target(const Document& doc,
                             const std::map<std::string, Entry, std::less<>>& pending) const;

  std::shared_ptr<const Embedder> embedder_;
  SimilarityKind similarity_kind_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace ragforensics::kb
