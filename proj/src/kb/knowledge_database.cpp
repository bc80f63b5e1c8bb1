#include "ragforensics/kb/knowledge_database.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_set>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::kb {

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::Benign: return "benign";
    case LabelKind::Poisoned: return "poisoned";
    case LabelKind::Proxy: return "proxy";
  }
  return "benign";
}

LabelKind label_kind_from_string(std::string_view s) {
  if (s == "benign") return LabelKind::Benign;
  if (s == "poisoned") return LabelKind::Poisoned;
  if (s == "proxy") return LabelKind::Proxy;
  throw InvalidInput("unknown document label '" + std::string(s) + "'");
}

std::vector<std::string> RetrievalResult::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

KnowledgeDatabase::KnowledgeDatabase(std::shared_ptr<const Embedder> embedder,
                                     SimilarityKind similarity_kind)
    : embedder_(std::move(embedder)), similarity_kind_(similarity_kind) {
  if (!embedder_) throw InvalidInput("knowledge database requires an embedder");
}

KnowledgeDatabase::KnowledgeDatabase(const KnowledgeDatabase& other)
    : embedder_(other.embedder_), similarity_kind_(other.similarity_kind_) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
}

KnowledgeDatabase& KnowledgeDatabase::operator=(const KnowledgeDatabase& other) {
  if (this == &other) return *this;
  std::map<std::string, Entry, std::less<>> copy;
  {
    std::shared_lock lock(other.mutex_);
    copy = other.entries_;
  }
  std::unique_lock lock(mutex_);
  embedder_ = other.embedder_;
  similarity_kind_ = other.similarity_kind_;
  entries_ = std::move(copy);
  return *this;
}

KnowledgeDatabase::KnowledgeDatabase(KnowledgeDatabase&& other) noexcept
    : embedder_(std::move(other.embedder_)),
      similarity_kind_(other.similarity_kind_),
      entries_(std::move(other.entries_)) {}

KnowledgeDatabase& KnowledgeDatabase::operator=(KnowledgeDatabase&& other) noexcept {
  if (this == &other) return *this;
  std::unique_lock lock(mutex_);
  embedder_ = std::move(other.embedder_);
  similarity_kind_ = other.similarity_kind_;
  entries_ = std::move(other.entries_);
  return *this;
}

KnowledgeDatabase::Entry KnowledgeDatabase::prepare(Document doc) const {
  if (doc.id.empty()) throw InvalidInput("document id must be non-empty");
  if (text::is_blank(doc.content)) {
    throw InvalidInput("document '" + doc.id + "' has empty content");
  }
  if (doc.label.kind == LabelKind::Proxy && doc.label.ref == doc.id) {
    throw InvalidInput("proxy document '" + doc.id + "' cannot target itself");
  }
  Embedding e;
  try {
    e = embedder_->embed(doc.content);
  } catch (const EmbedError&) {
    throw;
  } catch (const std::exception& ex) {
    throw EmbedError("embedding document '" + doc.id + "' failed: " + ex.what());
  }
  if (e.dim() != embedder_->dimension()) {
    throw EmbedError("embedder returned dimension " + std::to_string(e.dim()) +
                     ", expected " + std::to_string(embedder_->dimension()));
  }
  if (!std::all_of(e.values.begin(), e.values.end(), [](double x) { return std::isfinite(x); })) {
    throw EmbedError("embedding of document '" + doc.id + "' is not finite");
  }
  return Entry{std::move(doc), std::move(e)};
}

void KnowledgeDatabase::validate_proxy_target(
    const Document& doc, const std::map<std::string, Entry, std::less<>>& pending) const {
  if (doc.label.kind != LabelKind::Proxy) return;
  const Entry* target = nullptr;
  if (auto it = pending.find(doc.label.ref); it != pending.end()) {
    target = &it->second;
  } else if (auto jt = entries_.find(doc.label.ref); jt != entries_.end()) {
    target = &jt->second;
  }
  if (target == nullptr) {
    throw InvalidInput("proxy '" + doc.id + "' targets unknown document '" + doc.label.ref + "'");
  }
  if (target->doc.label.kind == LabelKind::Proxy) {
    throw InvalidInput("proxy '" + doc.id + "' targets another proxy");
  }
}

void KnowledgeDatabase::upsert(Document doc) {
  std::vector<Document> batch;
  batch.push_back(std::move(doc));
  upsert_batch(std::move(batch));
}

void KnowledgeDatabase::upsert_batch(std::vector<Document> docs) {
  std::map<std::string, Entry, std::less<>> pending;
  for (auto& doc : docs) {
    std::string id = doc.id;
    pending.insert_or_assign(std::move(id), prepare(std::move(doc)));
  }
  std::unique_lock lock(mutex_);
  for (const auto& [id, entry] : pending) validate_proxy_target(entry.doc, pending);
  for (auto& [id, entry] : pending) entries_.insert_or_assign(id, std::move(entry));
}

std::size_t KnowledgeDatabase::remove(const IdSet& ids) {
  std::unique_lock lock(mutex_);
  std::size_t removed = 0;
  for (const auto& id : ids) removed += entries_.erase(id);
  if (removed > 0) {
    std::erase_if(entries_, [this](const auto& kv) {
      const auto& label = kv.second.doc.label;
      return label.kind == LabelKind::Proxy && !entries_.contains(label.ref);
    });
  }
  return removed;
}

std::optional<Document> KnowledgeDatabase::find(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.doc;
}

bool KnowledgeDatabase::contains(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return entries_.find(id) != entries_.end();
}

std::size_t KnowledgeDatabase::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<std::string> KnowledgeDatabase::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) out.push_back(id);
  return out;
}

std::vector<Document> KnowledgeDatabase::documents() const {
  std::shared_lock lock(mutex_);
  std::vector<Document> out;
  out.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) out.push_back(entry.doc);
  return out;
}

Embedding KnowledgeDatabase::embed(std::string_view text) const { return embedder_->embed(text); }

std::optional<Embedding> KnowledgeDatabase::embedding_of(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.embedding;
}

double KnowledgeDatabase::score(const Embedding& query, std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) throw InvalidInput("unknown document '" + std::string(id) + "'");
  return similarity(query, it->second.embedding, similarity_kind_);
}

RetrievalResult KnowledgeDatabase::retrieve_top_k(std::string_view query, std::size_t k,
                                                  const IdSet& exclude) const {
  return retrieve_top_k(embed(query), k, exclude);
}

RetrievalResult KnowledgeDatabase::retrieve_top_k(const Embedding& query, std::size_t k,
                                                  const IdSet& exclude) const {
  if (k == 0) throw InvalidInput("k must be at least 1");
  if (similarity_kind_ == SimilarityKind::Cosine && query.norm() == 0.0) {
    throw DegenerateVector("query embeds to the zero vector");
  }
  std::shared_lock lock(mutex_);

  std::vector<RetrievalEntry> candidates;
  candidates.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) {
    const std::string& effective =
        entry.doc.label.kind == LabelKind::Proxy ? entry.doc.label.ref : id;
    if (exclude.contains(id) || exclude.contains(effective)) continue;
    if (!entries_.contains(effective)) continue;
    // A zero document vector scores 0 under cosine instead of failing the query.
    const bool degenerate =
        similarity_kind_ == SimilarityKind::Cosine && entry.embedding.norm() == 0.0;
    const double s = degenerate ? 0.0 : similarity(query, entry.embedding, similarity_kind_);
    candidates.push_back({effective, s, id});
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.id != b.id) return a.id < b.id;
    return a.source_id < b.source_id;
  });

  RetrievalResult result;
  result.k_requested = k;
  std::unordered_set<std::string_view> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c.id).second) continue;
    if (result.entries.size() < k) result.entries.push_back(c);
  }
  result.short_result = seen.size() < k;
  return result;
}

std::vector<std::string> KnowledgeDatabase::contents(const RetrievalResult& result) const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  out.reserve(result.entries.size());
  for (const auto& e : result.entries) {
    auto it = entries_.find(e.id);
    if (it == entries_.end()) {
      throw InvalidInput("retrieved document '" + e.id + "' no longer exists");
    }
    out.push_back(it->second.doc.content);
  }
  return out;
}

}  // namespace ragforensics::kb
