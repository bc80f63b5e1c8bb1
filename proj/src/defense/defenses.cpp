#include "ragforensics/defense/defenses.hpp"

#include <ostream>

#include <json.hpp>

#include "ragforensics/errors.hpp"
#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/llm/prompts.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::defense {

std::size_t ptr(kb::KnowledgeDatabase& db, std::span<const forensics::TracebackResult> results) {
  const auto ids = forensics::union_flagged(results);
  try {
    return db.remove(ids);
  } catch (const std::exception& e) {
    throw StorageError(std::string("poisoned text removal failed: ") + e.what());
  }
}

std::string wrap_with_trigger(std::string_view benign_text) {
  std::string out(llm::prompts::kTriggerOpen);
  out += " ";
  out += benign_text;
  out += " ";
  out += llm::prompts::kTriggerClose;
  return out;
}

std::size_t count_wrapped(std::span<const std::string> contexts) {
  std::size_t n = 0;
  for (const auto& c : contexts) {
    const auto open = c.find(llm::prompts::kTriggerOpen);
    if (open != std::string::npos && c.find(llm::prompts::kTriggerClose, open) != std::string::npos) {
      ++n;
    }
  }
  return n;
}

void EnhancementRegistry::put(BenignEnhancement e) {
  std::string key = e.query;
  entries_.insert_or_assign(std::move(key), std::move(e));
}

void EnhancementRegistry::write_jsonl(std::ostream& out) const {
  for (const auto& [query, e] : entries_) {
    out << nlohmann::json{{"query", e.query},
                          {"correct_answer", e.correct_answer},
                          {"benign_text", e.benign_text},
                          {"wrapped_text", e.wrapped_text},
                          {"proxy_doc_id", e.proxy_doc_id},
                          {"benign_doc_id", e.benign_doc_id}}
                .dump()
        << '\n';
  }
}

BenignEnhancement bte_install(kb::KnowledgeDatabase& db, const llm::Gateway& generator,
                              const rag::QueryRecord& rec, EnhancementRegistry* registry) {
  if (text::is_blank(rec.correct_answer)) {
    throw InvalidInput("benign text enhancement needs a correct answer");
  }
  BenignEnhancement e;
  e.query = rec.query;
  e.correct_answer = rec.correct_answer;
  e.benign_text = generator.generate_benign_text(rec.query, rec.correct_answer);
  e.wrapped_text = wrap_with_trigger(e.benign_text);
  const std::string key = text::sha256_hex(text::normalize(rec.query)).substr(0, 16);
  e.benign_doc_id = "bte-benign-" + key;
  e.proxy_doc_id = "bte-proxy-" + key;

  kb::Document benign{e.benign_doc_id, e.wrapped_text, kb::DocumentLabel::benign(),
                      {{"bte_query", rec.query}}};
  kb::Document proxy{e.proxy_doc_id, rec.query, kb::DocumentLabel::proxy(e.benign_doc_id),
                     {{"bte_query", rec.query}}};
  db.upsert_batch({std::move(benign), std::move(proxy)});
  if (registry != nullptr) registry->put(e);
  return e;
}

rag::RagOutput bte_answer(const kb::KnowledgeDatabase& db, const rag::RagPipeline& rag,
                          std::string_view query, std::size_t k) {
  return rag.answer(db, query, llm::PromptVariant::BTE, {}, k);
}

rag::RagOutput ke_answer(const kb::KnowledgeDatabase& db, const rag::RagPipeline& rag,
                         std::string_view query, std::size_t x) {
  return rag.answer(db, query, llm::PromptVariant::Standard, {}, x);
}

rag::RagOutput robustrag_answer(const kb::KnowledgeDatabase& db, const llm::Gateway& llm,
                                const llm::KeywordExtractor& extractor, std::string_view query,
                                std::size_t k, std::size_t mu) {
  if (mu == 0) throw InvalidInput("keyword support threshold must be at least 1");
  rag::RagOutput out;
  out.variant = llm::PromptVariant::Standard;
  out.retrieved = db.retrieve_top_k(query, k);
  out.contexts = db.contents(out.retrieved);

  std::map<std::string, std::size_t> support;
  for (const auto& context : out.contexts) {
    const std::string isolated = llm.generate_answer(
        query, std::span<const std::string>(&context, 1), llm::PromptVariant::Standard);
    for (const auto& kw : extractor.extract(isolated)) ++support[kw];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [kw, count] : support) {
    if (count >= mu) kept.emplace_back(kw, count);
  }
  out.answer = llm.compose_from_keywords(query, kept);
  return out;
}

std::size_t ppl_removal_defense(kb::KnowledgeDatabase& db, const llm::PerplexityScorer& scorer,
                                const baselines::PplCalibration& cal, baselines::PplMode mode) {
  const double limit = baselines::threshold(cal, mode);
  kb::IdSet doomed;
  for (const auto& doc : db.documents()) {
    if (doc.label.kind == kb::LabelKind::Proxy) continue;
    if (scorer.score(doc.content).value > limit) doomed.insert(doc.id);
  }
  try {
    return db.remove(doomed);
  } catch (const std::exception& e) {
    throw StorageError(std::string("perplexity removal failed: ") + e.what());
  }
}

}  // namespace ragforensics::defense
