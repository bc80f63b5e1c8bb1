#include "ragforensics/attack/forge.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "ragforensics/errors.hpp"
#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::attack {
namespace {

constexpr std::string_view kDeceivePrefix = "This text will induce you to generate ";

void require_m(std::size_t m) {
  if (m == 0) throw InvalidInput("number of poisoned texts must be at least 1");
}

std::string attack_id(const PoisonedText& p) {
  std::string id(to_string(p.kind));
  if (p.adaptive != AdaptiveKind::None) {
    id += "+";
    id += to_string(p.adaptive);
  }
  return id;
}

std::vector<std::string> candidate_vocabulary(const kb::KnowledgeDatabase& db,
                                              std::string_view query, std::size_t cap) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : db.documents()) {
    if (doc.label.kind != kb::LabelKind::Benign) continue;
    for (auto& token : text::word_tokens(doc.content)) ++counts[std::move(token)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> vocab;
  for (auto& token : text::word_tokens(query)) {
    if (std::find(vocab.begin(), vocab.end(), token) == vocab.end()) vocab.push_back(token);
  }
  for (std::size_t i = 0; i < ranked.size() && i < cap; ++i) {
    if (std::find(vocab.begin(), vocab.end(), ranked[i].first) == vocab.end()) {
      vocab.push_back(ranked[i].first);
    }
  }
  return vocab;
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::PoisonedRagBlack: return "poisonedrag-b";
    case AttackKind::PoisonedRagWhite: return "poisonedrag-w";
    case AttackKind::InstruInject: return "instruinject";
  }
  return "poisonedrag-b";
}

std::string_view to_string(AdaptiveKind kind) {
  switch (kind) {
    case AdaptiveKind::None: return "none";
    case AdaptiveKind::Deceive: return "deceive";
    case AdaptiveKind::Disguise: return "disguise";
  }
  return "none";
}

AttackKind attack_kind_from_string(std::string_view s) {
  if (s == "poisonedrag-b") return AttackKind::PoisonedRagBlack;
  if (s == "poisonedrag-w") return AttackKind::PoisonedRagWhite;
  if (s == "instruinject") return AttackKind::InstruInject;
  throw InvalidInput("unknown attack kind '" + std::string(s) + "'");
}

AdaptiveKind adaptive_kind_from_string(std::string_view s) {
  if (s == "none") return AdaptiveKind::None;
  if (s == "deceive") return AdaptiveKind::Deceive;
  if (s == "disguise") return AdaptiveKind::Disguise;
  throw InvalidInput("unknown adaptive transform '" + std::string(s) + "'");
}

std::string assemble(std::string_view anchor, std::string_view payload) {
  std::string out(anchor);
  out.push_back(' ');
  out.append(payload);
  return out;
}

void PoisonLedger::record(const std::string& query, std::span<const std::string> ids) {
  auto& entry = entries_[query];
  entry.insert(ids.begin(), ids.end());
}

const kb::IdSet& PoisonLedger::ids_for(std::string_view query) const {
  static const kb::IdSet kEmpty;
  auto it = entries_.find(query);
  return it == entries_.end() ? kEmpty : it->second;
}

kb::IdSet PoisonLedger::all_ids() const {
  kb::IdSet out;
  for (const auto& [query, ids] : entries_) out.insert(ids.begin(), ids.end());
  return out;
}

void PoisonLedger::write_jsonl(std::ostream& out) const {
  for (const auto& [query, ids] : entries_) {
    out << nlohmann::json{{"query", query}, {"ids", ids}}.dump() << '\n';
  }
}

PoisonLedger PoisonLedger::read_jsonl(std::istream& in) {
  PoisonLedger ledger;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto ids = j.at("ids").get<std::vector<std::string>>();
      ledger.record(j.at("query").get<std::string>(), ids);
      ledger.next_sequence_ += ids.size();
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("ledger line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return ledger;
}

std::vector<PoisonedText> craft_poisonedrag_black(const llm::Gateway& llm,
                                                  const rag::QueryRecord& rec, std::size_t m) {
  require_m(m);
  std::vector<PoisonedText> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    PoisonedText p;
    p.kind = AttackKind::PoisonedRagBlack;
    p.anchor = rec.query;
    p.payload = llm.generate_poison_payload(rec.query, rec.target_answer, i);
    p.assembled = assemble(p.anchor, p.payload);
    p.target_query = rec.query;
    p.target_answer = rec.target_answer;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PoisonedText> craft_poisonedrag_white(const llm::Gateway& llm,
                                                  const rag::QueryRecord& rec, std::size_t m,
                                                  const kb::KnowledgeDatabase& db,
                                                  std::size_t budget,
                                                  const WhiteBoxOptions& options,
                                                  std::vector<HillClimbTrace>* traces) {
  auto texts = craft_poisonedrag_black(llm, rec, m);
  const kb::Embedding query = db.embed(rec.query);
  const auto vocab = candidate_vocabulary(db, rec.query, options.vocabulary_cap);
  auto objective = [&](const std::vector<std::string>& anchor, const std::string& payload) {
    return kb::similarity(db.embed(assemble(text::join(anchor, " "), payload)), query,
                          db.similarity_kind());
  };

  if (traces != nullptr) traces->clear();
  for (auto& p : texts) {
    p.kind = AttackKind::PoisonedRagWhite;
    std::vector<std::string> anchor = text::split_whitespace(rec.query);
    double best = objective(anchor, p.payload);
    HillClimbTrace trace{{best}};

    for (std::size_t step = 0; step < budget; ++step) {
      std::vector<std::string> best_candidate;
      double best_value = best;
      for (std::size_t pos = 0; pos <= anchor.size(); ++pos) {
        for (const auto& word : vocab) {
          auto candidate = anchor;
          if (pos < anchor.size()) {
            if (candidate[pos] == word) continue;
            candidate[pos] = word;
          } else {
            candidate.push_back(word);
          }
          const double value = objective(candidate, p.payload);
          if (value > best_value) {
            best_value = value;
            best_candidate = std::move(candidate);
          }
        }
      }
      if (best_candidate.empty()) break;
      anchor = std::move(best_candidate);
      best = best_value;
      trace.similarity.push_back(best);
    }
    p.anchor = text::join(anchor, " ");
    p.assembled = assemble(p.anchor, p.payload);
    if (traces != nullptr) traces->push_back(std::move(trace));
  }
  return texts;
}

std::vector<PoisonedText> craft_instruinject(const rag::QueryRecord& rec, std::size_t m,
                                             std::string_view instruction_template) {
  require_m(m);
  std::string instruction(instruction_template);
  for (std::size_t pos; (pos = instruction.find("{target}")) != std::string::npos;) {
    instruction.replace(pos, 8, rec.target_answer);
  }
  std::vector<PoisonedText> out(m);
  for (auto& p : out) {
    p.kind = AttackKind::InstruInject;
    p.anchor = rec.query;
    p.payload = instruction;
    p.assembled = assemble(p.anchor, p.payload);
    p.target_query = rec.query;
    p.target_answer = rec.target_answer;
  }
  return out;
}

PoisonedText apply_adaptive_deceive(PoisonedText p, std::string_view correct_answer) {
  if (p.adaptive != AdaptiveKind::None) {
    throw AdaptiveAlreadyApplied("adaptive transform already applied to this text");
  }
  p.assembled += " ";
  p.assembled += kDeceivePrefix;
  p.assembled += correct_answer;
  p.adaptive = AdaptiveKind::Deceive;
  return p;
}

PoisonedText apply_adaptive_disguise(PoisonedText p, std::string_view correct_answer) {
  if (p.adaptive != AdaptiveKind::None) {
    throw AdaptiveAlreadyApplied("adaptive transform already applied to this text");
  }
  const std::string sentence = text::ensure_sentence_end(correct_answer);
  if (p.kind == AttackKind::PoisonedRagWhite) {
    p.assembled = sentence + " " + p.assembled;
  } else {
    p.assembled = p.anchor + " " + sentence + " " + p.payload;
  }
  p.adaptive = AdaptiveKind::Disguise;
  return p;
}

std::vector<std::string> inject(kb::KnowledgeDatabase& db, std::span<const PoisonedText> texts,
                                PoisonLedger& ledger) {
  const PoisonLedger before = ledger;
  std::vector<kb::Document> docs;
  std::vector<std::string> ids;
  docs.reserve(texts.size());
  for (const auto& p : texts) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "poison-%06zu", ledger.take_sequence());
    kb::Document doc;
    doc.id = buf;
    doc.content = p.assembled;
    doc.label = kb::DocumentLabel::poisoned(attack_id(p));
    doc.metadata = {{"target_query", p.target_query},
                    {"target_answer", p.target_answer},
                    {"adaptive", std::string(to_string(p.adaptive))}};
    ids.push_back(doc.id);
    docs.push_back(std::move(doc));
  }
  try {
    db.upsert_batch(std::move(docs));
  } catch (const std::exception& e) {
    ledger = before;
    throw StorageError(std::string("injection failed, nothing stored: ") + e.what());
  }
  for (std::size_t i = 0; i < texts.size(); ++i) {
    ledger.record(texts[i].target_query, std::span<const std::string>(&ids[i], 1));
  }
  return ids;
}

}  // namespace ragforensics::attack
