#include "ragforensics/kb/corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::kb {
namespace {

using nlohmann::json;

Document parse_line(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw LoadError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what(), line_no);
  }
  auto fail = [line_no](const std::string& what) {
    throw LoadError("line " + std::to_string(line_no) + ": " + what, line_no);
  };
  if (!j.is_object()) fail("expected a JSON object");
  for (const char* field : {"id", "text"}) {
    if (!j.contains(field)) fail(std::string("missing field '") + field + "'");
    if (!j[field].is_string()) fail(std::string("field '") + field + "' must be a string");
  }
  Document doc;
  doc.id = j["id"].get<std::string>();
  doc.content = j["text"].get<std::string>();
  if (doc.id.empty()) fail("field 'id' must be non-empty");
  if (text::is_blank(doc.content)) fail("field 'text' must be non-empty");
  if (j.contains("meta") && !j["meta"].is_null()) {
    if (!j["meta"].is_object()) fail("field 'meta' must be an object");
    for (const auto& [key, value] : j["meta"].items()) {
      doc.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  std::string label = "benign";
  if (j.contains("label")) {
    if (!j["label"].is_string()) fail("field 'label' must be a string");
    label = j["label"].get<std::string>();
  }
  if (label == "benign") {
    doc.label = DocumentLabel::benign();
  } else if (label == "poisoned") {
    auto it = doc.metadata.find("attack");
    doc.label = DocumentLabel::poisoned(it == doc.metadata.end() ? "unknown" : it->second);
    if (it != doc.metadata.end()) doc.metadata.erase(it);
  } else if (label == "proxy") {
    auto it = doc.metadata.find("target");
    if (it == doc.metadata.end()) fail("proxy document requires meta.target");
    doc.label = DocumentLabel::proxy(it->second);
    doc.metadata.erase(it);
  } else {
    fail("unknown label '" + label + "'");
  }
  return doc;
}

}  // namespace

std::vector<Document> read_corpus_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    docs.push_back(parse_line(line, line_no));
  }
  return docs;
}

std::vector<Document> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open corpus file " + path.string(), 0);
  return read_corpus_jsonl(in);
}

void write_corpus_jsonl(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& doc : docs) {
    json meta = json::object();
    for (const auto& [k, v] : doc.metadata) meta[k] = v;
    if (doc.label.kind == LabelKind::Poisoned) meta["attack"] = doc.label.ref;
    if (doc.label.kind == LabelKind::Proxy) meta["target"] = doc.label.ref;
    json j = {{"id", doc.id}, {"text", doc.content}, {"label", to_string(doc.label.kind)}};
    if (!meta.empty()) j["meta"] = std::move(meta);
    out << j.dump() << '\n';
  }
  if (!out) throw StorageError("failed writing corpus JSONL");
}

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot open " + path.string() + " for writing");
  write_corpus_jsonl(out, docs);
}

void ingest(KnowledgeDatabase& db, std::vector<Document> docs) {
  std::stable_partition(docs.begin(), docs.end(),
                        [](const Document& d) { return d.label.kind != LabelKind::Proxy; });
  db.upsert_batch(std::move(docs));
}

}  // namespace ragforensics::kb
