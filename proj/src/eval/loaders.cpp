#include "ragforensics/eval/loaders.hpp"

#include <fstream>

#include <json.hpp>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::eval {

std::vector<rag::QueryRecord> read_queries_jsonl(std::istream& in) {
  std::vector<rag::QueryRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(where + "malformed JSON: " + e.what(), line_no);
    }
    if (!j.is_object()) throw LoadError(where + "expected a JSON object", line_no);
    rag::QueryRecord rec;
    for (auto [field, slot] : {std::pair{"query", &rec.query},
                               std::pair{"correct_answer", &rec.correct_answer},
                               std::pair{"target_answer", &rec.target_answer}}) {
      if (!j.contains(field)) {
        throw LoadError(where + "missing field '" + field + "'", line_no);
      }
      if (!j[field].is_string() || text::is_blank(j[field].get<std::string>())) {
        throw LoadError(where + "field '" + field + "' must be a non-empty string", line_no);
      }
      *slot = j[field].get<std::string>();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<rag::QueryRecord> read_queries_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open query file " + path.string(), 0);
  return read_queries_jsonl(in);
}

void write_queries_jsonl(std::ostream& out, const std::vector<rag::QueryRecord>& queries) {
  for (const auto& q : queries) {
    out << nlohmann::json{{"query", q.query},
                          {"correct_answer", q.correct_answer},
                          {"target_answer", q.target_answer}}
               .dump()
        << '\n';
  }
}

void write_queries_jsonl(const std::filesystem::path& path,
                         const std::vector<rag::QueryRecord>& queries) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot open " + path.string() + " for writing");
  write_queries_jsonl(out, queries);
}

}  // namespace ragforensics::eval
