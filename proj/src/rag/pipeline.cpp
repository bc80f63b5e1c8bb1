#include "ragforensics/rag/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>

#include <json.hpp>

#include "ragforensics/errors.hpp"
#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/llm/prompts.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::rag {

bool matches(std::string_view output, std::string_view reference) {
  const std::string ref = text::normalize(reference);
  if (ref.empty()) return false;
  return text::normalize(output).find(ref) != std::string::npos;
}

RagPipeline::RagPipeline(const llm::Gateway& llm, std::size_t k) : llm_(llm), k_(k) {
  if (k_ == 0) throw InvalidInput("k must be at least 1");
}

RagOutput RagPipeline::answer(const kb::KnowledgeDatabase& db, std::string_view query,
                              llm::PromptVariant variant, const kb::IdSet& exclude,
                              std::optional<std::size_t> k) const {
  RagOutput out;
  out.variant = variant;
  out.retrieved = db.retrieve_top_k(query, k.value_or(k_), exclude);
  out.contexts = db.contents(out.retrieved);
  if (out.contexts.empty()) {
    out.answer = std::string(llm::prompts::kDontKnow);
    return out;
  }
  out.answer = llm_.generate_answer(query, out.contexts, variant);
  return out;
}

namespace {

using nlohmann::json;

FeedbackEvent event_from_json(const json& j) {
  FeedbackEvent e;
  e.event_id = j.at("event_id").get<std::string>();
  e.query = j.at("query").get<std::string>();
  e.incorrect_output = j.at("incorrect_output").get<std::string>();
  if (j.contains("retrieved_ids")) {
    e.retrieved_ids = j.at("retrieved_ids").get<std::vector<std::string>>();
  }
  return e;
}

// Holds flock() on a descriptor for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path)
      : fd_(::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644)) {
    if (fd_ < 0) throw StorageError("cannot open feedback log " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw StorageError("cannot lock feedback log " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  int fd() const noexcept { return fd_; }

 private:
  int fd_;
};

}  // namespace

FeedbackLog::FeedbackLog(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<FeedbackEvent> FeedbackLog::read(const std::filesystem::path& path) {
  std::vector<FeedbackEvent> events;
  std::ifstream in(path);
  if (!in) return events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw LoadError("feedback log line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return events;
}

std::vector<FeedbackEvent> FeedbackLog::load() const { return read(path_); }

FeedbackEvent FeedbackLog::record(std::string_view query, const RagOutput& output) {
  if (text::is_blank(query) || text::is_blank(output.answer)) {
    throw InvalidInput("feedback needs a non-empty query and output");
  }
  std::lock_guard guard(mutex_);
  FileLock lock(path_);
  FeedbackEvent event;
  event.event_id = "evt-" + std::to_string(read(path_).size() + 1);
  event.query = std::string(query);
  event.incorrect_output = output.answer;
  event.retrieved_ids = output.retrieved.ids();
  const std::string line = json{{"event_id", event.event_id},
                                {"query", event.query},
                                {"incorrect_output", event.incorrect_output},
                                {"retrieved_ids", event.retrieved_ids}}
                               .dump() +
                           "\n";
  if (::write(lock.fd(), line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
    throw StorageError("short write to feedback log " + path_.string());
  }
  return event;
}

}  // namespace ragforensics::rag
