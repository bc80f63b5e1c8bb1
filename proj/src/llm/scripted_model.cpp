#include "ragforensics/llm/scripted_model.hpp"

#include <fstream>

#include "ragforensics/errors.hpp"

namespace ragforensics::llm {

ScriptedChatModel ScriptedChatModel::from_json(const nlohmann::json& table) {
  if (!table.is_object()) throw LoadError("script must be a JSON object of digest -> text", 0);
  ScriptedChatModel model;
  for (const auto& [digest, response] : table.items()) {
    if (!response.is_string()) {
      throw LoadError("script entry " + digest + " is not a string", 0);
    }
    model.set(digest, response.get<std::string>());
  }
  return model;
}

ScriptedChatModel ScriptedChatModel::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open script file " + path.string(), 0);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError("script file " + path.string() + " is not valid JSON: " + e.what(), 0);
  }
}

void ScriptedChatModel::set(std::string digest, std::string response) {
  table_.insert_or_assign(std::move(digest), std::move(response));
}

void ScriptedChatModel::set_for(const ChatRequest& req, std::string response) {
  set(prompt_digest(req), std::move(response));
}

std::string ScriptedChatModel::complete(const ChatRequest& req) const {
  const std::string digest = prompt_digest(req);
  auto it = table_.find(digest);
  if (it == table_.end()) throw ScriptMiss(digest);
  return it->second;
}

nlohmann::json ScriptedChatModel::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : table_) j[k] = v;
  return j;
}

}  // namespace ragforensics::llm
