#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ragforensics/errors.hpp"
#include "ragforensics/eval/experiment.hpp"
#include "ragforensics/eval/loaders.hpp"
#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/rag/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ragforensics;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string judge;
  std::string tracer;
  std::string defense;
  std::string out = "out";
  std::string corpus;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--judge", o.judge, "oracle|noisy:<rate>|naive|scripted:<path>|remote");
  cmd->add_option("--tracer", o.tracer, "ragforensics|ppl100|ppl90|expgen|rkm|tkm|poifor");
  cmd->add_option("--defense", o.defense, "none|ptr|bte|ptr+bte|ke:<x>|robustrag|ppl");
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
}

// Command-line overrides go into the JSON first so one validation pass sees them.
eval::ExperimentConfig load_config(const CommonOptions& o, const std::vector<std::size_t>& sweep = {}) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + o.config + " is not valid JSON: " + e.what());
    }
  }
  if (o.seed) j["seed"] = *o.seed;
  if (!o.judge.empty()) j["judge"] = o.judge;
  if (!o.tracer.empty()) j["tracer"] = o.tracer;
  if (!o.defense.empty()) j["defense"] = o.defense;
  if (!sweep.empty()) j["sweep"] = sweep;
  return eval::ExperimentConfig::from_json(j);
}

std::optional<fs::path> corpus_override(const CommonOptions& o) {
  if (o.corpus.empty()) return std::nullopt;
  return fs::path(o.corpus);
}

std::ofstream open_out(const fs::path& dir, const char* name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw StorageError("cannot write " + (dir / name).string());
  return f;
}

int cmd_inject(const CommonOptions& o) {
  auto wb = eval::build_workbench(load_config(o), corpus_override(o));
  auto texts = eval::forge_attack(wb);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  kb::write_corpus_jsonl(dir / "corpus.jsonl", wb.db.documents());
  auto ledger = open_out(dir, "ledger.jsonl");
  wb.ledger.write_jsonl(ledger);
  eval::write_queries_jsonl(dir / "queries.jsonl", wb.queries);
  std::cout << "injected " << texts.size() << " texts; database now holds " << wb.db.size()
            << " documents (" << dir.string() << ")\n";
  return 0;
}

int cmd_ask(const CommonOptions& o, const std::string& query) {
  auto wb = eval::build_workbench(load_config(o), corpus_override(o));
  rag::RagPipeline pipeline(*wb.rag_llm, wb.config.k);
  auto out = pipeline.answer(wb.db, query);
  json j = {{"query", query}, {"answer", out.answer}, {"retrieved", out.retrieved.ids()}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_feedback(const CommonOptions& o, const std::string& query, const std::string& output) {
  auto wb = eval::build_workbench(load_config(o), corpus_override(o));
  fs::create_directories(o.out);
  rag::FeedbackLog log(fs::path(o.out) / "feedback.jsonl");
  rag::RagPipeline pipeline(*wb.rag_llm, wb.config.k);
  std::size_t recorded = 0;
  if (!query.empty()) {
    auto out = pipeline.answer(wb.db, query);
    if (!output.empty()) out.answer = output;
    std::cout << log.record(query, out).event_id << '\n';
    return 0;
  }
  // Without an explicit report, every targeted query whose answer is the
  // attacker's target becomes an event.
  for (const auto& rec : wb.targeted()) {
    auto out = pipeline.answer(wb.db, rec.query);
    if (!rag::matches(out.answer, rec.target_answer)) continue;
    log.record(rec.query, out);
    ++recorded;
  }
  std::cout << "recorded " << recorded << " events in " << log.path().string() << '\n';
  return 0;
}

int cmd_trace(const CommonOptions& o, const std::string& feedback, const std::string& ledger) {
  auto wb = eval::build_workbench(load_config(o), corpus_override(o));
  if (!ledger.empty()) {
    std::ifstream in(ledger);
    if (!in) throw LoadError("cannot open ledger " + ledger, 0);
    wb.ledger = attack::PoisonLedger::read_jsonl(in);
  }
  const fs::path feedback_path = feedback.empty() ? fs::path(o.out) / "feedback.jsonl" : fs::path(feedback);
  auto events = rag::FeedbackLog::read(feedback_path);
  llm::Gateway judge(eval::make_judge_model(wb));
  auto results = eval::trace_events(wb, judge, events);

  rag::RagPipeline pipeline(*wb.rag_llm, wb.config.k);
  auto traces = open_out(o.out, "traces.jsonl");
  auto audit = open_out(o.out, "audit.jsonl");
  for (std::size_t i = 0; i < results.size(); ++i) {
    json row = forensics::to_json(results[i]);
    row["non_poisoned_feedback"] =
        forensics::is_non_poisoned_feedback(wb.db, pipeline, events[i], results[i]);
    traces << row.dump() << '\n';
    for (const auto& rec : forensics::audit_records(results[i])) audit << rec.dump() << '\n';
  }
  std::cout << "traced " << results.size() << " events; union of flagged ids: "
            << forensics::union_flagged(results).size() << '\n';
  return 0;
}

int cmd_evaluate(const CommonOptions& o, bool require_defense) {
  auto config = load_config(o);
  if (require_defense && config.defense == "none") {
    throw ConfigError("defend needs --defense (or a defense in the config)");
  }
  auto report = eval::run_experiment(config);
  eval::write_artifacts(o.out, {report});
  std::cout << eval::metrics_csv({report});
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::vector<std::size_t>& ms) {
  auto reports = eval::run_sweep(load_config(o, ms));
  eval::write_artifacts(o.out, reports);
  std::cout << eval::metrics_csv(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisoning forensics toolkit for retrieval-augmented generation"};
  app.require_subcommand(1);

  CommonOptions o;
  std::string query;
  std::string output;
  std::string feedback;
  std::string ledger;
  std::vector<std::size_t> ms;

  auto* inject = app.add_subcommand("inject", "Forge the configured attack and write the poisoned corpus");
  add_common(inject, o);
  inject->add_option("--corpus", o.corpus, "Start from this corpus instead of the configured one");

  auto* ask = app.add_subcommand("ask", "Answer one query");
  add_common(ask, o);
  ask->add_option("--query", query, "Question")->required();
  ask->add_option("--corpus", o.corpus, "Corpus JSONL to answer from");

  auto* fb = app.add_subcommand("feedback", "Append feedback events to <out>/feedback.jsonl");
  add_common(fb, o);
  fb->add_option("--corpus", o.corpus, "Corpus JSONL to answer from");
  fb->add_option("--query", query, "Report this query");
  fb->add_option("--output", output, "Reported incorrect output (default: the current answer)");

  auto* trace = app.add_subcommand("trace", "Trace the poisoned texts behind feedback events");
  add_common(trace, o);
  trace->add_option("--corpus", o.corpus, "Corpus JSONL to trace in");
  trace->add_option("--feedback", feedback, "Feedback JSONL (default: <out>/feedback.jsonl)");
  trace->add_option("--ledger", ledger, "Poison ledger JSONL (oracle and noisy judges)");

  auto* evaluate = app.add_subcommand("evaluate", "Run the full protocol and write report.json, metrics.csv, audit.jsonl");
  add_common(evaluate, o);

  auto* defend = app.add_subcommand("defend", "Like evaluate, with a defense applied after tracing");
  add_common(defend, o);

  auto* sweep = app.add_subcommand("sweep", "One run per poisoned-text count M");
  add_common(sweep, o);
  sweep->add_option("--m", ms, "Values of M (default: config sweep)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inject) return cmd_inject(o);
    if (*ask) return cmd_ask(o, query);
    if (*fb) return cmd_feedback(o, query, output);
    if (*trace) return cmd_trace(o, feedback, ledger);
    if (*evaluate) return cmd_evaluate(o, false);
    if (*defend) return cmd_evaluate(o, true);
    if (*sweep) return cmd_sweep(o, ms);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
