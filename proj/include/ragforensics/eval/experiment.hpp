#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragforensics/attack/forge.hpp"
#include "ragforensics/eval/metrics.hpp"
#include "ragforensics/eval/synthetic.hpp"
#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/kb/knowledge_database.hpp"
#include "ragforensics/llm/gateway.hpp"
#include "ragforensics/llm/remote.hpp"

namespace ragforensics::eval {

struct AttackConfig {
  attack::AttackKind kind = attack::AttackKind::PoisonedRagBlack;
  std::size_t m = 5;
  attack::AdaptiveKind adaptive = attack::AdaptiveKind::None;
  std::size_t budget = 8;  // white-box accepted edits
};

/// Everything an experiment needs, parsed from a JSON document:
///
///   {"dataset": {"corpus": path, "queries": path} | {"synthetic": {...}},
///    "retrieval": {"k", "dim", "similarity": "dot"|"cosine", "embedder": "hashed"|"remote"},
///    "attack": {"kind", "m", "adaptive", "budget"},
///    "tracer", "defense", "judge", "llm", "keywords": "deterministic"|"llm",
///    "remote": {"base_url", "model", "max_in_flight", "requests_per_minute", "max_retries"},
///    "events", "seed", "robustrag_mu", "ppl": {"sample_size", "mode": "100"|"90"},
///    "sweep": [m...], "judge_parallelism", "workers"}
///
/// Every key is optional; unknown keys are rejected.
struct ExperimentConfig {
  std::optional<std::filesystem::path> corpus_path;
  std::optional<std::filesystem::path> queries_path;
  SyntheticSpec synthetic;

  std::size_t k = 5;
  std::size_t dim = 256;
  kb::SimilarityKind similarity = kb::SimilarityKind::DotProduct;
  std::string embedder = "hashed";

  AttackConfig attack;
  std::string tracer = "ragforensics";  // ragforensics|ppl100|ppl90|expgen|rkm|tkm|poifor
  std::string defense = "none";         // none|ptr|bte|ptr+bte|ke:<x>|robustrag|ppl
  std::string judge = "oracle";         // oracle|noisy:<rate>|naive|scripted:<path>|remote
  std::string llm = "mock";             // mock|scripted:<path>|remote
  std::string keywords = "deterministic";
  llm::RemoteConfig remote;

  std::size_t events = 50;  // targeted queries
  std::uint64_t seed = 7;
  std::size_t robustrag_mu = 2;
  std::size_t ppl_sample_size = 100;
  std::string ppl_mode = "90";
  std::vector<std::size_t> sweep;
  std::size_t judge_parallelism = 1;
  std::size_t workers = 1;  // events traced concurrently

  /// Collects every problem and throws one ConfigError listing them all.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);

  /// Canonical form (the API key is never included).
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical JSON.
  std::string fingerprint() const;
};

/// The stack an experiment runs against: database, queries, ground-truth
/// ledger and the models behind the RAG system.
struct Workbench {
  ExperimentConfig config;
  std::shared_ptr<const kb::Embedder> embedder;
  kb::KnowledgeDatabase db;
  std::vector<rag::QueryRecord> queries;
  attack::PoisonLedger ledger;
  std::shared_ptr<const llm::ChatModel> rag_model;
  std::unique_ptr<llm::Gateway> rag_llm;

  /// The first config.events queries.
  std::vector<rag::QueryRecord> targeted() const;
};

/// Loads or generates the clean corpus and queries and builds the RAG model.
/// When `corpus_override` is set that file replaces the configured corpus.
Workbench build_workbench(const ExperimentConfig& config,
                          const std::optional<std::filesystem::path>& corpus_override = {});

/// Crafts config.attack.m texts per targeted query, applies the adaptive
/// transform, and injects them. Returns the injected texts.
std::vector<attack::PoisonedText> forge_attack(Workbench& wb);

/// Judge model named by config.judge. The oracle reads the ledger and the
/// current database, so build it after injection.
std::shared_ptr<const llm::ChatModel> make_judge_model(const Workbench& wb);

/// Answers every targeted query without defenses and keeps the events whose
/// answer matches the attacker's target.
std::vector<rag::FeedbackEvent> collect_events(const Workbench& wb);

/// Runs the configured tracer on every event (config.workers at a time);
/// results come back in event order.
std::vector<forensics::TracebackResult> trace_events(const Workbench& wb,
                                                     const llm::Gateway& judge,
                                                     const std::vector<rag::FeedbackEvent>& events);

struct EventReport {
  rag::FeedbackEvent event;
  forensics::TracebackResult result;
  ConfusionMatrix confusion;
  ConfusionMatrix confusion_alternative;
};

struct AnswerScores {
  double asr = 0.0;
  double acc = 0.0;
  std::size_t queries = 0;
};

struct MetricsReport {
  std::string fingerprint;
  std::size_t m = 0;
  std::size_t targeted_queries = 0;
  std::vector<EventReport> events;
  ConfusionMatrix pooled;
  ConfusionMatrix pooled_alternative;
  DetectionRates rates;
  DetectionRates rates_alternative;
  AnswerScores before;           // targeted queries, no defense
  AnswerScores after;            // targeted queries, configured defense
  std::optional<AnswerScores> after_all_scoped;  // BTE prompt only where installed
  std::optional<AnswerScores> after_all_global;  // BTE prompt for every query
  std::size_t removed = 0;
  std::size_t enhancements = 0;
  std::size_t judge_unparseable = 0;
  nlohmann::json seeds;

  nlohmann::json to_json() const;
};

/// The full protocol: build, inject, collect events, trace, score, defend,
/// re-score.
MetricsReport run_experiment(const ExperimentConfig& config);

/// One run per M in config.sweep (or config.attack.m alone when empty).
std::vector<MetricsReport> run_sweep(const ExperimentConfig& config);

/// Header plus one row per report.
std::string metrics_csv(const std::vector<MetricsReport>& reports);

/// report.json (the last report, or {"runs": [...]} for several), metrics.csv
/// and audit.jsonl under `dir`.
void write_artifacts(const std::filesystem::path& dir, const std::vector<MetricsReport>& reports);

}  // namespace ragforensics::eval
