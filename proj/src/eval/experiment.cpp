#include "ragforensics/eval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "ragforensics/baselines/tracers.hpp"
#include "ragforensics/defense/defenses.hpp"
#include "ragforensics/errors.hpp"
#include "ragforensics/eval/loaders.hpp"
#include "ragforensics/llm/keywords.hpp"
#include "ragforensics/llm/perplexity.hpp"
#include "ragforensics/llm/scripted_model.hpp"
#include "ragforensics/sim/simulated_models.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::eval {
namespace {

using nlohmann::json;

constexpr std::string_view kTracers[] = {"ragforensics", "ppl100", "ppl90", "expgen",
                                         "rkm",          "tkm",    "poifor"};

// Seed streams derived from the master seed, one per consumer.
constexpr std::uint64_t kJudgeStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kPplStream = 0xd1b54a32d192ed03ULL;

// Literals built in C++ arrive as signed integers, parsed text as unsigned.
bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_size(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Walks a JSON object, recording every problem instead of stopping at the first.
class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  template <typename Fn>
  void field(const char* key, Fn&& fn) {
    seen_.push_back(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    fn(obj_.at(key));
  }

  void size(const char* key, std::size_t& out, std::size_t min = 0) {
    field(key, [&](const json& v) {
      if (!non_negative_integer(v) || v.get<std::size_t>() < min) {
        fail(key, "must be an integer >= " + std::to_string(min));
      } else {
        out = v.get<std::size_t>();
      }
    });
  }

  void string(const char* key, std::string& out) {
    field(key, [&](const json& v) {
      if (!v.is_string()) {
        fail(key, "must be a string");
      } else {
        out = v.get<std::string>();
      }
    });
  }

  void fail(std::string_view key, std::string_view what) {
    std::string where = prefix_;
    if (!key.empty()) where += (where.empty() ? "" : ".") + std::string(key);
    errors_.push_back(where + ": " + std::string(what));
  }

  void reject_unknown() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) fail(key, "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::vector<std::string> seen_;
};

void check_judge(const std::string& judge, std::vector<std::string>& errors) {
  if (judge == "oracle" || judge == "naive" || judge == "remote") return;
  if (starts_with(judge, "noisy:")) {
    auto rate = parse_double(std::string_view(judge).substr(6));
    if (!rate || *rate < 0.0 || *rate > 1.0) errors.push_back("judge: noisy rate must lie in [0, 1]");
    return;
  }
  if (starts_with(judge, "scripted:") && judge.size() > 9) return;
  errors.push_back("judge: expected oracle|noisy:<rate>|naive|scripted:<path>|remote, got '" +
                   judge + "'");
}

void check_defense(const std::string& defense, std::vector<std::string>& errors) {
  if (defense == "none" || defense == "ptr" || defense == "bte" || defense == "ptr+bte" ||
      defense == "robustrag" || defense == "ppl") {
    return;
  }
  if (starts_with(defense, "ke:")) {
    auto x = parse_size(std::string_view(defense).substr(3));
    if (!x || *x == 0) errors.push_back("defense: ke:<x> needs a positive integer");
    return;
  }
  errors.push_back("defense: expected none|ptr|bte|ptr+bte|ke:<x>|robustrag|ppl, got '" +
                   defense + "'");
}

std::shared_ptr<const llm::ChatModel> scripted_from(std::string_view spec) {
  return std::make_shared<llm::ScriptedChatModel>(
      llm::ScriptedChatModel::from_file(std::string(spec.substr(9))));
}

llm::RemoteConfig remote_with_key(const ExperimentConfig& c) {
  llm::RemoteConfig r = c.remote;
  r.api_key = llm::api_key_from_env();
  return r;
}

AnswerScores score_answers(const std::vector<ScoredOutput>& outputs) {
  return {asr(outputs), acc(outputs), outputs.size()};
}

json scores_json(const AnswerScores& s) {
  return {{"asr", s.asr}, {"acc", s.acc}, {"queries", s.queries}};
}

}  // namespace

// ---------------------------------------------------------------------------
// config

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  Reader top(j, "", errors);

  top.field("dataset", [&](const json& d) {
    Reader r(d, "dataset", errors);
    r.field("corpus", [&](const json& v) {
      if (v.is_string()) c.corpus_path = v.get<std::string>();
      else r.fail("corpus", "must be a path string");
    });
    r.field("queries", [&](const json& v) {
      if (v.is_string()) c.queries_path = v.get<std::string>();
      else r.fail("queries", "must be a path string");
    });
    r.field("synthetic", [&](const json& s) {
      Reader sr(s, "dataset.synthetic", errors);
      sr.size("documents", c.synthetic.documents, 1);
      sr.size("queries", c.synthetic.queries, 1);
      sr.size("support_per_query", c.synthetic.support_per_query, 1);
      sr.size("filler_words", c.synthetic.filler_words);
      sr.reject_unknown();
    });
    r.reject_unknown();
    if (c.corpus_path.has_value() != c.queries_path.has_value()) {
      r.fail("", "corpus and queries must be given together");
    }
  });

  top.field("retrieval", [&](const json& d) {
    Reader r(d, "retrieval", errors);
    r.size("k", c.k, 1);
    r.size("dim", c.dim, 1);
    std::string sim = "dot";
    r.string("similarity", sim);
    if (sim == "dot") c.similarity = kb::SimilarityKind::DotProduct;
    else if (sim == "cosine") c.similarity = kb::SimilarityKind::Cosine;
    else r.fail("similarity", "expected dot|cosine");
    r.string("embedder", c.embedder);
    if (c.embedder != "hashed" && c.embedder != "remote") r.fail("embedder", "expected hashed|remote");
    r.reject_unknown();
  });

  top.field("attack", [&](const json& d) {
    Reader r(d, "attack", errors);
    std::string kind(attack::to_string(c.attack.kind));
    std::string adaptive(attack::to_string(c.attack.adaptive));
    r.string("kind", kind);
    r.string("adaptive", adaptive);
    r.size("m", c.attack.m, 1);
    r.size("budget", c.attack.budget);
    try {
      c.attack.kind = attack::attack_kind_from_string(kind);
    } catch (const Error& e) {
      r.fail("kind", e.what());
    }
    try {
      c.attack.adaptive = attack::adaptive_kind_from_string(adaptive);
    } catch (const Error& e) {
      r.fail("adaptive", e.what());
    }
    r.reject_unknown();
  });

  top.string("tracer", c.tracer);
  if (std::find(std::begin(kTracers), std::end(kTracers), c.tracer) == std::end(kTracers)) {
    errors.push_back("tracer: expected ragforensics|ppl100|ppl90|expgen|rkm|tkm|poifor, got '" +
                     c.tracer + "'");
  }
  top.string("defense", c.defense);
  check_defense(c.defense, errors);
  top.string("judge", c.judge);
  check_judge(c.judge, errors);
  top.string("llm", c.llm);
  if (c.llm != "mock" && c.llm != "remote" && !(starts_with(c.llm, "scripted:") && c.llm.size() > 9)) {
    errors.push_back("llm: expected mock|scripted:<path>|remote, got '" + c.llm + "'");
  }
  top.string("keywords", c.keywords);
  if (c.keywords != "deterministic" && c.keywords != "llm") {
    errors.push_back("keywords: expected deterministic|llm");
  }

  top.field("remote", [&](const json& d) {
    Reader r(d, "remote", errors);
    r.string("base_url", c.remote.base_url);
    r.string("model", c.remote.model);
    r.size("max_in_flight", c.remote.max_in_flight, 1);
    r.size("requests_per_minute", c.remote.requests_per_minute);
    std::size_t retries = static_cast<std::size_t>(c.remote.max_retries);
    r.size("max_retries", retries);
    c.remote.max_retries = static_cast<int>(retries);
    r.reject_unknown();
  });

  top.size("events", c.events, 1);
  top.field("seed", [&](const json& v) {
    if (non_negative_integer(v)) c.seed = v.get<std::uint64_t>();
    else errors.push_back("seed: must be a non-negative integer");
  });
  top.size("robustrag_mu", c.robustrag_mu, 1);
  top.field("ppl", [&](const json& d) {
    Reader r(d, "ppl", errors);
    r.size("sample_size", c.ppl_sample_size, 1);
    r.string("mode", c.ppl_mode);
    if (c.ppl_mode != "100" && c.ppl_mode != "90") r.fail("mode", "expected \"100\" or \"90\"");
    r.reject_unknown();
  });
  top.field("sweep", [&](const json& v) {
    if (!v.is_array()) {
      errors.push_back("sweep: must be an array of positive integers");
      return;
    }
    for (const auto& m : v) {
      if (!non_negative_integer(m) || m.get<std::size_t>() == 0) {
        errors.push_back("sweep: must be an array of positive integers");
        return;
      }
      c.sweep.push_back(m.get<std::size_t>());
    }
  });
  top.size("judge_parallelism", c.judge_parallelism, 1);
  top.size("workers", c.workers, 1);
  top.reject_unknown();

  if (!c.corpus_path && c.synthetic.queries * c.synthetic.support_per_query > c.synthetic.documents) {
    errors.push_back("dataset.synthetic: queries x support_per_query exceeds documents");
  }
  if (!c.corpus_path && c.events > c.synthetic.queries) {
    errors.push_back("events: exceeds the number of synthetic queries");
  }

  if (!errors.empty()) {
    std::string msg = "invalid experiment config (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json dataset;
  if (corpus_path) {
    dataset = {{"corpus", corpus_path->string()}, {"queries", queries_path->string()}};
  } else {
    dataset = {{"synthetic",
                {{"documents", synthetic.documents},
                 {"queries", synthetic.queries},
                 {"support_per_query", synthetic.support_per_query},
                 {"filler_words", synthetic.filler_words}}}};
  }
  return {
      {"dataset", dataset},
      {"retrieval",
       {{"k", k},
        {"dim", dim},
        {"similarity", similarity == kb::SimilarityKind::Cosine ? "cosine" : "dot"},
        {"embedder", embedder}}},
      {"attack",
       {{"kind", attack::to_string(attack.kind)},
        {"m", attack.m},
        {"adaptive", attack::to_string(attack.adaptive)},
        {"budget", attack.budget}}},
      {"tracer", tracer},
      {"defense", defense},
      {"judge", judge},
      {"llm", llm},
      {"keywords", keywords},
      {"remote",
       {{"base_url", remote.base_url},
        {"model", remote.model},
        {"max_in_flight", remote.max_in_flight},
        {"requests_per_minute", remote.requests_per_minute},
        {"max_retries", remote.max_retries}}},
      {"events", events},
      {"seed", seed},
      {"robustrag_mu", robustrag_mu},
      {"ppl", {{"sample_size", ppl_sample_size}, {"mode", ppl_mode}}},
      {"sweep", sweep},
      {"judge_parallelism", judge_parallelism},
      {"workers", workers},
  };
}

std::string ExperimentConfig::fingerprint() const { return text::sha256_hex(to_json().dump()); }

// ---------------------------------------------------------------------------
// workbench

std::vector<rag::QueryRecord> Workbench::targeted() const {
  const std::size_t n = std::min(config.events, queries.size());
  return {queries.begin(), queries.begin() + static_cast<std::ptrdiff_t>(n)};
}

Workbench build_workbench(const ExperimentConfig& config,
                          const std::optional<std::filesystem::path>& corpus_override) {
  std::shared_ptr<const kb::Embedder> embedder;
  if (config.embedder == "remote") {
    embedder = std::make_shared<llm::RemoteEmbedder>(remote_with_key(config), config.dim);
  } else {
    embedder = std::make_shared<kb::HashedBagOfWordsEmbedder>(config.dim);
  }
  Workbench wb{config, embedder, kb::KnowledgeDatabase(embedder, config.similarity), {}, {}, {}, {}};

  std::vector<kb::Document> docs;
  if (config.corpus_path) {
    docs = load_corpus(*config.corpus_path);
    wb.queries = load_queries(*config.queries_path);
  } else {
    SyntheticSpec spec = config.synthetic;
    spec.seed = config.seed;
    auto data = make_synthetic(spec);
    docs = std::move(data.documents);
    wb.queries = std::move(data.queries);
  }
  if (corpus_override) docs = load_corpus(*corpus_override);
  kb::ingest(wb.db, std::move(docs));

  if (config.llm == "remote") {
    wb.rag_model = std::make_shared<llm::RemoteChatModel>(remote_with_key(config));
  } else if (starts_with(config.llm, "scripted:")) {
    wb.rag_model = scripted_from(config.llm);
  } else {
    wb.rag_model = std::make_shared<sim::ConsensusAnswerModel>(sim::AnswerKey(wb.queries));
  }
  wb.rag_llm = std::make_unique<llm::Gateway>(wb.rag_model);
  return wb;
}

std::vector<attack::PoisonedText> forge_attack(Workbench& wb) {
  const auto& a = wb.config.attack;
  std::vector<attack::PoisonedText> all;
  for (const auto& rec : wb.targeted()) {
    std::vector<attack::PoisonedText> texts;
    switch (a.kind) {
      case attack::AttackKind::PoisonedRagBlack:
        texts = attack::craft_poisonedrag_black(*wb.rag_llm, rec, a.m);
        break;
      case attack::AttackKind::PoisonedRagWhite:
        texts = attack::craft_poisonedrag_white(*wb.rag_llm, rec, a.m, wb.db, a.budget);
        break;
      case attack::AttackKind::InstruInject:
        texts = attack::craft_instruinject(rec, a.m);
        break;
    }
    for (auto& t : texts) {
      if (a.adaptive == attack::AdaptiveKind::Deceive) {
        t = attack::apply_adaptive_deceive(std::move(t), rec.correct_answer);
      } else if (a.adaptive == attack::AdaptiveKind::Disguise) {
        t = attack::apply_adaptive_disguise(std::move(t), rec.correct_answer);
      }
    }
    attack::inject(wb.db, texts, wb.ledger);
    all.insert(all.end(), std::make_move_iterator(texts.begin()),
               std::make_move_iterator(texts.end()));
  }
  return all;
}

std::shared_ptr<const llm::ChatModel> make_judge_model(const Workbench& wb) {
  const std::string& j = wb.config.judge;
  if (j == "oracle") return std::make_shared<sim::OracleJudgeModel>(wb.db, wb.ledger);
  if (starts_with(j, "noisy:")) {
    auto oracle = std::make_shared<sim::OracleJudgeModel>(wb.db, wb.ledger);
    return std::make_shared<sim::NoisyJudgeModel>(oracle, *parse_double(std::string_view(j).substr(6)),
                                                  wb.config.seed ^ kJudgeStream);
  }
  if (j == "naive") return std::make_shared<sim::NaiveContainmentJudgeModel>(sim::AnswerKey(wb.queries));
  if (starts_with(j, "scripted:")) return scripted_from(j);
  if (j == "remote") return std::make_shared<llm::RemoteChatModel>(remote_with_key(wb.config));
  throw ConfigError("unknown judge '" + j + "'");
}

std::vector<rag::FeedbackEvent> collect_events(const Workbench& wb) {
  rag::RagPipeline pipeline(*wb.rag_llm, wb.config.k);
  std::vector<rag::FeedbackEvent> events;
  for (const auto& rec : wb.targeted()) {
    auto out = pipeline.answer(wb.db, rec.query);
    if (!rag::matches(out.answer, rec.target_answer)) continue;
    events.push_back({"evt-" + std::to_string(events.size() + 1), rec.query, out.answer,
                      out.retrieved.ids()});
  }
  return events;
}

std::vector<forensics::TracebackResult> trace_events(const Workbench& wb,
                                                     const llm::Gateway& judge,
                                                     const std::vector<rag::FeedbackEvent>& events) {
  const auto& c = wb.config;
  llm::BigramPerplexityScorer scorer;
  baselines::PplCalibration cal;
  if (starts_with(c.tracer, "ppl")) {
    cal = baselines::calibrate_ppl(wb.db, std::min(c.ppl_sample_size, wb.db.size()),
                                   c.seed ^ kPplStream, scorer);
  }
  llm::DeterministicKeywordExtractor det;
  llm::LlmKeywordExtractor via_llm(*wb.rag_llm);
  const llm::KeywordExtractor& extractor =
      c.keywords == "llm" ? static_cast<const llm::KeywordExtractor&>(via_llm) : det;
  forensics::TracebackOptions opts;
  opts.judge_parallelism = c.judge_parallelism;

  auto run_one = [&](const rag::FeedbackEvent& e) -> forensics::TracebackResult {
    if (c.tracer == "ragforensics") return forensics::traceback(wb.db, judge, e, c.k, opts);
    if (c.tracer == "ppl100") {
      return baselines::trace_ppl(wb.db, e, c.k, scorer, cal, baselines::PplMode::P100);
    }
    if (c.tracer == "ppl90") {
      return baselines::trace_ppl(wb.db, e, c.k, scorer, cal, baselines::PplMode::P90);
    }
    if (c.tracer == "expgen") return baselines::trace_expgen(wb.db, *wb.rag_llm, e, c.k);
    if (c.tracer == "rkm") return baselines::trace_rkm(wb.db, *wb.rag_llm, extractor, e, c.k);
    if (c.tracer == "tkm") return baselines::trace_tkm(wb.db, extractor, e, c.k);
    return baselines::trace_poifor(wb.db, *wb.rag_llm, e, c.k);
  };

  std::vector<forensics::TracebackResult> results(events.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(c.workers, events.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < events.size(); ++i) results[i] = run_one(events[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(events.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < events.size(); i = next++) {
          try {
            results[i] = run_one(events[i]);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return results;
}

// ---------------------------------------------------------------------------
// experiment

namespace {

struct DefenseOutcome {
  AnswerScores targeted;
  std::optional<AnswerScores> all_scoped;
  std::optional<AnswerScores> all_global;
  std::size_t removed = 0;
  std::size_t enhancements = 0;
};

DefenseOutcome apply_defense(const Workbench& wb, const std::vector<rag::FeedbackEvent>& events,
                             const std::vector<forensics::TracebackResult>& results) {
  const auto& c = wb.config;
  const std::string& d = c.defense;
  kb::KnowledgeDatabase db = wb.db.snapshot();
  rag::RagPipeline pipeline(*wb.rag_llm, c.k);
  DefenseOutcome out;

  if (d == "ptr" || d == "ptr+bte") out.removed = defense::ptr(db, results);
  if (d == "ppl") {
    llm::BigramPerplexityScorer scorer;
    auto cal = baselines::calibrate_ppl(db, std::min(c.ppl_sample_size, db.size()),
                                        c.seed ^ kPplStream, scorer);
    out.removed = defense::ppl_removal_defense(
        db, scorer, cal, c.ppl_mode == "100" ? baselines::PplMode::P100 : baselines::PplMode::P90);
  }

  std::set<std::string> enhanced;
  const bool bte = d == "bte" || d == "ptr+bte";
  if (bte) {
    sim::AnswerKey key(wb.queries);
    for (const auto& e : events) {
      const auto* rec = key.find(e.query);
      if (rec == nullptr || enhanced.contains(text::normalize(e.query))) continue;
      defense::bte_install(db, *wb.rag_llm, *rec);
      enhanced.insert(text::normalize(e.query));
    }
    out.enhancements = enhanced.size();
  }

  llm::DeterministicKeywordExtractor det;
  llm::LlmKeywordExtractor via_llm(*wb.rag_llm);
  const llm::KeywordExtractor& extractor =
      c.keywords == "llm" ? static_cast<const llm::KeywordExtractor&>(via_llm) : det;

  auto answer = [&](const rag::QueryRecord& rec, bool bte_prompt) -> std::string {
    if (bte_prompt) return defense::bte_answer(db, pipeline, rec.query, c.k).answer;
    if (starts_with(d, "ke:")) {
      return defense::ke_answer(db, pipeline, rec.query, *parse_size(std::string_view(d).substr(3)))
          .answer;
    }
    if (d == "robustrag") {
      return defense::robustrag_answer(db, *wb.rag_llm, extractor, rec.query, c.k, c.robustrag_mu)
          .answer;
    }
    return pipeline.answer(db, rec.query).answer;
  };

  std::vector<ScoredOutput> targeted;
  for (const auto& rec : wb.targeted()) targeted.emplace_back(answer(rec, bte), rec);
  out.targeted = score_answers(targeted);

  if (bte) {
    // The trigger-aware prompt either for every query or only where installed.
    std::vector<ScoredOutput> scoped;
    std::vector<ScoredOutput> global;
    for (const auto& rec : wb.queries) {
      global.emplace_back(answer(rec, true), rec);
      scoped.emplace_back(answer(rec, enhanced.contains(text::normalize(rec.query))), rec);
    }
    out.all_scoped = score_answers(scoped);
    out.all_global = score_answers(global);
  }
  return out;
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& config) {
  Workbench wb = build_workbench(config);
  forge_attack(wb);
  auto judge_model = make_judge_model(wb);
  llm::Gateway judge(judge_model);

  MetricsReport report;
  report.fingerprint = config.fingerprint();
  report.m = config.attack.m;
  report.seeds = {{"master", config.seed},
                  {"synthetic", config.seed},
                  {"judge_noise", config.seed ^ kJudgeStream},
                  {"ppl_sample", config.seed ^ kPplStream}};

  const auto targeted = wb.targeted();
  report.targeted_queries = targeted.size();
  rag::RagPipeline pipeline(*wb.rag_llm, config.k);
  std::vector<ScoredOutput> before;
  for (const auto& rec : targeted) before.emplace_back(pipeline.answer(wb.db, rec.query).answer, rec);
  report.before = score_answers(before);

  const auto events = collect_events(wb);
  const auto results = trace_events(wb, judge, events);

  // Per-event scoring, then a single-threaded reduce.
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ledger_ids = wb.ledger.ids_for(events[i].query);
    EventReport er{events[i], results[i], confusion(ledger_ids, results[i]),
                   confusion_alternative(ledger_ids, results[i], events[i].retrieved_ids)};
    report.pooled += er.confusion;
    report.pooled_alternative += er.confusion_alternative;
    report.events.push_back(std::move(er));
  }
  report.rates = rates(report.pooled);
  report.rates_alternative = rates(report.pooled_alternative);
  report.judge_unparseable = judge.stats().unparseable_fallbacks;
  if (report.judge_unparseable > 0) {
    spdlog::warn("{} judgments stayed unparseable and were treated as benign",
                 report.judge_unparseable);
  }

  auto defended = apply_defense(wb, events, results);
  report.after = defended.targeted;
  report.after_all_scoped = defended.all_scoped;
  report.after_all_global = defended.all_global;
  report.removed = defended.removed;
  report.enhancements = defended.enhancements;
  return report;
}

std::vector<MetricsReport> run_sweep(const ExperimentConfig& config) {
  std::vector<MetricsReport> out;
  if (config.sweep.empty()) {
    out.push_back(run_experiment(config));
    return out;
  }
  for (std::size_t m : config.sweep) {
    ExperimentConfig c = config;
    c.attack.m = m;
    c.sweep.clear();
    out.push_back(run_experiment(c));
  }
  return out;
}

json MetricsReport::to_json() const {
  json per_event = json::array();
  for (const auto& e : events) {
    json row = forensics::to_json(e.result);
    row["query"] = e.event.query;
    row["incorrect_output"] = e.event.incorrect_output;
    row["confusion"] = eval::to_json(e.confusion);
    row["rates"] = eval::to_json(eval::rates(e.confusion));
    row["confusion_alternative"] = eval::to_json(e.confusion_alternative);
    per_event.push_back(std::move(row));
  }
  json j = {
      {"fingerprint", fingerprint},
      {"m", m},
      {"seeds", seeds},
      {"targeted_queries", targeted_queries},
      {"events", events.size()},
      {"confusion", eval::to_json(pooled)},
      {"rates", eval::to_json(rates)},
      {"confusion_alternative", eval::to_json(pooled_alternative)},
      {"rates_alternative", eval::to_json(rates_alternative)},
      {"before", scores_json(before)},
      {"after", scores_json(after)},
      {"removed", removed},
      {"enhancements", enhancements},
      {"judge_unparseable", judge_unparseable},
      {"per_event", per_event},
  };
  if (after_all_scoped) {
    j["bte_modes"] = {{"scoped", scores_json(*after_all_scoped)},
                      {"global", scores_json(*after_all_global)}};
  }
  return j;
}

std::string metrics_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << "m,events,tp,fp,tn,fn,dacc,fpr,fnr,dacc_alt,fpr_alt,fnr_alt,asr_before,acc_before,"
         "asr_after,acc_after\n";
  for (const auto& r : reports) {
    out << r.m << ',' << r.events.size() << ',' << r.pooled.tp << ',' << r.pooled.fp << ','
        << r.pooled.tn << ',' << r.pooled.fn << ',' << r.rates.dacc.value << ','
        << r.rates.fpr.value << ',' << r.rates.fnr.value << ',' << r.rates_alternative.dacc.value
        << ',' << r.rates_alternative.fpr.value << ',' << r.rates_alternative.fnr.value << ','
        << r.before.asr << ',' << r.before.acc << ',' << r.after.asr << ',' << r.after.acc
        << '\n';
  }
  return out.str();
}

void write_artifacts(const std::filesystem::path& dir, const std::vector<MetricsReport>& reports) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw StorageError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.json");
    if (reports.size() == 1) {
      f << reports.front().to_json().dump(2) << '\n';
    } else {
      json runs = json::array();
      for (const auto& r : reports) runs.push_back(r.to_json());
      f << json{{"runs", runs}}.dump(2) << '\n';
    }
  }
  open("metrics.csv") << metrics_csv(reports);
  auto audit = open("audit.jsonl");
  for (const auto& r : reports) {
    for (const auto& e : r.events) {
      for (auto rec : forensics::audit_records(e.result)) {
        rec["m"] = r.m;
        audit << rec.dump() << '\n';
      }
    }
  }
}

}  // namespace ragforensics::eval
