#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "ragforensics/errors.hpp"
#include "ragforensics/eval/experiment.hpp"
#include "ragforensics/eval/loaders.hpp"
#include "ragforensics/eval/metrics.hpp"
#include "ragforensics/eval/synthetic.hpp"
#include "ragforensics/text.hpp"

using namespace ragforensics;
using namespace ragforensics::eval;
using nlohmann::json;

namespace {

forensics::TracebackResult result_with(std::vector<std::string> flagged,
                                       std::vector<std::string> cleared) {
  forensics::TracebackResult r;
  r.state.flagged_poisoned = std::move(flagged);
  r.state.cleared_benign = std::move(cleared);
  return r;
}

ExperimentConfig small_config(json extra = json::object()) {
  json j = {{"dataset", {{"synthetic", {{"documents", 120}, {"queries", 12}}}}},
            {"events", 8}};
  j.merge_patch(extra);
  return ExperimentConfig::from_json(j);
}

std::string config_error(const json& j) {
  try {
    ExperimentConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rf-eval-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Confusion, HandCountedExample) {
  const kb::IdSet ledger{"p1", "p2", "p3"};
  auto r = result_with({"p1", "p2", "b1"}, {"p3", "b2", "b3", "b4"});
  const auto m = confusion(ledger, r);
  EXPECT_EQ(m, (ConfusionMatrix{2, 1, 3, 1}));
  const auto rt = rates(m);
  EXPECT_DOUBLE_EQ(rt.dacc.value, 5.0 / 7.0);
  EXPECT_DOUBLE_EQ(rt.fpr.value, 0.25);
  EXPECT_DOUBLE_EQ(rt.fnr.value, 1.0 / 3.0);
}

TEST(Confusion, AlternativeUniverseCountsUnseenPoisonAsMissed) {
  const kb::IdSet ledger{"p1", "p2", "p9"};
  auto r = result_with({"p1", "x"}, {"b1"});
  const std::vector<std::string> top{"p1", "p2", "b1", "b2"};
  // Universe {p1, p2, p9, b1, b2, x}.
  EXPECT_EQ(confusion_alternative(ledger, r, top), (ConfusionMatrix{1, 1, 2, 2}));
}

TEST(Rates, ZeroDenominatorsAreMarked) {
  const auto r = rates({});
  EXPECT_TRUE(r.dacc.undefined);
  EXPECT_TRUE(r.fpr.undefined);
  EXPECT_TRUE(r.fnr.undefined);
  EXPECT_EQ(r.fpr.value, 0.0);
  const auto only_tp = rates({4, 0, 0, 0});
  EXPECT_FALSE(only_tp.fnr.undefined);
  EXPECT_TRUE(only_tp.fpr.undefined);
}

TEST(Rates, MatchOracleOnRandomMatrices) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    ConfusionMatrix m{rng() % 7, rng() % 7, rng() % 7, rng() % 7};
    const auto r = rates(m);
    EXPECT_NEAR(r.dacc.value, oracle::dacc(m.tp, m.fp, m.tn, m.fn), 1e-12);
    EXPECT_NEAR(r.fpr.value, oracle::fpr(m.fp, m.tn), 1e-12);
    EXPECT_NEAR(r.fnr.value, oracle::fnr(m.fn, m.tp), 1e-12);
  }
}

TEST(AnswerRates, AsrAndAcc) {
  const rag::QueryRecord a{"q1", "Paris", "Rome"};
  const rag::QueryRecord b{"q2", "Oslo", "Bern"};
  std::vector<ScoredOutput> outs{{"It is rome", a}, {"oslo", b}, {"I don't know", a}, {"Rome", b}};
  EXPECT_DOUBLE_EQ(asr(outs), 0.25);
  EXPECT_DOUBLE_EQ(acc(outs), 0.25);
  EXPECT_EQ(asr({}), 0.0);
  EXPECT_EQ(acc({}), 0.0);
}

TEST(Synthetic, ShapeAndDeterminism) {
  const auto a = make_synthetic({});
  const auto b = make_synthetic({});
  EXPECT_EQ(a.documents, b.documents);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.documents.size(), 200u);
  EXPECT_EQ(a.queries.size(), 50u);
  SyntheticSpec other;
  other.seed = 8;
  EXPECT_NE(make_synthetic(other).queries, a.queries);

  std::set<std::string> ids;
  for (const auto& d : a.documents) ids.insert(d.id);
  EXPECT_EQ(ids.size(), a.documents.size());
  for (const auto& q : a.queries) {
    EXPECT_NE(text::normalize(q.correct_answer), text::normalize(q.target_answer));
    std::size_t support = 0;
    for (const auto& d : a.documents) {
      EXPECT_FALSE(rag::matches(d.content, q.target_answer));
      support += rag::matches(d.content, q.correct_answer);
    }
    EXPECT_EQ(support, 2u);
  }
  SyntheticSpec bad;
  bad.documents = 10;
  EXPECT_THROW(make_synthetic(bad), InvalidInput);
}

TEST(Loaders, QueryRoundTripAndErrors) {
  const auto data = make_synthetic({});
  std::stringstream buf;
  write_queries_jsonl(buf, data.queries);
  EXPECT_EQ(read_queries_jsonl(buf), data.queries);

  std::istringstream missing(
      "{\"query\":\"a\",\"correct_answer\":\"b\",\"target_answer\":\"c\"}\n\n"
      "{\"query\":\"a\",\"correct_answer\":\"b\"}\n");
  try {
    read_queries_jsonl(missing);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("missing field 'target_answer'"), std::string::npos);
  }
  std::istringstream blank("{\"query\":\" \",\"correct_answer\":\"b\",\"target_answer\":\"c\"}\n");
  EXPECT_THROW(read_queries_jsonl(blank), LoadError);
  std::istringstream junk("not json\n");
  EXPECT_THROW(read_queries_jsonl(junk), LoadError);
}

TEST(Config, DefaultsAndCanonicalForm) {
  const auto c = ExperimentConfig::from_json(json::object());
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.similarity, kb::SimilarityKind::DotProduct);
  EXPECT_EQ(c.tracer, "ragforensics");
  EXPECT_EQ(c.judge, "oracle");
  const auto again = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(again.to_json(), c.to_json());
  EXPECT_EQ(again.fingerprint(), c.fingerprint());
  EXPECT_EQ(c.fingerprint().size(), 64u);
  EXPECT_NE(small_config().fingerprint(), c.fingerprint());
}

TEST(Config, ListsEveryProblem) {
  const auto msg = config_error({{"retrieval", {{"k", 0}, {"similarity", "l2"}}},
                                 {"judge", "psychic"},
                                 {"colour", "blue"}});
  EXPECT_NE(msg.find("4 problems"), std::string::npos) << msg;
  EXPECT_NE(msg.find("retrieval.k"), std::string::npos);
  EXPECT_NE(msg.find("similarity"), std::string::npos);
  EXPECT_NE(msg.find("judge"), std::string::npos);
  EXPECT_NE(msg.find("colour"), std::string::npos);
}

TEST(Config, RejectsBadValues) {
  EXPECT_FALSE(config_error({{"attack", {{"kind", "hotflip"}}}}).empty());
  EXPECT_FALSE(config_error({{"defense", "magic"}}).empty());
  EXPECT_FALSE(config_error({{"judge", "noisy:1.5"}}).empty());
  EXPECT_FALSE(config_error({{"sweep", {5, 0}}}).empty());
  EXPECT_FALSE(config_error({{"seed", -1}}).empty());
  EXPECT_FALSE(config_error({{"dataset", {{"corpus", "a.jsonl"}}}}).empty());
  EXPECT_FALSE(config_error({{"events", 60}}).empty());
  EXPECT_TRUE(config_error({{"judge", "noisy:0.05"}, {"defense", "ke:20"}}).empty());
  EXPECT_THROW(ExperimentConfig::from_file("/nonexistent/config.json"), ConfigError);
}

TEST(Experiment, OracleRunIsExactAndDeterministic) {
  const auto cfg = small_config();
  const auto r1 = run_experiment(cfg);
  const auto r2 = run_experiment(cfg);
  EXPECT_EQ(r1.to_json(), r2.to_json());
  EXPECT_EQ(r1.events.size(), 8u);
  EXPECT_EQ(r1.pooled.tp, 8u * 5u);
  EXPECT_EQ(r1.pooled.fp, 0u);
  EXPECT_EQ(r1.pooled.fn, 0u);
  EXPECT_DOUBLE_EQ(r1.rates.dacc.value, 1.0);
  EXPECT_DOUBLE_EQ(r1.before.asr, 1.0);
  EXPECT_EQ(r1.fingerprint, cfg.fingerprint());
}

TEST(Experiment, WorkersDoNotChangeResults) {
  const auto seq = run_experiment(small_config());
  const auto par = run_experiment(small_config({{"workers", 4}, {"judge_parallelism", 3}}));
  ASSERT_EQ(seq.events.size(), par.events.size());
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    EXPECT_EQ(seq.events[i].result.state.flagged_poisoned, par.events[i].result.state.flagged_poisoned);
    EXPECT_EQ(seq.events[i].confusion, par.events[i].confusion);
  }
}

TEST(Experiment, DefensesChangeAfterScores) {
  const auto ptr = run_experiment(small_config({{"defense", "ptr"}}));
  EXPECT_EQ(ptr.removed, 40u);
  EXPECT_DOUBLE_EQ(ptr.after.asr, 0.0);
  EXPECT_DOUBLE_EQ(ptr.after.acc, 1.0);
  const auto both = run_experiment(small_config({{"defense", "ptr+bte"}}));
  EXPECT_DOUBLE_EQ(both.after.acc, 1.0);
  ASSERT_TRUE(both.after_all_scoped.has_value());
  ASSERT_TRUE(both.after_all_global.has_value());
  EXPECT_EQ(both.after_all_scoped->queries, 12u);
}

TEST(Experiment, SweepCsvHasOneRowPerM) {
  const auto reports = run_sweep(small_config({{"sweep", {1, 3}}}));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].m, 1u);
  EXPECT_EQ(reports[1].m, 3u);
  std::istringstream csv(metrics_csv(reports));
  std::string header, row1, row2, extra;
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  EXPECT_FALSE(std::getline(csv, extra));
  EXPECT_EQ(header,
            "m,events,tp,fp,tn,fn,dacc,fpr,fnr,dacc_alt,fpr_alt,fnr_alt,asr_before,acc_before,"
            "asr_after,acc_after");
  EXPECT_EQ(row1.rfind("1,", 0), 0u);
  EXPECT_EQ(row2.rfind("3,", 0), 0u);
}

TEST(Experiment, ArtifactsWritten) {
  const auto dir = temp_dir("artifacts");
  const auto report = run_experiment(small_config());
  write_artifacts(dir, {report});
  std::ifstream rj(dir / "report.json");
  const auto j = json::parse(rj);
  EXPECT_EQ(j["fingerprint"], report.fingerprint);
  EXPECT_EQ(j["per_event"].size(), 8u);
  std::ifstream audit(dir / "audit.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(audit, line);) {
    EXPECT_TRUE(json::parse(line).contains("verdict"));
    ++lines;
  }
  std::size_t calls = 0;
  for (const auto& e : report.events) calls += e.result.judge_calls;
  EXPECT_EQ(lines, calls);
  EXPECT_TRUE(std::filesystem::exists(dir / "metrics.csv"));
  std::filesystem::remove_all(dir);
}
