#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "doubles.hpp"
#include "ragforensics/attack/forge.hpp"
#include "ragforensics/errors.hpp"
#include "ragforensics/eval/synthetic.hpp"
#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/kb/corpus_io.hpp"
#include "ragforensics/sim/simulated_models.hpp"

using namespace ragforensics;
using namespace ragforensics::forensics;

namespace {

// One-dimensional scores: a document's similarity to the query is its value.
struct Scored {
  std::string id;
  double score;
  bool poison;
};

struct Bench {
  std::shared_ptr<doubles::TableEmbedder> embedder;
  kb::KnowledgeDatabase db;
  std::set<std::string> poison_contents;

  explicit Bench(const std::vector<Scored>& docs)
      : embedder(std::make_shared<doubles::TableEmbedder>(
            std::map<std::string, std::vector<double>>{{"q", {1.0}}})),
        db(embedder) {
    for (const auto& d : docs) {
      const std::string content = "text of " + d.id;
      embedder->set(content, {d.score});
      db.upsert({d.id, content, kb::DocumentLabel::benign(), {}});
      if (d.poison) poison_contents.insert(content);
    }
  }

  std::shared_ptr<doubles::PredicateJudge> truthful_judge() const {
    auto set = poison_contents;
    return std::make_shared<doubles::PredicateJudge>(
        [set](const llm::intent::Judge& j) { return set.contains(j.context); });
  }
};

rag::FeedbackEvent event_for(std::string query = "q") {
  return {"evt-1", std::move(query), "wrong", {}};
}

std::vector<Scored> five_poisons_then_benign(std::size_t benign) {
  std::vector<Scored> docs;
  for (int i = 0; i < 5; ++i) docs.push_back({"p" + std::to_string(i), 1.0 - 0.01 * i, true});
  for (std::size_t i = 0; i < benign; ++i) {
    docs.push_back({"b" + std::to_string(100 + i), 0.5 - 0.001 * static_cast<double>(i), false});
  }
  return docs;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Traceback, DominatingPoisonsFoundInTwoRounds) {
  Bench b(five_poisons_then_benign(20));
  auto judge_model = b.truthful_judge();
  llm::Gateway judge(judge_model);
  auto r = traceback(b.db, judge, event_for(), 5);
  EXPECT_EQ(as_set(r.state.flagged_poisoned), (std::set<std::string>{"p0", "p1", "p2", "p3", "p4"}));
  EXPECT_EQ(r.state.cleared_benign, (std::vector<std::string>{"b100", "b101", "b102", "b103", "b104"}));
  EXPECT_EQ(r.terminated_by, TerminationReason::BenignQuota);
  EXPECT_EQ(r.iterations(), 2u);
  EXPECT_EQ(r.judge_calls, 10u);
  EXPECT_EQ(judge_model->calls(), 10u);
  EXPECT_EQ(r.event_id, "evt-1");
}

TEST(Traceback, CleanCorpusStopsAfterOneRound) {
  std::vector<Scored> docs;
  for (int i = 0; i < 12; ++i) docs.push_back({"d" + std::to_string(i), 0.1 * i, false});
  Bench b(docs);
  llm::Gateway judge(b.truthful_judge());
  auto r = traceback(b.db, judge, event_for(), 5);
  EXPECT_TRUE(r.state.flagged_poisoned.empty());
  EXPECT_EQ(r.state.cleared_benign.size(), 5u);
  EXPECT_EQ(r.iterations(), 1u);
  EXPECT_EQ(r.terminated_by, TerminationReason::BenignQuota);
}

TEST(Traceback, RejectsZeroKAndZeroCap) {
  Bench b(five_poisons_then_benign(3));
  llm::Gateway judge(b.truthful_judge());
  EXPECT_THROW(traceback(b.db, judge, event_for(), 0), InvalidInput);
  TracebackOptions opts;
  opts.iteration_cap = 0;
  EXPECT_THROW(traceback(b.db, judge, event_for(), 5, opts), InvalidInput);
}

TEST(Traceback, SmallCorpusEndsExhausted) {
  Bench b({{"p0", 0.9, true}, {"b0", 0.5, false}, {"b1", 0.4, false}});
  llm::Gateway judge(b.truthful_judge());
  auto r = traceback(b.db, judge, event_for(), 5);
  EXPECT_EQ(r.terminated_by, TerminationReason::CorpusExhausted);
  EXPECT_EQ(r.state.flagged_poisoned, std::vector<std::string>{"p0"});
  EXPECT_EQ(r.state.cleared_benign.size(), 2u);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_EQ(r.iterations(), 1u);
}

TEST(Traceback, ExplicitCapStopsWithDiagnostic) {
  Bench b(five_poisons_then_benign(20));
  llm::Gateway judge(b.truthful_judge());
  TracebackOptions opts;
  opts.iteration_cap = 1;
  auto r = traceback(b.db, judge, event_for(), 5, opts);
  EXPECT_EQ(r.terminated_by, TerminationReason::IterationCap);
  EXPECT_EQ(r.iterations(), 1u);
  EXPECT_NE(r.diagnostic.find("iteration cap 1"), std::string::npos);
}

// A consistent judge that clears only the top k - 1 texts flags exactly one
// new text per round; the loop must still end by exhaustion, not the cap.
TEST(Traceback, OneFlagPerRoundStillTerminatesNaturally) {
  std::vector<Scored> docs{{"a0", 0.99, false}, {"a1", 0.98, false}};
  for (int i = 0; i < 10; ++i) docs.push_back({"x" + std::to_string(i), 0.5 - 0.01 * i, true});
  Bench b(docs);
  llm::Gateway judge(b.truthful_judge());
  auto r = traceback(b.db, judge, event_for(), 3);
  EXPECT_EQ(r.terminated_by, TerminationReason::CorpusExhausted);
  EXPECT_EQ(r.state.flagged_poisoned.size(), 10u);
  EXPECT_EQ(r.iterations(), 11u);
  EXPECT_GT(r.iterations(), (b.db.size() + 2) / 3 + 1);
  EXPECT_EQ(default_iteration_cap(b.db.size(), 3), b.db.size() + 1);
}

TEST(Traceback, JudgeFailureFilesBenignWithNote) {
  Bench b({{"p0", 0.9, true}, {"p1", 0.8, true}, {"b0", 0.1, false}});
  auto set = b.poison_contents;
  auto model = std::make_shared<doubles::PredicateJudge>(
      [set](const llm::intent::Judge& j) { return set.contains(j.context); },
      [](const llm::intent::Judge& j) { return j.context == "text of p1"; });
  llm::Gateway judge(model);
  auto r = traceback(b.db, judge, event_for(), 5);
  EXPECT_EQ(r.state.flagged_poisoned, std::vector<std::string>{"p0"});
  EXPECT_EQ(as_set(r.state.cleared_benign), (std::set<std::string>{"p1", "b0"}));
  EXPECT_EQ(r.state.judgments.at("p1").verdict, llm::Verdict::Unparseable);
  ASSERT_EQ(r.state.audit_notes.size(), 1u);
  EXPECT_NE(r.state.audit_notes[0].find("p1"), std::string::npos);
}

TEST(ClassifyCandidate, RejudgingIsAPreconditionViolation) {
  Bench b({{"p0", 0.9, true}});
  llm::Gateway judge(b.truthful_judge());
  TracebackState state;
  const auto doc = *b.db.find("p0");
  EXPECT_EQ(classify_candidate(state, judge, "q", doc, "wrong"), CandidateClass::Poisoned);
  EXPECT_THROW(classify_candidate(state, judge, "q", doc, "wrong"), PreconditionError);
  EXPECT_EQ(state.flagged_poisoned.size(), 1u);
}

TEST(Traceback, ParallelJudgingMatchesSequential) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Scored> docs;
    for (int i = 0; i < 60; ++i) docs.push_back({"d" + std::to_string(i), score(rng), coin(rng)});
    Bench b(docs);
    llm::Gateway judge(b.truthful_judge());
    auto seq = traceback(b.db, judge, event_for(), 5);
    TracebackOptions opts;
    opts.judge_parallelism = 4;
    auto par = traceback(b.db, judge, event_for(), 5, opts);
    EXPECT_EQ(seq.state.flagged_poisoned, par.state.flagged_poisoned);
    EXPECT_EQ(seq.state.cleared_benign, par.state.cleared_benign);
    EXPECT_EQ(seq.iterations(), par.iterations());
    EXPECT_EQ(seq.terminated_by, par.terminated_by);
  }
}

TEST(Traceback, NeverJudgesTwiceAndCallsBoundedByCorpus) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Scored> docs;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), score(rng), coin(rng)});
    Bench b(docs);
    llm::Gateway judge(b.truthful_judge());
    const std::size_t k = 1 + rng() % 6;
    auto r = traceback(b.db, judge, event_for(), k);
    std::vector<std::string> judged;
    for (const auto& round : r.state.rounds) {
      judged.insert(judged.end(), round.newly_judged.begin(), round.newly_judged.end());
    }
    EXPECT_EQ(as_set(judged).size(), judged.size());
    EXPECT_EQ(judged.size(), r.judge_calls);
    EXPECT_LE(r.judge_calls, b.db.size());
    EXPECT_NE(r.terminated_by, TerminationReason::IterationCap);
    EXPECT_LE(r.iterations(), r.state.flagged_poisoned.size() + 1);
  }
}

TEST(Traceback, JsonAndAuditShape) {
  Bench b(five_poisons_then_benign(6));
  llm::Gateway judge(b.truthful_judge());
  auto r = traceback(b.db, judge, event_for(), 5);
  const auto j = to_json(r);
  for (const char* key : {"event_id", "tracer", "flagged", "cleared", "iterations", "judge_calls",
                          "terminated_by", "diagnostic"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["terminated_by"], "benign_quota");
  const auto audit = audit_records(r);
  EXPECT_EQ(audit.size(), r.judge_calls);
  EXPECT_EQ(audit.front()["round"], 1);
  EXPECT_EQ(audit.back()["round"], 2);
}

TEST(UnionFlagged, MergesPerEventRuns) {
  TracebackResult a, b;
  a.state.flagged_poisoned = {"x", "y"};
  b.state.flagged_poisoned = {"y", "z"};
  std::vector<TracebackResult> both{a, b};
  EXPECT_EQ(union_flagged(both), (kb::IdSet{"x", "y", "z"}));
  EXPECT_TRUE(union_flagged({}).empty());
}

TEST(NonPoisonedFeedback, DistinguishesModelErrorFromPoisoning) {
  auto data = eval::make_synthetic({});
  kb::KnowledgeDatabase db(std::make_shared<kb::HashedBagOfWordsEmbedder>());
  kb::ingest(db, data.documents);
  const auto& attacked = data.queries[0];
  const auto& innocent = data.queries[1];

  auto consensus = std::make_shared<sim::ConsensusAnswerModel>(sim::AnswerKey(data.queries));
  llm::Gateway forge_llm(consensus);
  attack::PoisonLedger ledger;
  attack::inject(db, attack::craft_poisonedrag_black(forge_llm, attacked, 5), ledger);

  auto rag_model = std::make_shared<sim::ParametricErrorModel>(
      consensus, std::map<std::string, std::string>{{innocent.query, "Quixotl"}});
  llm::Gateway rag_llm(rag_model);
  rag::RagPipeline pipeline(rag_llm, 5);
  llm::Gateway judge(std::make_shared<sim::OracleJudgeModel>(db, ledger));

  auto poisoned_out = pipeline.answer(db, attacked.query);
  ASSERT_TRUE(rag::matches(poisoned_out.answer, attacked.target_answer));
  rag::FeedbackEvent poisoned{"evt-1", attacked.query, poisoned_out.answer, poisoned_out.retrieved.ids()};
  auto r1 = traceback(db, judge, poisoned, 5);
  EXPECT_EQ(as_set(r1.state.flagged_poisoned), ledger.ids_for(attacked.query));
  EXPECT_FALSE(is_non_poisoned_feedback(db, pipeline, poisoned, r1));

  auto wrong_out = pipeline.answer(db, innocent.query);
  ASSERT_EQ(wrong_out.answer, "Quixotl");
  rag::FeedbackEvent model_error{"evt-2", innocent.query, wrong_out.answer, wrong_out.retrieved.ids()};
  auto r2 = traceback(db, judge, model_error, 5);
  EXPECT_TRUE(r2.state.flagged_poisoned.empty());
  EXPECT_TRUE(is_non_poisoned_feedback(db, pipeline, model_error, r2));

  EXPECT_THROW(is_non_poisoned_feedback(db, pipeline, poisoned, r2), PreconditionError);
}
