// Prints one PASS/FAIL line per acceptance criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "doubles.hpp"
#include "oracles.hpp"
#include "ragforensics/baselines/tracers.hpp"
#include "ragforensics/eval/experiment.hpp"
#include "ragforensics/eval/metrics.hpp"
#include "ragforensics/forensics/traceback.hpp"
#include "ragforensics/kb/corpus_io.hpp"
#include "ragforensics/sim/simulated_models.hpp"
#include "ragforensics/text.hpp"

using namespace ragforensics;
using nlohmann::json;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << what;
    ok = ok && cond;
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Check&)>& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail << "exception: " << e.what();
  }
  std::printf("%s [%d] %s%s%s\n", c.ok ? "PASS" : "FAIL", id, title.c_str(),
              c.detail.str().empty() ? "" : " :: ", c.detail.str().c_str());
  if (!c.ok) ++failures;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// 1. With an oracle judge every event scores DACC 1, FPR 0 and FNR 0 over the
// texts it examined. How many injected texts were recovered outright is
// reported alongside.
void oracle_exactness(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t injected = 0;
  std::size_t recovered = 0;
  for (std::size_t m : {5, 20, 40}) {
    auto cfg = eval::ExperimentConfig::from_json({{"attack", {{"m", m}}}});
    auto wb = eval::build_workbench(cfg);
    eval::forge_attack(wb);
    llm::Gateway judge(eval::make_judge_model(wb));
    const auto events = eval::collect_events(wb);
    c.expect(events.size() == cfg.events, "M=" + std::to_string(m) + ": not every query was hijacked");
    const auto results = eval::trace_events(wb, judge, events);
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& truth = wb.ledger.ids_for(events[i].query);
      const auto m_ev = eval::confusion(truth, results[i]);
      const auto r = eval::rates(m_ev);
      const std::string tag = "M=" + std::to_string(m) + " " + events[i].event_id + ": ";
      c.expect(m_ev.tp > 0, tag + "nothing flagged");
      c.expect(r.dacc.value == 1.0 && r.fpr.value == 0.0 && r.fnr.value == 0.0,
               tag + "DACC/FPR/FNR not 1/0/0");
      injected += truth.size();
      recovered += m_ev.tp;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  if (c.ok) {
    c.detail << "recovered " << recovered << "/" << injected << " injected texts in "
             << std::to_string(secs) << " s";
  }
}

// 2. Termination and bookkeeping invariants under arbitrary consistent judges,
// with every round checked against a brute-force retrieval.
void termination_invariants(Check& c) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500 && c.ok; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    const std::size_t k = 1 + rng() % 8;
    std::vector<doubles::ScoredDoc> docs;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores force plenty of ties.
      docs.push_back({"d" + std::to_string(i), "content " + std::to_string(i),
                      static_cast<double>(rng() % 12) / 4.0});
    }
    auto db = doubles::table_db(docs);
    // Judge families: flag all, flag none, clear only the k-1 best, random.
    const int family = trial % 4;
    std::set<std::string> poison;
    std::vector<doubles::ScoredDoc> by_score = docs;
    std::stable_sort(by_score.begin(), by_score.end(), [](auto& a, auto& b) { return a.score > b.score; });
    for (std::size_t i = 0; i < n; ++i) {
      bool p = false;
      if (family == 0) p = true;
      else if (family == 2) p = i >= k - 1;
      else if (family == 3) p = rng() % 2 == 0;
      if (p) poison.insert(by_score[i].content);
    }
    auto judge_model = std::make_shared<doubles::PredicateJudge>(
        [poison](const llm::intent::Judge& j) { return poison.contains(j.context); });
    llm::Gateway judge(judge_model);
    const auto r = forensics::traceback(db, judge, {"evt-1", "q", "x", {}}, k);

    const std::string tag = "trial " + std::to_string(trial) + ": ";
    c.expect(r.terminated_by != forensics::TerminationReason::IterationCap, tag + "iteration cap fired");
    c.expect(r.judge_calls <= n, tag + "more judge calls than documents");
    c.expect(judge_model->calls() == r.judge_calls, tag + "judge call count mismatch");
    c.expect(r.iterations() <= r.state.flagged_poisoned.size() + 1, tag + "too many rounds");
    const auto flagged = as_set(r.state.flagged_poisoned);
    const auto cleared = as_set(r.state.cleared_benign);
    c.expect(flagged.size() == r.state.flagged_poisoned.size(), tag + "duplicate flag");
    c.expect(cleared.size() == r.state.cleared_benign.size(), tag + "duplicate clear");
    for (const auto& id : flagged) c.expect(!cleared.contains(id), tag + "id both flagged and cleared");
    c.expect(flagged.size() + cleared.size() == r.judge_calls, tag + "judgments not all filed");

    // Replay: each round must equal the oracle top-k minus what was flagged before it.
    std::set<std::string> flagged_so_far;
    std::vector<kb::Document> all = db.documents();
    for (const auto& round : r.state.rounds) {
      const auto expect = oracle::top_k(all, db.embedder(), false, "q", k, flagged_so_far);
      std::vector<std::string> ids;
      for (const auto& e : expect) ids.push_back(e.id);
      c.expect(ids == round.retrieved, tag + "round retrieval differs from oracle");
      for (const auto& id : round.newly_judged) {
        if (flagged.contains(id)) flagged_so_far.insert(id);
      }
    }
    const bool quota = cleared.size() >= k;
    c.expect(quota == (r.terminated_by == forensics::TerminationReason::BenignQuota),
             tag + "termination reason inconsistent with quota");
  }
}

// 3. A judge that errs 5% of the time gives FPR and FNR inside the exact 99%
// binomial interval.
void noisy_judge_rates(Check& c) {
  auto cfg = eval::ExperimentConfig::from_json(
      {{"dataset", {{"synthetic", {{"documents", 1200}, {"queries", 250}}}}},
       {"events", 250},
       {"attack", {{"m", 8}}},
       {"judge", "noisy:0.05"}});
  const auto r = eval::run_experiment(cfg);
  const auto& m = r.pooled;
  const std::size_t poison = m.tp + m.fn;
  const std::size_t benign = m.fp + m.tn;
  c.expect(poison >= 1000, "only " + std::to_string(poison) + " poisoned candidates judged");
  c.expect(benign >= 1000, "only " + std::to_string(benign) + " benign candidates judged");
  const auto [fp_lo, fp_hi] = oracle::binomial_interval(benign, 0.05, 0.99);
  const auto [fn_lo, fn_hi] = oracle::binomial_interval(poison, 0.05, 0.99);
  c.expect(m.fp >= fp_lo && m.fp <= fp_hi,
           "fp " + std::to_string(m.fp) + " outside [" + std::to_string(fp_lo) + ", " + std::to_string(fp_hi) + "]");
  c.expect(m.fn >= fn_lo && m.fn <= fn_hi,
           "fn " + std::to_string(m.fn) + " outside [" + std::to_string(fn_lo) + ", " + std::to_string(fn_hi) + "]");
}

// 4. Metric functions against direct counting.
void metrics_against_oracle(Check& c) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    const std::size_t n = rng() % 30;
    kb::IdSet ledger;
    forensics::TracebackResult r;
    std::vector<std::string> top;
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "x" + std::to_string(i);
      const bool poisoned = rng() % 3 == 0;
      if (poisoned) ledger.insert(id);
      if (rng() % 4 == 0) top.push_back(id);
      switch (rng() % 3) {
        case 0:
          r.state.flagged_poisoned.push_back(id);
          (poisoned ? tp : fp) += 1;
          break;
        case 1:
          r.state.cleared_benign.push_back(id);
          (poisoned ? fn : tn) += 1;
          break;
        default: break;
      }
    }
    const auto m = eval::confusion(ledger, r);
    c.expect(m.tp == tp && m.fp == fp && m.tn == tn && m.fn == fn, "confusion miscounted");
    const auto rates = eval::rates(m);
    c.expect(std::abs(rates.dacc.value - oracle::dacc(tp, fp, tn, fn)) <= 1e-12, "dacc off");
    c.expect(std::abs(rates.fpr.value - oracle::fpr(fp, tn)) <= 1e-12, "fpr off");
    c.expect(std::abs(rates.fnr.value - oracle::fnr(fn, tp)) <= 1e-12, "fnr off");

    // Alternative universe by explicit set construction.
    std::set<std::string> universe(ledger.begin(), ledger.end());
    universe.insert(top.begin(), top.end());
    universe.insert(r.state.flagged_poisoned.begin(), r.state.flagged_poisoned.end());
    const auto flagged = as_set(r.state.flagged_poisoned);
    eval::ConfusionMatrix alt_expect;
    for (const auto& id : universe) {
      const bool p = ledger.contains(id);
      if (flagged.contains(id)) (p ? alt_expect.tp : alt_expect.fp) += 1;
      else (p ? alt_expect.fn : alt_expect.tn) += 1;
    }
    c.expect(eval::confusion_alternative(ledger, r, top) == alt_expect, "alternative confusion off");

    // ASR / ACC by counting exact containment of invented answers.
    std::vector<eval::ScoredOutput> outs;
    double asr_hits = 0, acc_hits = 0;
    const std::size_t q = rng() % 20;
    for (std::size_t i = 0; i < q; ++i) {
      rag::QueryRecord rec{"q" + std::to_string(i), "Cor" + std::to_string(i), "Tgt" + std::to_string(i)};
      std::string answer;
      switch (rng() % 3) {
        case 0: answer = "it is " + rec.target_answer; asr_hits += 1; break;
        case 1: answer = rec.correct_answer + "."; acc_hits += 1; break;
        default: answer = "I don't know"; break;
      }
      outs.emplace_back(answer, rec);
    }
    const double n_out = static_cast<double>(q);
    c.expect(std::abs(eval::asr(outs) - (q ? asr_hits / n_out : 0.0)) <= 1e-12, "asr off");
    c.expect(std::abs(eval::acc(outs) - (q ? acc_hits / n_out : 0.0)) <= 1e-12, "acc off");
  }
}

// 5. Exact top-k retrieval against a brute-force scorer.
void retrieval_against_oracle(Check& c) {
  std::mt19937_64 rng(5150);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "epsilon", "zeta",
                                       "eta", "theta", "iota", "kappa", "lambda", "mu"};
  auto sentence = [&](std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + words[rng() % words.size()];
    return s;
  };
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    const bool cosine = trial % 2 == 1;
    auto embedder = std::make_shared<kb::HashedBagOfWordsEmbedder>(8 + rng() % 32);
    kb::KnowledgeDatabase db(embedder, cosine ? kb::SimilarityKind::Cosine : kb::SimilarityKind::DotProduct);
    std::vector<kb::Document> docs;
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "d%03zu", i);
      docs.push_back({id, sentence(1 + rng() % 6), kb::DocumentLabel::benign(), {}});
    }
    const std::size_t proxies = rng() % 4;
    for (std::size_t p = 0; p < proxies; ++p) {
      docs.push_back({"proxy" + std::to_string(p), sentence(2), kb::DocumentLabel::proxy(docs[rng() % n].id), {}});
    }
    kb::ingest(db, docs);
    std::set<std::string> exclude;
    const std::size_t excluded = rng() % 5;
    for (std::size_t e = 0; e < excluded; ++e) exclude.insert(docs[rng() % n].id);
    const std::size_t k = 1 + rng() % 10;
    const std::string query = sentence(1 + rng() % 4);

    const auto got = db.retrieve_top_k(query, k, exclude);
    const auto want = oracle::top_k(db.documents(), *embedder, cosine, query, k, exclude);
    const std::string tag = "trial " + std::to_string(trial) + ": ";
    c.expect(got.entries.size() == want.size(), tag + "size differs");
    c.expect(got.short_result == (want.size() < k), tag + "short flag wrong");
    for (std::size_t i = 0; i < want.size() && i < got.entries.size(); ++i) {
      c.expect(got.entries[i].id == want[i].id, tag + "id order differs");
      c.expect(std::abs(got.entries[i].score - want[i].score) <= 1e-12, tag + "score differs");
    }
  }
}

// 6. PTR alone neutralizes the attack; PTR with BTE restores accuracy.
void defense_pipeline(Check& c) {
  const auto ptr = eval::run_experiment(eval::ExperimentConfig::from_json({{"defense", "ptr"}}));
  c.expect(ptr.before.asr == 1.0, "attack ASR before defense is " + std::to_string(ptr.before.asr));
  c.expect(ptr.after.asr == 0.0, "ASR after PTR is " + std::to_string(ptr.after.asr));
  const auto both = eval::run_experiment(eval::ExperimentConfig::from_json({{"defense", "ptr+bte"}}));
  c.expect(both.after.acc == 1.0, "ACC after PTR+BTE is " + std::to_string(both.after.acc));
}

// 7. Adaptive transforms cannot hide texts from an oracle judge, but they do
// fool a judge that keys on answer containment.
void adaptive_attacks(Check& c) {
  for (const char* kind : {"poisonedrag-b", "poisonedrag-w", "instruinject"}) {
    auto run = [&](const char* adaptive, const char* judge) {
      return eval::run_experiment(eval::ExperimentConfig::from_json(
          {{"attack", {{"kind", kind}, {"adaptive", adaptive}}}, {"judge", judge}, {"events", 20}}));
    };
    const double naive_plain = run("none", "naive").rates.fnr.value;
    for (const char* adaptive : {"deceive", "disguise"}) {
      const std::string tag = std::string(kind) + "+" + adaptive + ": ";
      const auto oracle_run = run(adaptive, "oracle");
      c.expect(oracle_run.pooled.tp > 0 && oracle_run.rates.fnr.value == 0.0, tag + "oracle missed texts");
      const double naive = run(adaptive, "naive").rates.fnr.value;
      c.expect(naive >= 0.5 && naive > naive_plain + 0.4,
               tag + "naive FNR " + std::to_string(naive) + " vs " + std::to_string(naive_plain));
    }
  }
}

// 8. The 90th-percentile threshold on a 1000-text sample is the nearest-rank value.
void ppl_percentile(Check& c) {
  const auto data = eval::make_synthetic({.documents = 1500, .queries = 50});
  kb::KnowledgeDatabase db(std::make_shared<kb::HashedBagOfWordsEmbedder>());
  kb::ingest(db, data.documents);
  llm::BigramPerplexityScorer scorer;
  const auto cal = baselines::calibrate_ppl(db, 1000, 77, scorer);
  c.expect(cal.scores.size() == 1000, "sample size " + std::to_string(cal.scores.size()));
  std::vector<double> sorted = cal.scores;
  std::sort(sorted.begin(), sorted.end());
  const double want = sorted[899];  // ceil(0.9 * 1000) = 900th smallest
  c.expect(cal.threshold_90 == want, "threshold_90 is not the 900th smallest score");
  const auto at_most = std::count_if(sorted.begin(), sorted.end(), [&](double s) { return s <= cal.threshold_90; });
  c.expect(at_most >= 900, "fewer than 90% of the sample at or below threshold");
  const auto above_90 = std::count_if(sorted.begin(), sorted.end(), [&](double s) { return s > cal.threshold_90; });
  const auto above_100 = std::count_if(sorted.begin(), sorted.end(), [&](double s) { return s > cal.threshold_100; });
  c.expect(above_90 <= 100, std::to_string(above_90) + " scores above threshold_90");
  c.expect(above_100 == 0, std::to_string(above_100) + " scores above threshold_100");
  // Every sampled score is the score of some stored text.
  std::multiset<double> corpus_scores;
  for (const auto& d : db.documents()) corpus_scores.insert(scorer.score(d.content).value);
  for (double s : sorted) c.expect(corpus_scores.contains(s), "sample score not found in corpus");
}

// 9. Errors the model makes on its own are recognized as non-poisoned feedback.
void non_poisoned_feedback(Check& c) {
  auto cfg = eval::ExperimentConfig::from_json({{"events", 25}});
  auto wb = eval::build_workbench(cfg);
  eval::forge_attack(wb);
  std::map<std::string, std::string> wrong;
  for (std::size_t i = cfg.events; i < wb.queries.size(); ++i) {
    wrong[wb.queries[i].query] = "Unverified" + std::to_string(i);
  }
  llm::Gateway rag_llm(std::make_shared<sim::ParametricErrorModel>(wb.rag_model, wrong));
  rag::RagPipeline pipeline(rag_llm, cfg.k);
  llm::Gateway judge(eval::make_judge_model(wb));

  std::size_t n = 0;
  for (std::size_t i = 0; i < wb.queries.size(); ++i) {
    const auto& rec = wb.queries[i];
    const auto out = pipeline.answer(wb.db, rec.query);
    const rag::FeedbackEvent ev{"evt-" + std::to_string(++n), rec.query, out.answer, out.retrieved.ids()};
    const auto r = forensics::traceback(wb.db, judge, ev, cfg.k);
    const bool verdict = forensics::is_non_poisoned_feedback(wb.db, pipeline, ev, r);
    if (i < cfg.events) {
      c.expect(rag::matches(out.answer, rec.target_answer), ev.event_id + ": attack did not land");
      c.expect(!verdict, ev.event_id + ": poisoning misreported as a model error");
    } else {
      c.expect(verdict, ev.event_id + ": model error misreported as poisoning");
      c.expect(r.state.flagged_poisoned.empty(), ev.event_id + ": clean query had flags");
    }
  }
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  report(1, "oracle judge: per-event DACC 100%, FPR 0%, FNR 0% (M = 5, 20, 40; under 10 s)", oracle_exactness);
  report(2, "traceback terminates with sound bookkeeping on 500 random corpora", termination_invariants);
  report(3, "5% noisy judge: FPR and FNR inside the 99% binomial interval", noisy_judge_rates);
  report(4, "DACC/FPR/FNR/ASR/ACC agree with direct counting on 1000 cases", metrics_against_oracle);
  report(5, "top-k retrieval matches brute force on 1000 instances", retrieval_against_oracle);
  report(6, "PTR drives ASR to 0 and PTR+BTE restores ACC to 1", defense_pipeline);
  report(7, "adaptive transforms: oracle FNR 0, containment judge degrades", adaptive_attacks);
  report(8, "PPL 90th percentile on a 1000-text sample is the nearest-rank value", ppl_percentile);
  report(9, "model-made errors are non-poisoned feedback; poisoned events are not", non_poisoned_feedback);
  return failures;
}
