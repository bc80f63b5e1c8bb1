#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the embedder interface.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ragforensics/kb/document.hpp"
#include "ragforensics/kb/embedding.hpp"

namespace oracle {

struct Ranked {
  std::string id;
  double score;
  std::string source;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine_or_zero(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

// Scores every document, sorts everything, then walks the sorted list keeping
// the first occurrence of each effective id.
inline std::vector<Ranked> top_k(const std::vector<ragforensics::kb::Document>& docs,
                                 const ragforensics::kb::Embedder& embedder, bool cosine,
                                 const std::string& query, std::size_t k,
                                 const std::set<std::string>& exclude) {
  const auto q = embedder.embed(query).values;
  std::vector<Ranked> all;
  for (const auto& d : docs) {
    const std::string effective =
        d.label.kind == ragforensics::kb::LabelKind::Proxy ? d.label.ref : d.id;
    if (exclude.count(d.id) || exclude.count(effective)) continue;
    const auto v = embedder.embed(d.content).values;
    all.push_back({effective, cosine ? cosine_or_zero(q, v) : dot(q, v), d.id});
  }
  std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.id, a.source) < std::tie(b.id, b.source);
  });
  std::vector<Ranked> out;
  std::set<std::string> seen;
  for (const auto& r : all) {
    if (out.size() == k) break;
    if (seen.insert(r.id).second) out.push_back(r);
  }
  return out;
}

// Rates written straight from their definitions; a zero denominator gives 0.
inline double dacc(double tp, double fp, double tn, double fn) {
  const double u = tp + fp + tn + fn;
  return u == 0 ? 0.0 : (tp + tn) / u;
}
inline double fpr(double fp, double tn) { return fp + tn == 0 ? 0.0 : fp / (fp + tn); }
inline double fnr(double fn, double tp) { return fn + tp == 0 ? 0.0 : fn / (fn + tp); }

// Two-sided central interval [lo, hi] of Binomial(n, p) holding at least
// `coverage` of the mass: lo is the largest x with P(X < x) <= alpha/2, hi the
// smallest x with P(X > hi) <= alpha/2.
inline std::pair<std::size_t, std::size_t> binomial_interval(std::size_t n, double p,
                                                             double coverage) {
  const double tail = (1.0 - coverage) / 2.0;
  std::vector<double> pmf(n + 1);
  for (std::size_t x = 0; x <= n; ++x) {
    const double lg = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0);
    pmf[x] = std::exp(lg + x * std::log(p) + (n - x) * std::log1p(-p));
  }
  std::size_t lo = 0;
  double below = 0.0;
  while (lo < n && below + pmf[lo] <= tail) below += pmf[lo++];
  std::size_t hi = n;
  double above = 0.0;
  while (hi > 0 && above + pmf[hi] <= tail) above += pmf[hi--];
  return {lo, hi};
}

}  // namespace oracle
