#include "ragforensics/kb/embedding.hpp"

#include <cmath>
#include <numeric>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::kb {

double Embedding::norm() const {
  return std::sqrt(std::inner_product(values.begin(), values.end(), values.begin(), 0.0));
}

double similarity(const Embedding& u, const Embedding& v, SimilarityKind kind) {
  if (u.dim() != v.dim()) {
    throw DimensionError("embedding dimensions differ: " + std::to_string(u.dim()) +
                         " vs " + std::to_string(v.dim()));
  }
  const double dot = std::inner_product(u.values.begin(), u.values.end(), v.values.begin(), 0.0);
  if (kind == SimilarityKind::DotProduct) return dot;
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw DegenerateVector("zero-norm vector under cosine similarity");
  return dot / (nu * nv);
}

HashedBagOfWordsEmbedder::HashedBagOfWordsEmbedder(std::size_t dim, bool keep_stop_words)
    : dim_(dim), keep_stop_words_(keep_stop_words) {
  if (dim_ == 0) throw InvalidInput("embedding dimension must be positive");
}

Embedding HashedBagOfWordsEmbedder::embed(std::string_view text) const {
  if (text::is_blank(text)) throw InvalidInput("cannot embed empty text");
  Embedding e{std::vector<double>(dim_, 0.0)};
  for (const auto& token : text::word_tokens(text)) {
    if (!keep_stop_words_ && text::is_stop_word(token)) continue;
    e.values[text::fnv1a64(token) % dim_] += 1.0;
  }
  const double n = e.norm();
  // No counted tokens: leave the zero vector; cosine reports it as degenerate.
  if (n > 0.0) {
    for (double& x : e.values) x /= n;
  }
  return e;
}

}  // namespace ragforensics::kb
