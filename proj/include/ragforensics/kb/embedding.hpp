#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ragforensics::kb {

struct Embedding {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  double norm() const;
};

enum class SimilarityKind { DotProduct, Cosine };

/// Dot product or cosine similarity. Throws DimensionError on mismatched
/// lengths and DegenerateVector for a zero-norm input under Cosine.
double similarity(const Embedding& u, const Embedding& v, SimilarityKind kind);

/// Text encoder used for both queries and stored texts.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Deterministic hashed bag-of-words: each lower-cased word token adds 1 to
/// bucket fnv1a(token) mod dim, and the result is L2-normalized. Stop words
/// are skipped unless `keep_stop_words` is set; a text with no counted tokens
/// embeds to the zero vector.
class HashedBagOfWordsEmbedder final : public Embedder {
 public:
  explicit HashedBagOfWordsEmbedder(std::size_t dim = 256, bool keep_stop_words = false);

  Embedding embed(std::string_view text) const override;
  std::size_t dimension() const override { return dim_; }

 private:
  std::size_t dim_;
  bool keep_stop_words_;
};

}  // namespace ragforensics::kb
