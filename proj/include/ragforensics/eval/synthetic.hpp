#pragma once

#include <cstdint>
#include <vector>

#include "ragforensics/kb/document.hpp"
#include "ragforensics/rag/pipeline.hpp"

namespace ragforensics::eval {

struct SyntheticSpec {
  std::size_t documents = 200;
  std::size_t queries = 50;
  std::size_t support_per_query = 2;  // documents stating each queried fact
  std::size_t filler_words = 20;
  std::uint64_t seed = 7;
};

struct SyntheticDataset {
  std::vector<kb::Document> documents;
  std::vector<rag::QueryRecord> queries;
};

/// Seeded subject-relation-object corpus. Entities and answers are invented
/// words that are unique across the dataset, so an answer string never occurs
/// by accident in another text. Each queried fact is stated by
/// `support_per_query` documents; the rest are distractor facts about other
/// entities. Every text is padded with filler words.
SyntheticDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace ragforensics::eval
