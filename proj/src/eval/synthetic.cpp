#include "ragforensics/eval/synthetic.hpp"

#include <array>
#include <cstdio>
#include <random>
#include <set>

#include "ragforensics/errors.hpp"
#include "ragforensics/text.hpp"

namespace ragforensics::eval {
namespace {

constexpr std::array<std::string_view, 16> kRelations = {
    "capital city",   "founding ruler", "chief export",  "patron saint",
    "oldest guild",   "river port",     "native dialect", "ancient rival",
    "royal emblem",   "harvest festival", "famous poet",  "mountain pass",
    "sacred grove",   "trade partner",  "war general",   "master builder"};

constexpr std::array<std::string_view, 96> kFiller = {
    "river",    "market",   "ancient",  "harbor",   "festival", "merchants", "winter",
    "stone",    "bridge",   "valley",   "lantern",  "copper",   "weavers",   "orchard",
    "northern", "southern", "coastal",  "tower",    "library",  "scholars",  "caravan",
    "meadow",   "granite",  "pottery",  "bells",    "quiet",    "crowded",   "village",
    "farmers",  "pilgrims", "summer",   "autumn",   "spring",   "wooden",    "painted",
    "gardens",  "fountain", "castle",   "chapel",   "sailors",  "fishing",   "timber",
    "wool",     "salt",     "grain",    "horses",   "roads",    "walls",     "gates",
    "square",   "courtyard", "archive", "legends",  "songs",    "dances",    "travelers",
    "visitors", "traders",  "craftsmen", "hills",   "forests",  "lakes",     "cliffs",
    "islands",  "marshes",  "plains",   "rainy",    "sunny",    "windy",     "misty",
    "historic", "modern",   "famous",   "humble",   "busy",     "peaceful",  "renowned",
    "elders",   "children", "families", "guards",   "monks",    "nobles",    "artisans",
    "silver",   "golden",   "iron",     "marble",   "clay",     "linen",     "spices",
    "tea",      "honey",    "olives",   "wine",     "bread"};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

class WordForge {
 public:
  explicit WordForge(std::uint64_t seed) : rng_(seed) {
    for (auto w : kFiller) used_.insert(std::string(w));
  }

  // Six-letter CVCVCV word, capitalized, never repeated.
  std::string fresh() {
    for (;;) {
      std::string w;
      for (int i = 0; i < 3; ++i) {
        w.push_back(kConsonants[rng_() % kConsonants.size()]);
        w.push_back(kVowels[rng_() % kVowels.size()]);
      }
      if (text::is_stop_word(w) || !used_.insert(w).second) continue;
      w[0] = static_cast<char>(w[0] - 'a' + 'A');
      return w;
    }
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::set<std::string> used_;
};

std::string filler(WordForge& forge, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out.push_back(' ');
    out += kFiller[forge.rng()() % kFiller.size()];
  }
  if (!out.empty()) {
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
    out.push_back('.');
  }
  return out;
}

std::string statement(std::size_t variant, std::string_view entity, std::string_view relation,
                      std::string_view value) {
  std::string e(entity);
  std::string r(relation);
  std::string v(value);
  switch (variant % 3) {
    case 0: return "The " + r + " of " + e + " is " + v + ".";
    case 1: return e + " is well known, and its " + r + " is " + v + ".";
    default: return "Records about " + e + " list " + v + " as its " + r + ".";
  }
}

}  // namespace

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.queries * spec.support_per_query > spec.documents) {
    throw InvalidInput("synthetic corpus too small: " + std::to_string(spec.queries) +
                       " queries x " + std::to_string(spec.support_per_query) +
                       " supporting texts exceed " + std::to_string(spec.documents) + " documents");
  }
  WordForge forge(spec.seed);
  SyntheticDataset out;
  std::size_t next_id = 0;
  auto add_doc = [&](std::string content) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doc-%05zu", next_id++);
    out.documents.push_back({buf, std::move(content), kb::DocumentLabel::benign(), {}});
  };

  for (std::size_t q = 0; q < spec.queries; ++q) {
    const std::string entity = forge.fresh() + " " + forge.fresh();
    const std::string_view relation = kRelations[q % kRelations.size()];
    rag::QueryRecord rec;
    rec.query = "What is the " + std::string(relation) + " of " + entity + "?";
    rec.correct_answer = forge.fresh();
    rec.target_answer = forge.fresh();
    for (std::size_t s = 0; s < spec.support_per_query; ++s) {
      add_doc(statement(q + s, entity, relation, rec.correct_answer) + " " +
              filler(forge, spec.filler_words));
    }
    out.queries.push_back(std::move(rec));
  }
  while (out.documents.size() < spec.documents) {
    const std::string entity = forge.fresh() + " " + forge.fresh();
    const auto relation = kRelations[forge.rng()() % kRelations.size()];
    add_doc(statement(next_id, entity, relation, forge.fresh()) + " " +
            filler(forge, spec.filler_words));
  }
  return out;
}

}  // namespace ragforensics::eval
