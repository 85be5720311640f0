#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "litmine/corpus.hpp"
#include "litmine/embedding.hpp"
#include "litmine/text.hpp"

namespace litmine::extraction {

enum class Strategy { cosine, mmr, max_sum };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct NgramRange {
  std::size_t low = 1;
  std::size_t high = 3;
};

struct SelectionConfig {
  Strategy strategy = Strategy::mmr;
  std::size_t m = 5;
  double alpha = 0.5;
  NgramRange ngram_range{};
  std::vector<std::string> seed_keywords;
  double seed_weight = 0.5;
  std::size_t max_sum_cap = 10;

  /// Throws Error(invalid_argument) for out-of-range settings.
  void validate() const;
};

struct CandidateSet {
  std::string paper_id;
  std::vector<std::string> candidates;  // distinct, first-occurrence order
};

struct ScoredKeyword {
  std::string keyword;
  double score = 0.0;  // cosine similarity to the (steered) document
  friend bool operator==(const ScoredKeyword&, const ScoredKeyword&) = default;
};

struct ExtractionResult {
  std::string paper_id;
  std::vector<ScoredKeyword> selected;
  std::set<std::string> final_keywords;
  Strategy strategy = Strategy::mmr;

  /// No selected keyword survived the library intersection.
  bool unclustered() const { return final_keywords.empty(); }
};

/// All contiguous n-grams of the cleaned abstract with n in range, skipping
/// n-grams that begin or end with a stopword. Throws on an empty abstract.
CandidateSet candidate_tokens(std::string_view abstract, NgramRange range,
                              const text::StopwordSet& stopwords);

/// normalize((1 - w) * doc + w * mean(seeds)). Throws on empty seeds.
embedding::Vector steer_document_embedding(std::span<const float> doc,
                                           std::span<const embedding::Vector> seeds,
                                           double weight);

// The selectors below take candidate embeddings aligned with `candidates`.

/// Top-m by similarity to `doc`; ties keep candidate order.
std::vector<ScoredKeyword> select_cosine(std::span<const std::string> candidates,
                                         std::span<const embedding::Vector> embeddings,
                                         std::span<const float> doc, std::size_t m);

/// Greedy maximal marginal relevance. The first pick maximizes relevance
/// alone (the max over an empty selection counts as zero penalty).
std::vector<ScoredKeyword> select_mmr(std::span<const std::string> candidates,
                                      std::span<const embedding::Vector> embeddings,
                                      std::span<const float> doc, std::size_t m, double alpha);

/// Takes the 2m most relevant candidates and returns the m-subset with the
/// smallest sum of pairwise similarities, ties going to higher total
/// relevance and then to earlier candidates. Output ordered by relevance.
/// Throws Error(invalid_argument, "combinatorial cap exceeded") if m > cap.
std::vector<ScoredKeyword> select_max_sum(std::span<const std::string> candidates,
                                          std::span<const embedding::Vector> embeddings,
                                          std::span<const float> doc, std::size_t m,
                                          std::size_t max_sum_cap = 10);

/// Normalizes each selected keyword and keeps those in the library.
std::set<std::string> finalize_keywords(std::span<const ScoredKeyword> selected,
                                        const corpus::KeywordLibrary& library,
                                        const text::AbbreviationTable& abbreviations);

/// F1 of predicted vs reference keyword sets (0 when either is empty).
double f1_score(const std::set<std::string>& predicted, const std::set<std::string>& reference);

/// Ties together preprocessing, candidate generation, embedding, and
/// selection for one abstract at a time.
class KeywordExtractor {
 public:
  KeywordExtractor(const embedding::EmbeddingProvider& provider,
                   const corpus::KeywordLibrary& library,
                   text::AbbreviationTable abbreviations = text::AbbreviationTable::defaults(),
                   text::StopwordSet stopwords = text::english_stopwords());

  ExtractionResult extract(std::string_view paper_id, std::string_view abstract,
                           const SelectionConfig& config) const;

 private:
  const embedding::EmbeddingProvider& provider_;
  const corpus::KeywordLibrary& library_;
  text::AbbreviationTable abbreviations_;
  text::StopwordSet stopwords_;
};

struct AlphaTuning {
  double best_alpha = 0.0;
  std::vector<std::pair<double, double>> mean_f1;  // (alpha, mean F1) per grid point
};

/// Grid search over alpha: MMR extraction on papers that have author
/// keywords, scored by mean F1 against those keywords. Ties -> smaller alpha.
AlphaTuning tune_alpha(std::span<const corpus::PaperRecord> training,
                       std::span<const double> grid, const KeywordExtractor& extractor,
                       SelectionConfig base, const text::AbbreviationTable& abbreviations);

}  // namespace litmine::extraction
