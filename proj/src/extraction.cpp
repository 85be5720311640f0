#include "litmine/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "litmine/error.hpp"

namespace litmine::extraction {
namespace {

using embedding::Vector;

std::vector<double> relevance(std::span<const Vector> embeddings, std::span<const float> doc) {
  std::vector<double> rel(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    rel[i] = embedding::cosine_similarity(embeddings[i], doc);
  }
  return rel;
}

// Candidate indices by relevance descending, ties by index.
std::vector<std::size_t> relevance_order(const std::vector<double>& rel) {
  std::vector<std::size_t> order(rel.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rel[a] > rel[b]; });
  return order;
}

void check_aligned(std::span<const std::string> candidates, std::span<const Vector> embeddings) {
  if (candidates.size() != embeddings.size()) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("{} candidates but {} embeddings", candidates.size(), embeddings.size()));
  }
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::cosine: return "cosine";
    case Strategy::mmr: return "mmr";
    case Strategy::max_sum: return "max_sum";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "cosine") return Strategy::cosine;
  if (name == "mmr") return Strategy::mmr;
  if (name == "max_sum" || name == "maxsum") return Strategy::max_sum;
  throw Error(ErrorCode::invalid_argument,
              fmt::format("unknown strategy '{}' (expected cosine, mmr, max_sum)", name));
}

void SelectionConfig::validate() const {
  if (m < 1) throw Error(ErrorCode::invalid_argument, "m must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::invalid_argument, "alpha must be in [0, 1]");
  if (ngram_range.low < 1 || ngram_range.low > ngram_range.high) {
    throw Error(ErrorCode::invalid_argument, "ngram range must satisfy 1 <= low <= high");
  }
  if (!(seed_weight >= 0.0 && seed_weight <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "seed_weight must be in [0, 1]");
  }
  if (strategy == Strategy::max_sum && m > max_sum_cap) {
    throw Error(ErrorCode::invalid_argument, "combinatorial cap exceeded");
  }
}

CandidateSet candidate_tokens(std::string_view abstract, NgramRange range,
                              const text::StopwordSet& stopwords) {
  const auto words = text::split_words(abstract);
  if (words.empty()) throw Error(ErrorCode::invalid_argument, "empty abstract");
  if (range.low < 1 || range.low > range.high) {
    throw Error(ErrorCode::invalid_argument, "ngram range must satisfy 1 <= low <= high");
  }
  CandidateSet set;
  std::unordered_set<std::string> seen;
  for (std::size_t n = range.low; n <= range.high; ++n) {
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      if (stopwords.contains(words[i]) || stopwords.contains(words[i + n - 1])) continue;
      std::string gram = words[i];
      for (std::size_t j = i + 1; j < i + n; ++j) {
        gram += ' ';
        gram += words[j];
      }
      if (seen.insert(gram).second) set.candidates.push_back(std::move(gram));
    }
  }
  return set;
}

Vector steer_document_embedding(std::span<const float> doc, std::span<const Vector> seeds,
                                double weight) {
  if (seeds.empty()) throw Error(ErrorCode::invalid_argument, "no seed embeddings");
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "seed weight must be in [0, 1]");
  }
  std::vector<double> mean(doc.size(), 0.0);
  for (const auto& s : seeds) {
    if (s.size() != doc.size()) throw Error(ErrorCode::invalid_argument, "seed dimension mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  Vector mixed(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    mixed[i] = static_cast<float>((1.0 - weight) * doc[i] +
                                  weight * mean[i] / static_cast<double>(seeds.size()));
  }
  return embedding::l2_normalize(mixed);
}

std::vector<ScoredKeyword> select_cosine(std::span<const std::string> candidates,
                                         std::span<const Vector> embeddings,
                                         std::span<const float> doc, std::size_t m) {
  check_aligned(candidates, embeddings);
  const auto rel = relevance(embeddings, doc);
  const auto order = relevance_order(rel);
  std::vector<ScoredKeyword> out;
  for (std::size_t i = 0; i < order.size() && out.size() < m; ++i) {
    out.push_back({candidates[order[i]], rel[order[i]]});
  }
  return out;
}

std::vector<ScoredKeyword> select_mmr(std::span<const std::string> candidates,
                                      std::span<const Vector> embeddings,
                                      std::span<const float> doc, std::size_t m, double alpha) {
  check_aligned(candidates, embeddings);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::invalid_argument, "alpha must be in [0, 1]");
  const std::size_t n = candidates.size();
  const auto rel = relevance(embeddings, doc);

  std::vector<bool> taken(n, false);
  std::vector<double> max_sim(n, 0.0);  // max similarity to the selected set
  std::vector<ScoredKeyword> out;
  while (out.size() < std::min(m, n)) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double score = out.empty() ? rel[i] : (1.0 - alpha) * rel[i] - alpha * max_sim[i];
      if (best == n || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    out.push_back({candidates[best], rel[best]});
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double s = embedding::cosine_similarity(embeddings[i], embeddings[best]);
      max_sim[i] = out.size() == 1 ? s : std::max(max_sim[i], s);
    }
  }
  return out;
}

std::vector<ScoredKeyword> select_max_sum(std::span<const std::string> candidates,
                                          std::span<const Vector> embeddings,
                                          std::span<const float> doc, std::size_t m,
                                          std::size_t max_sum_cap) {
  check_aligned(candidates, embeddings);
  if (m > max_sum_cap) throw Error(ErrorCode::invalid_argument, "combinatorial cap exceeded");
  if (candidates.empty() || m == 0) return {};
  const auto rel = relevance(embeddings, doc);
  const auto order = relevance_order(rel);
  const std::size_t pool_size = std::min(order.size(), 2 * m);
  std::vector<std::size_t> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pool_size));

  auto emit = [&](std::vector<std::size_t> chosen) {
    std::stable_sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
      return rel[a] > rel[b] || (rel[a] == rel[b] && a < b);
    });
    std::vector<ScoredKeyword> out;
    for (auto i : chosen) out.push_back({candidates[i], rel[i]});
    return out;
  };
  if (pool_size <= m) return emit(pool);

  std::vector<double> sim(pool_size * pool_size, 0.0);
  for (std::size_t a = 0; a < pool_size; ++a) {
    for (std::size_t b = a + 1; b < pool_size; ++b) {
      sim[a * pool_size + b] = sim[b * pool_size + a] =
          embedding::cosine_similarity(embeddings[pool[a]], embeddings[pool[b]]);
    }
  }

  std::vector<std::size_t> combo(m);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  std::vector<std::size_t> best_ids;
  double best_sum = 0.0;
  double best_rel = 0.0;
  while (true) {
    double s = 0.0;
    double r = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      r += rel[pool[combo[x]]];
      for (std::size_t y = x + 1; y < m; ++y) s += sim[combo[x] * pool_size + combo[y]];
    }
    std::vector<std::size_t> ids(m);
    for (std::size_t x = 0; x < m; ++x) ids[x] = pool[combo[x]];
    std::sort(ids.begin(), ids.end());
    const bool better = best_ids.empty() || s < best_sum ||
                        (s == best_sum && (r > best_rel || (r == best_rel && ids < best_ids)));
    if (better) {
      best_ids = std::move(ids);
      best_sum = s;
      best_rel = r;
    }
    // Next combination in lexicographic order.
    std::size_t i = m;
    while (i > 0 && combo[i - 1] == pool_size - m + (i - 1)) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < m; ++j) combo[j] = combo[j - 1] + 1;
  }
  return emit(best_ids);
}

std::set<std::string> finalize_keywords(std::span<const ScoredKeyword> selected,
                                        const corpus::KeywordLibrary& library,
                                        const text::AbbreviationTable& abbreviations) {
  std::set<std::string> out;
  for (const auto& s : selected) {
    auto kw = text::normalize_keyword(s.keyword, abbreviations);
    if (!kw.empty() && library.contains(kw)) out.insert(std::move(kw));
  }
  return out;
}

double f1_score(const std::set<std::string>& predicted, const std::set<std::string>& reference) {
  if (predicted.empty() || reference.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : predicted) hits += reference.count(p);
  if (hits == 0) return 0.0;
  const double precision = static_cast<double>(hits) / static_cast<double>(predicted.size());
  const double recall = static_cast<double>(hits) / static_cast<double>(reference.size());
  return 2.0 * precision * recall / (precision + recall);
}

KeywordExtractor::KeywordExtractor(const embedding::EmbeddingProvider& provider,
                                   const corpus::KeywordLibrary& library,
                                   text::AbbreviationTable abbreviations,
                                   text::StopwordSet stopwords)
    : provider_(provider),
      library_(library),
      abbreviations_(std::move(abbreviations)),
      stopwords_(std::move(stopwords)) {}

ExtractionResult KeywordExtractor::extract(std::string_view paper_id, std::string_view abstract,
                                           const SelectionConfig& config) const {
  config.validate();
  ExtractionResult result;
  result.paper_id = std::string(paper_id);
  result.strategy = config.strategy;

  const auto cleaned = text::preprocess_abstract(abstract, abbreviations_);
  if (cleaned.empty()) return result;
  const auto candidates = candidate_tokens(cleaned, config.ngram_range, stopwords_).candidates;
  if (candidates.empty()) return result;

  auto doc = provider_.embed(cleaned);
  std::vector<std::string> seeds;
  for (const auto& s : config.seed_keywords) {
    if (auto kw = text::normalize_keyword(s, abbreviations_); !kw.empty()) seeds.push_back(std::move(kw));
  }
  if (!seeds.empty()) {
    doc = steer_document_embedding(doc, provider_.embed_batch(seeds), config.seed_weight);
  }
  const auto vectors = provider_.embed_batch(candidates);

  switch (config.strategy) {
    case Strategy::cosine:
      result.selected = select_cosine(candidates, vectors, doc, config.m);
      break;
    case Strategy::mmr:
      result.selected = select_mmr(candidates, vectors, doc, config.m, config.alpha);
      break;
    case Strategy::max_sum:
      result.selected = select_max_sum(candidates, vectors, doc, config.m, config.max_sum_cap);
      break;
  }
  result.final_keywords = finalize_keywords(result.selected, library_, abbreviations_);
  return result;
}

AlphaTuning tune_alpha(std::span<const corpus::PaperRecord> training, std::span<const double> grid,
                       const KeywordExtractor& extractor, SelectionConfig base,
                       const text::AbbreviationTable& abbreviations) {
  if (grid.empty()) throw Error(ErrorCode::invalid_argument, "alpha grid is empty");
  std::vector<const corpus::PaperRecord*> usable;
  for (const auto& p : training) {
    if (p.has_author_keywords() && p.abstract.find_first_not_of(" \t\r\n") != std::string::npos) {
      usable.push_back(&p);
    }
  }
  if (usable.empty()) throw Error(ErrorCode::invalid_argument, "no training papers with author keywords");

  base.strategy = Strategy::mmr;
  AlphaTuning tuning;
  double best_f1 = -1.0;
  for (double alpha : grid) {
    base.alpha = alpha;
    double total = 0.0;
    for (const auto* p : usable) {
      const auto res = extractor.extract(p->identifier, p->abstract, base);
      total += f1_score(res.final_keywords, corpus::paper_keywords(*p, abbreviations));
    }
    const double mean = total / static_cast<double>(usable.size());
    tuning.mean_f1.emplace_back(alpha, mean);
    if (mean > best_f1 || (mean == best_f1 && alpha < tuning.best_alpha)) {
      best_f1 = mean;
      tuning.best_alpha = alpha;
    }
  }
  return tuning;
}

}  // namespace litmine::extraction
