#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "litmine/association.hpp"
#include "litmine/embedding.hpp"
#include "litmine/extraction.hpp"
#include "litmine/service.hpp"

namespace litmine::pipeline {

struct Paths {
  std::string work_dir = "work";
  std::string corpus = "corpus.jsonl";
  std::string library = "library.json";
  std::string keyword_embeddings = "keywords.lmeb";
  std::string clustering = "clustering.json";
  std::string rules = "rules.json";
  std::string rules_csv = "rules.csv";
  std::string index = "index.lmix";
  std::string vectors = "vectors.lmrv";
  std::string abbreviations;  // empty: built-in table
  std::string stopwords;      // empty: built-in list
  std::string static_dir;     // empty: API only
  friend bool operator==(const Paths&, const Paths&) = default;
};

struct ProviderConfig {
  std::string mode = "hash";  // hash | precomputed | remote
  std::size_t dimension = 384;
  std::uint64_t seed = 0;     // hash provider only
  std::string path;           // precomputed store
  std::string base_url;       // remote
  std::string endpoint = "/embed";
  std::string model;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

struct ExtractionConfig {
  std::string strategy = "mmr";
  std::size_t m = 5;
  double alpha = 0.5;
  std::size_t ngram_low = 1;
  std::size_t ngram_high = 3;
  std::vector<std::string> seed_keywords;
  double seed_weight = 0.5;
  std::vector<double> alpha_grid;  // non-empty: tune alpha first
  bool all_papers = false;         // also re-extract papers with author keywords
  friend bool operator==(const ExtractionConfig&, const ExtractionConfig&) = default;
};

struct ClusterConfig {
  std::size_t k = 30;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  std::vector<std::string> labels;
  friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

struct IndexConfig {
  std::size_t nlist = 0;  // 0: round(sqrt(N))
  std::size_t b = 8;
  std::size_t ksub = 256;
  std::size_t tau = 8;
  bool keep_vectors = true;
  friend bool operator==(const IndexConfig&, const IndexConfig&) = default;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  friend bool operator==(const ServerConfig&, const ServerConfig&) = default;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  Paths paths;
  ProviderConfig provider;
  ExtractionConfig extraction;
  ClusterConfig clustering;
  association::RuleFilter rules;
  IndexConfig index;
  ServerConfig server;
  std::filesystem::path base_dir = ".";  // relative paths resolve here; not serialized

  nlohmann::ordered_json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  /// Parse errors carry the line number.
  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::filesystem::path resolve(const std::string& p) const;
  /// Artifact path inside the work directory.
  std::filesystem::path artifact(const std::string& name) const;
  service::StatePaths state_paths() const;
};

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

std::unique_ptr<embedding::EmbeddingProvider> make_provider(const PipelineConfig& config);

/// Per-stage seed derived from the global seed and the stage name.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

/// Exclusive lock file in the work directory, held for the object's lifetime.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& dir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::filesystem::path path_;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::ostream& out, bool verbose = false);

  const PipelineConfig& config() const { return config_; }

  void ingest(const std::vector<std::filesystem::path>& files);
  void extract();
  void cluster();
  void mine();
  void index();
  /// JSON body identical to GET /api/search for the same request.
  std::string search(const service::QueryRequest& request);
  void report();
  void serve();

  std::shared_ptr<const service::State> load_state() const;

 private:
  void require(const std::string& artifact, std::string_view stage) const;
  void log(std::string_view message) const;
  const embedding::EmbeddingProvider& provider() const;
  text::AbbreviationTable abbreviations() const;
  text::StopwordSet stopwords() const;

  PipelineConfig config_;
  std::ostream& out_;
  bool verbose_;
  mutable std::shared_ptr<embedding::EmbeddingProvider> provider_;  // created on first use
};

}  // namespace litmine::pipeline
