#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "litmine/association.hpp"
#include "litmine/clustering.hpp"
#include "litmine/corpus.hpp"
#include "litmine/embedding.hpp"
#include "litmine/error.hpp"
#include "litmine/ivfpq.hpp"
#include "litmine/text.hpp"

namespace httplib {
class Server;
}

namespace litmine::service {

/// Files the service reads at startup and on reload.
struct StatePaths {
  std::filesystem::path corpus;
  std::filesystem::path library;
  std::filesystem::path clustering;
  std::filesystem::path keyword_embeddings;
  std::filesystem::path rules;
  std::filesystem::path index;
};

/// Everything a request can see. Immutable once built.
struct State {
  std::vector<corpus::PaperRecord> papers;  // index-id order
  std::vector<std::size_t> by_identifier;   // positions in `papers`, sorted by identifier
  corpus::KeywordLibrary library;
  clustering::Clustering clustering;
  clustering::EmbeddingMap keyword_embeddings;
  std::vector<association::AssociationRule> rules;
  vindex::IvfPqIndex index;
  std::shared_ptr<const embedding::EmbeddingProvider> provider;
  text::AbbreviationTable abbreviations;

  const corpus::PaperRecord* find(std::string_view identifier) const;
};

std::shared_ptr<const State> load_state(const StatePaths& paths,
                                        std::shared_ptr<const embedding::EmbeddingProvider> provider,
                                        text::AbbreviationTable abbreviations);

struct Filters {
  std::optional<int> year_from;
  std::optional<int> year_to;
  std::optional<std::string> subtype;
  std::set<int> clusters;  // any-of

  bool empty() const { return !year_from && !year_to && !subtype && clusters.empty(); }
  bool accepts(const corpus::PaperRecord& paper) const;
};

struct QueryRequest {
  std::string q;
  std::size_t r = 10;
  std::optional<std::size_t> tau;
  Filters filters;
};

using Params = std::multimap<std::string, std::string>;

QueryRequest parse_query_request(const Params& params);
Filters parse_filters(const Params& params);

// Handlers. Errors are thrown as litmine::Error.
nlohmann::ordered_json handle_search(const State& state, const QueryRequest& request);
nlohmann::ordered_json handle_papers(const State& state, const Params& params);
nlohmann::ordered_json handle_paper(const State& state, std::string_view identifier);
nlohmann::ordered_json handle_clusters(const State& state);
nlohmann::ordered_json handle_cluster(const State& state, int cluster_id);
nlohmann::ordered_json handle_rules(const State& state);
std::string handle_rules_csv(const State& state);
nlohmann::ordered_json handle_trends(const State& state, const Params& params);
nlohmann::ordered_json handle_projection(const State& state);

/// Summary object used in paper listings and search hits.
nlohmann::ordered_json paper_summary(const State& state, std::size_t position);

/// HTTP status for an error code: 400, 404, 409, 502, or 500.
int http_status(ErrorCode code);
std::string error_body(ErrorCode code, std::string_view message);

/// Serves the JSON API over a swappable state snapshot.
class Server {
 public:
  using Loader = std::function<std::shared_ptr<const State>()>;

  explicit Server(Loader loader, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and blocks until stop().
  void listen(const std::string& host, int port);
  /// Binds to a free port, returns it; call run() to serve.
  int bind_any(const std::string& host);
  void run();
  void stop();
  void wait_until_ready() const;

  std::shared_ptr<const State> snapshot() const;
  /// Re-runs the loader and swaps the state. Readers keep their snapshot.
  void reload();

 private:
  void routes();

  Loader loader_;
  std::unique_ptr<httplib::Server> http_;
  mutable std::mutex mutex_;
  std::shared_ptr<const State> state_;
};

}  // namespace litmine::service
