#include "litmine/service.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>
#include <httplib.h>

#include "litmine/error.hpp"

namespace litmine::service {
namespace {

using nlohmann::ordered_json;

std::optional<std::string> param(const Params& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::invalid_argument, fmt::format("bad value for '{}': '{}'", key, value));
  }
  return v;
}

std::optional<long long> int_param(const Params& params, const std::string& key) {
  if (auto v = param(params, key)) return parse_int(key, *v);
  return std::nullopt;
}

// Accepts "3", "3,5" and repeated keys.
std::set<int> id_list(const Params& params, const std::string& key) {
  std::set<int> out;
  const auto [lo, hi] = params.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    std::string_view rest = it->second;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      auto piece = std::string(rest.substr(0, comma));
      if (!piece.empty() && (piece[0] == 'C' || piece[0] == 'c')) piece.erase(0, 1);
      if (!piece.empty()) out.insert(static_cast<int>(parse_int(key, piece)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return out;
}

ordered_json points_json(const std::map<int, std::size_t>& per_year) {
  auto points = ordered_json::array();
  for (const auto& [year, count] : per_year) points.push_back({{"year", year}, {"count", count}});
  return points;
}

std::map<int, std::size_t> paper_counts(const State& state) {
  std::map<int, std::size_t> counts;
  for (const auto& p : state.papers) {
    for (int c : p.cluster_ids) ++counts[c];
  }
  return counts;
}

clustering::CentroidProjection projection(const State& state) {
  auto proj = clustering::pca_project_centroids(state.clustering);
  for (const auto& rule : state.rules) {
    for (int rhs : rule.rhs) proj.edges.push_back({rule.lhs, rhs});
  }
  return proj;
}

template <typename Fn>
void respond(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    res.status = http_status(e.code());
    res.set_content(error_body(e.code(), e.what()), "application/json");
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(error_body(ErrorCode::data_error, e.what()), "application/json");
  }
}

void send_json(httplib::Response& res, const ordered_json& body) {
  res.set_content(body.dump(), "application/json");
}

}  // namespace

const corpus::PaperRecord* State::find(std::string_view identifier) const {
  const auto it = std::lower_bound(by_identifier.begin(), by_identifier.end(), identifier,
                                   [&](std::size_t pos, std::string_view id) {
                                     return papers[pos].identifier < id;
                                   });
  if (it == by_identifier.end() || papers[*it].identifier != identifier) return nullptr;
  return &papers[*it];
}

std::shared_ptr<const State> load_state(const StatePaths& paths,
                                        std::shared_ptr<const embedding::EmbeddingProvider> provider,
                                        text::AbbreviationTable abbreviations) {
  auto state = std::make_shared<State>();
  state->papers = corpus::CorpusStore::load(paths.corpus, abbreviations).records();
  state->by_identifier.resize(state->papers.size());
  for (std::size_t i = 0; i < state->papers.size(); ++i) state->by_identifier[i] = i;
  std::sort(state->by_identifier.begin(), state->by_identifier.end(),
            [&](std::size_t a, std::size_t b) {
              return state->papers[a].identifier < state->papers[b].identifier;
            });
  state->library = corpus::KeywordLibrary::load(paths.library);
  state->clustering = clustering::Clustering::load(paths.clustering);
  const auto store = embedding::PrecomputedEmbeddingProvider::load(paths.keyword_embeddings);
  for (const auto& [keyword, id] : state->clustering.assignments) {
    state->keyword_embeddings.emplace(keyword, store.embed(keyword));
  }
  state->rules = association::load_rules(paths.rules);
  state->index = vindex::IvfPqIndex::load(paths.index);
  if (state->index.size() > state->papers.size()) {
    throw Error(ErrorCode::data_error, "index holds more entries than the corpus");
  }
  if (!provider) throw Error(ErrorCode::invalid_argument, "no embedding provider");
  if (provider->dimension() != state->index.params().dim) {
    throw Error(ErrorCode::data_error,
                fmt::format("provider dimension {} does not match index dimension {}",
                            provider->dimension(), state->index.params().dim));
  }
  state->provider = std::move(provider);
  state->abbreviations = std::move(abbreviations);
  return state;
}

bool Filters::accepts(const corpus::PaperRecord& paper) const {
  const int y = paper.year();
  if (year_from && y < *year_from) return false;
  if (year_to && y > *year_to) return false;
  if (subtype && paper.subtype_description != *subtype) return false;
  if (!clusters.empty()) {
    return std::any_of(clusters.begin(), clusters.end(),
                       [&](int c) { return paper.cluster_ids.count(c) > 0; });
  }
  return true;
}

Filters parse_filters(const Params& params) {
  Filters f;
  if (auto v = int_param(params, "year_from")) f.year_from = static_cast<int>(*v);
  if (auto v = int_param(params, "year_to")) f.year_to = static_cast<int>(*v);
  if (f.year_from && f.year_to && *f.year_from > *f.year_to) {
    throw Error(ErrorCode::invalid_argument, "year_from is after year_to");
  }
  f.subtype = param(params, "subtype");
  f.clusters = id_list(params, "cluster");
  return f;
}

QueryRequest parse_query_request(const Params& params) {
  QueryRequest req;
  req.q = param(params, "q").value_or("");
  if (auto r = int_param(params, "r")) {
    if (*r < 1) throw Error(ErrorCode::invalid_argument, "r must be >= 1");
    req.r = static_cast<std::size_t>(*r);
  }
  if (auto tau = int_param(params, "tau")) {
    if (*tau < 1) throw Error(ErrorCode::invalid_argument, "tau must be >= 1");
    req.tau = static_cast<std::size_t>(*tau);
  }
  req.filters = parse_filters(params);
  return req;
}

ordered_json paper_summary(const State& state, std::size_t position) {
  const auto& p = state.papers.at(position);
  const auto keywords = corpus::paper_keywords(p, state.abbreviations);
  ordered_json j;
  j["id"] = position;
  j["identifier"] = p.identifier;
  j["doi"] = p.doi ? ordered_json(*p.doi) : ordered_json(nullptr);
  j["title"] = p.title;
  j["coverDate"] = p.cover_date;
  j["year"] = p.year();
  j["subtypeDescription"] = p.subtype_description;
  j["publicationName"] = p.publication_name;
  j["citedby_count"] = p.citedby_count;
  j["author_names"] = p.author_names;
  j["keywords"] = std::vector<std::string>(keywords.begin(), keywords.end());
  j["clusters"] = std::vector<int>(p.cluster_ids.begin(), p.cluster_ids.end());
  return j;
}

ordered_json handle_search(const State& state, const QueryRequest& request) {
  if (request.q.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "empty query");
  }
  if (request.r == 0) throw Error(ErrorCode::invalid_argument, "r must be >= 1");
  const auto cleaned = text::preprocess_abstract(request.q, state.abbreviations);
  if (cleaned.empty()) throw Error(ErrorCode::invalid_argument, "empty query");

  embedding::Vector query;
  try {
    query = state.provider->embed(cleaned);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) throw;
    throw Error(ErrorCode::unavailable, fmt::format("embedding provider failed: {}", e.what()));
  }
  const std::size_t tau = request.tau.value_or(state.index.params().tau);
  const auto hits = state.index.search(query, 4 * request.r, tau);

  ordered_json results = ordered_json::array();
  for (const auto& hit : hits) {
    if (results.size() == request.r) break;
    const auto pos = static_cast<std::size_t>(hit.id);
    if (hit.id < 0 || pos >= state.papers.size()) {
      throw Error(ErrorCode::data_error, fmt::format("index id {} has no paper", hit.id));
    }
    if (!request.filters.accepts(state.papers[pos])) continue;
    auto row = paper_summary(state, pos);
    row["score"] = hit.distance;
    results.push_back(std::move(row));
  }

  ordered_json j;
  j["query"] = request.q;
  j["r"] = request.r;
  j["tau"] = tau;
  j["query_cluster"] = state.clustering.k > 0 ? clustering::assign_new(query, state.clustering) : 0;
  j["count"] = results.size();
  j["results"] = std::move(results);
  return j;
}

ordered_json handle_papers(const State& state, const Params& params) {
  const long long page = int_param(params, "page").value_or(1);
  const long long page_size = int_param(params, "page_size").value_or(20);
  if (page < 1) throw Error(ErrorCode::invalid_argument, "page must be >= 1");
  if (page_size < 1 || page_size > 1000) {
    throw Error(ErrorCode::invalid_argument, "page_size must be in [1, 1000]");
  }
  const auto filters = parse_filters(params);
  std::vector<std::size_t> matching;
  for (auto pos : state.by_identifier) {
    if (filters.accepts(state.papers[pos])) matching.push_back(pos);
  }
  const auto size = static_cast<std::size_t>(page_size);
  const auto start = static_cast<std::size_t>(page - 1) * size;
  ordered_json papers = ordered_json::array();
  for (std::size_t i = start; i < matching.size() && i < start + size; ++i) {
    papers.push_back(paper_summary(state, matching[i]));
  }
  ordered_json j;
  j["page"] = page;
  j["page_size"] = page_size;
  j["total"] = matching.size();
  j["pages"] = (matching.size() + size - 1) / size;
  j["papers"] = std::move(papers);
  return j;
}

ordered_json handle_paper(const State& state, std::string_view identifier) {
  const auto* p = state.find(identifier);
  if (!p) throw Error(ErrorCode::not_found, fmt::format("unknown paper '{}'", identifier));
  ordered_json j;
  j["id"] = static_cast<std::size_t>(p - state.papers.data());
  const auto record = corpus::to_json(*p);
  for (const auto& [key, value] : record.items()) j[key] = value;
  return j;
}

ordered_json handle_clusters(const State& state) {
  const auto counts = paper_counts(state);
  ordered_json clusters = ordered_json::array();
  for (std::size_t c = 1; c <= state.clustering.k; ++c) {
    const int id = static_cast<int>(c);
    const auto it = counts.find(id);
    clusters.push_back({{"id", id},
                        {"label", state.clustering.label(id)},
                        {"keyword_count", state.clustering.cluster_size(id)},
                        {"paper_count", it == counts.end() ? 0 : it->second}});
  }
  return {{"k", state.clustering.k}, {"clusters", std::move(clusters)}};
}

ordered_json handle_cluster(const State& state, int cluster_id) {
  if (!state.clustering.has_cluster(cluster_id)) {
    throw Error(ErrorCode::not_found, fmt::format("unknown cluster {}", cluster_id));
  }
  std::vector<std::pair<std::string, double>> words;
  if (state.clustering.cluster_size(cluster_id) > 0) {
    const auto cloud = clustering::wordcloud_weights(cluster_id, state.clustering,
                                                     state.keyword_embeddings);
    words.assign(cloud.weights.begin(), cloud.weights.end());
    std::stable_sort(words.begin(), words.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
  }
  ordered_json keywords = ordered_json::array();
  for (const auto& [w, weight] : words) keywords.push_back({{"keyword", w}, {"weight", weight}});

  std::vector<std::string> papers;
  for (auto pos : state.by_identifier) {
    if (state.papers[pos].cluster_ids.count(cluster_id)) papers.push_back(state.papers[pos].identifier);
  }
  ordered_json j;
  j["id"] = cluster_id;
  j["label"] = state.clustering.label(cluster_id);
  j["keyword_count"] = state.clustering.cluster_size(cluster_id);
  j["paper_count"] = papers.size();
  j["keywords"] = std::move(keywords);
  j["papers"] = std::move(papers);
  if (state.clustering.k >= 2) {
    const auto proj = clustering::pca_project_centroids(state.clustering);
    const auto& pt = proj.coords.at(cluster_id);
    j["coords"] = {{"x", pt.x}, {"y", pt.y}};
  } else {
    j["coords"] = nullptr;
  }
  return j;
}

ordered_json handle_rules(const State& state) { return association::rules_to_json(state.rules); }

std::string handle_rules_csv(const State& state) { return association::rules_csv(state.rules); }

ordered_json handle_trends(const State& state, const Params& params) {
  ordered_json series = ordered_json::array();
  const auto clusters = id_list(params, "cluster");
  if (!clusters.empty()) {
    for (int id : clusters) {
      if (!state.clustering.has_cluster(id)) {
        throw Error(ErrorCode::not_found, fmt::format("unknown cluster {}", id));
      }
      std::map<int, std::size_t> per_year;
      for (const auto& p : state.papers) {
        if (p.cluster_ids.count(id)) ++per_year[p.year()];
      }
      series.push_back({{"cluster", id}, {"points", points_json(per_year)}});
    }
  } else if (param(params, "q")) {
    const auto request = parse_query_request(params);
    const auto found = handle_search(state, request);
    std::map<int, std::size_t> per_year;
    for (const auto& row : found["results"]) ++per_year[row["year"].get<int>()];
    series.push_back({{"query", request.q}, {"points", points_json(per_year)}});
  } else {
    throw Error(ErrorCode::invalid_argument, "trends needs 'cluster' or 'q'");
  }
  return {{"series", std::move(series)}};
}

ordered_json handle_projection(const State& state) { return projection(state).to_json(); }

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::precondition: return 409;
    case ErrorCode::unavailable: return 502;
    case ErrorCode::data_error: return 500;
  }
  return 500;
}

std::string error_body(ErrorCode code, std::string_view message) {
  ordered_json j;
  j["code"] = std::string(to_string(code));
  j["message"] = std::string(message);
  return j.dump();
}

// ---------------------------------------------------------------------------

Server::Server(Loader loader, std::optional<std::filesystem::path> static_dir)
    : loader_(std::move(loader)), http_(std::make_unique<httplib::Server>()) {
  state_ = loader_();
  routes();
  if (static_dir && !http_->set_mount_point("/", static_dir->string())) {
    throw Error(ErrorCode::not_found, fmt::format("static directory {} not found", static_dir->string()));
  }
}

Server::~Server() { stop(); }

std::shared_ptr<const State> Server::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

void Server::reload() {
  auto fresh = loader_();
  std::lock_guard lock(mutex_);
  state_ = std::move(fresh);
}

void Server::routes() {
  auto& s = *http_;
  s.Get("/api/search", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, handle_search(*snapshot(), parse_query_request(req.params))); });
  });
  s.Get("/api/papers", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, handle_papers(*snapshot(), req.params)); });
  });
  s.Get(R"(/api/papers/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, handle_paper(*snapshot(), req.matches[1].str())); });
  });
  s.Get("/api/clusters", [this](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { send_json(res, handle_clusters(*snapshot())); });
  });
  s.Get(R"(/api/clusters/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      const auto id = static_cast<int>(parse_int("id", req.matches[1].str()));
      send_json(res, handle_cluster(*snapshot(), id));
    });
  });
  s.Get("/api/rules", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      if (req.get_param_value("format") == "csv") {
        res.set_content(handle_rules_csv(*snapshot()), "text/csv");
      } else {
        send_json(res, handle_rules(*snapshot()));
      }
    });
  });
  s.Get("/api/trends", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, handle_trends(*snapshot(), req.params)); });
  });
  s.Get("/api/projection", [this](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { send_json(res, handle_projection(*snapshot())); });
  });
  s.Post("/api/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] {
      reload();
      send_json(res, {{"status", "reloaded"}, {"papers", snapshot()->papers.size()}});
    });
  });
}

void Server::listen(const std::string& host, int port) {
  if (!http_->listen(host, port)) {
    throw Error(ErrorCode::unavailable, fmt::format("cannot listen on {}:{}", host, port));
  }
}

int Server::bind_any(const std::string& host) {
  const int port = http_->bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::unavailable, fmt::format("cannot bind {}", host));
  return port;
}

void Server::run() { http_->listen_after_bind(); }

void Server::stop() {
  if (http_ && http_->is_running()) http_->stop();
}

void Server::wait_until_ready() const { http_->wait_until_ready(); }

}  // namespace litmine::service
