#include "litmine/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "litmine/clustering.hpp"
#include "litmine/error.hpp"
#include "litmine/ivfpq.hpp"
#include "litmine/random.hpp"

namespace litmine::pipeline {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) field = it->get<T>();
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_object()) throw Error(ErrorCode::invalid_argument, fmt::format("'{}' must be an object", key));
  return *it;
}

std::string paper_text(const corpus::PaperRecord& p) {
  return p.title.empty() ? p.abstract : p.title + ". " + p.abstract;
}

}  // namespace

ordered_json PipelineConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["paths"] = {{"work_dir", paths.work_dir},
                {"corpus", paths.corpus},
                {"library", paths.library},
                {"keyword_embeddings", paths.keyword_embeddings},
                {"clustering", paths.clustering},
                {"rules", paths.rules},
                {"rules_csv", paths.rules_csv},
                {"index", paths.index},
                {"vectors", paths.vectors},
                {"abbreviations", paths.abbreviations},
                {"stopwords", paths.stopwords},
                {"static_dir", paths.static_dir}};
  j["provider"] = {{"mode", provider.mode},
                   {"dimension", provider.dimension},
                   {"seed", provider.seed},
                   {"path", provider.path},
                   {"base_url", provider.base_url},
                   {"endpoint", provider.endpoint},
                   {"model", provider.model},
                   {"batch_size", provider.batch_size},
                   {"max_in_flight", provider.max_in_flight}};
  j["extraction"] = {{"strategy", extraction.strategy},
                     {"m", extraction.m},
                     {"alpha", extraction.alpha},
                     {"ngram_range", {extraction.ngram_low, extraction.ngram_high}},
                     {"seed_keywords", extraction.seed_keywords},
                     {"seed_weight", extraction.seed_weight},
                     {"alpha_grid", extraction.alpha_grid},
                     {"all_papers", extraction.all_papers}};
  j["clustering"] = {{"k", clustering.k},
                     {"restarts", clustering.restarts},
                     {"max_iter", clustering.max_iter},
                     {"tol", clustering.tol},
                     {"labels", clustering.labels}};
  j["rules"] = {{"min_support", rules.min_support},
                {"min_confidence", rules.min_confidence},
                {"min_lift", rules.min_lift},
                {"max_len", rules.max_len},
                {"singleton_rhs", rules.singleton_rhs}};
  j["index"] = {{"nlist", index.nlist},
                {"b", index.b},
                {"ksub", index.ksub},
                {"tau", index.tau},
                {"keep_vectors", index.keep_vectors}};
  j["server"] = {{"host", server.host}, {"port", server.port}};
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "config must be a JSON object");
  PipelineConfig c;
  try {
    read(j, "seed", c.seed);
    const auto& p = section(j, "paths");
    read(p, "work_dir", c.paths.work_dir);
    read(p, "corpus", c.paths.corpus);
    read(p, "library", c.paths.library);
    read(p, "keyword_embeddings", c.paths.keyword_embeddings);
    read(p, "clustering", c.paths.clustering);
    read(p, "rules", c.paths.rules);
    read(p, "rules_csv", c.paths.rules_csv);
    read(p, "index", c.paths.index);
    read(p, "vectors", c.paths.vectors);
    read(p, "abbreviations", c.paths.abbreviations);
    read(p, "stopwords", c.paths.stopwords);
    read(p, "static_dir", c.paths.static_dir);

    const auto& pr = section(j, "provider");
    read(pr, "mode", c.provider.mode);
    read(pr, "dimension", c.provider.dimension);
    read(pr, "seed", c.provider.seed);
    read(pr, "path", c.provider.path);
    read(pr, "base_url", c.provider.base_url);
    read(pr, "endpoint", c.provider.endpoint);
    read(pr, "model", c.provider.model);
    read(pr, "batch_size", c.provider.batch_size);
    read(pr, "max_in_flight", c.provider.max_in_flight);

    const auto& ex = section(j, "extraction");
    read(ex, "strategy", c.extraction.strategy);
    read(ex, "m", c.extraction.m);
    read(ex, "alpha", c.extraction.alpha);
    if (const auto it = ex.find("ngram_range"); it != ex.end()) {
      const auto range = it->get<std::vector<std::size_t>>();
      if (range.size() != 2) throw Error(ErrorCode::invalid_argument, "ngram_range must be [low, high]");
      c.extraction.ngram_low = range[0];
      c.extraction.ngram_high = range[1];
    }
    read(ex, "seed_keywords", c.extraction.seed_keywords);
    read(ex, "seed_weight", c.extraction.seed_weight);
    read(ex, "alpha_grid", c.extraction.alpha_grid);
    read(ex, "all_papers", c.extraction.all_papers);

    const auto& cl = section(j, "clustering");
    read(cl, "k", c.clustering.k);
    read(cl, "restarts", c.clustering.restarts);
    read(cl, "max_iter", c.clustering.max_iter);
    read(cl, "tol", c.clustering.tol);
    read(cl, "labels", c.clustering.labels);

    const auto& ru = section(j, "rules");
    read(ru, "min_support", c.rules.min_support);
    read(ru, "min_confidence", c.rules.min_confidence);
    read(ru, "min_lift", c.rules.min_lift);
    read(ru, "max_len", c.rules.max_len);
    read(ru, "singleton_rhs", c.rules.singleton_rhs);

    const auto& ix = section(j, "index");
    read(ix, "nlist", c.index.nlist);
    read(ix, "b", c.index.b);
    read(ix, "ksub", c.index.ksub);
    read(ix, "tau", c.index.tau);
    read(ix, "keep_vectors", c.index.keep_vectors);

    const auto& sv = section(j, "server");
    read(sv, "host", c.server.host);
    read(sv, "port", c.server.port);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, fmt::format("config: {}", e.what()));
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_argument, fmt::format("{}: {}", path.string(), e.what()));
  }
  auto c = from_json(j);
  c.base_dir = std::filesystem::absolute(path).parent_path();
  return c;
}

void PipelineConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  out << to_json().dump(2) << '\n';
}

std::filesystem::path PipelineConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::filesystem::path PipelineConfig::artifact(const std::string& name) const {
  return resolve(paths.work_dir) / name;
}

service::StatePaths PipelineConfig::state_paths() const {
  return {artifact(paths.corpus),     artifact(paths.library), artifact(paths.clustering),
          artifact(paths.keyword_embeddings), artifact(paths.rules), artifact(paths.index)};
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
  const auto rules_equal = a.rules.min_support == b.rules.min_support &&
                           a.rules.min_confidence == b.rules.min_confidence &&
                           a.rules.min_lift == b.rules.min_lift && a.rules.max_len == b.rules.max_len &&
                           a.rules.singleton_rhs == b.rules.singleton_rhs;
  return a.seed == b.seed && a.paths == b.paths && a.provider == b.provider &&
         a.extraction == b.extraction && a.clustering == b.clustering && rules_equal &&
         a.index == b.index && a.server == b.server;
}

std::unique_ptr<embedding::EmbeddingProvider> make_provider(const PipelineConfig& config) {
  const auto& p = config.provider;
  if (p.mode == "hash") {
    return std::make_unique<embedding::HashEmbeddingProvider>(p.dimension, p.seed);
  }
  if (p.mode == "precomputed") {
    if (p.path.empty()) throw Error(ErrorCode::invalid_argument, "precomputed provider needs 'path'");
    auto store = embedding::PrecomputedEmbeddingProvider::load(config.resolve(p.path));
    if (store.dimension() != p.dimension) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("store dimension {} but config says {}", store.dimension(), p.dimension));
    }
    return std::make_unique<embedding::PrecomputedEmbeddingProvider>(std::move(store));
  }
  if (p.mode == "remote") {
    if (p.base_url.empty()) throw Error(ErrorCode::invalid_argument, "remote provider needs 'base_url'");
    embedding::RemoteEmbeddingProvider::Options o;
    o.base_url = p.base_url;
    o.path = p.endpoint;
    o.model = p.model;
    o.dimension = p.dimension;
    o.batch_size = p.batch_size;
    o.max_in_flight = p.max_in_flight;
    return std::make_unique<embedding::RemoteEmbeddingProvider>(o);
  }
  throw Error(ErrorCode::invalid_argument,
              fmt::format("unknown provider mode '{}' (expected hash, precomputed, remote)", p.mode));
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) { return derive_seed(seed, stage); }

// ---------------------------------------------------------------------------

WorkdirLock::WorkdirLock(const std::filesystem::path& dir) : path_(dir / ".litmine.lock") {
  std::filesystem::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw Error(ErrorCode::precondition,
                fmt::format("work directory is locked by another litmine command ({})", path_.string()));
  }
  std::fclose(f);
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config, std::ostream& out, bool verbose)
    : config_(std::move(config)), out_(out), verbose_(verbose) {}

void Pipeline::log(std::string_view message) const {
  if (verbose_) std::cerr << message << '\n';
}

void Pipeline::require(const std::string& artifact, std::string_view stage) const {
  if (!std::filesystem::exists(config_.artifact(artifact))) {
    throw Error(ErrorCode::precondition,
                fmt::format("{} not found; run {} first", config_.artifact(artifact).string(), stage));
  }
}

const embedding::EmbeddingProvider& Pipeline::provider() const {
  if (!provider_) provider_ = make_provider(config_);
  return *provider_;
}

text::AbbreviationTable Pipeline::abbreviations() const {
  if (config_.paths.abbreviations.empty()) return text::AbbreviationTable::defaults();
  return text::AbbreviationTable::load(config_.resolve(config_.paths.abbreviations));
}

text::StopwordSet Pipeline::stopwords() const {
  if (config_.paths.stopwords.empty()) return text::english_stopwords();
  return text::load_stopwords(config_.resolve(config_.paths.stopwords));
}

void Pipeline::ingest(const std::vector<std::filesystem::path>& files) {
  if (files.empty()) throw Error(ErrorCode::invalid_argument, "no input files");
  WorkdirLock lock(config_.resolve(config_.paths.work_dir));
  const auto abbr = abbreviations();
  const auto corpus_path = config_.artifact(config_.paths.corpus);
  auto store = std::filesystem::exists(corpus_path) ? corpus::CorpusStore::load(corpus_path, abbr)
                                                    : corpus::CorpusStore(abbr);
  for (const auto& file : files) {
    const auto report = corpus::ingest_file(file, store);
    out_ << fmt::format("{}: {} added, {} duplicates dropped, {} malformed\n", file.string(),
                        report.added, report.duplicates_dropped, report.malformed.size());
    for (const auto& m : report.malformed) {
      log(fmt::format("  {}:{}: {}", file.string(), m.line, m.reason));
    }
  }
  store.save(corpus_path);
  const auto library = corpus::build_keyword_library(store.records(), abbr);
  library.save(config_.artifact(config_.paths.library));
  out_ << fmt::format("corpus: {} papers -> {}\n", store.size(), corpus_path.string());
  out_ << fmt::format("library: {} keywords -> {}\n", library.size(),
                      config_.artifact(config_.paths.library).string());
}

void Pipeline::extract() {
  require(config_.paths.corpus, "ingest");
  require(config_.paths.library, "ingest");
  WorkdirLock lock(config_.resolve(config_.paths.work_dir));
  const auto abbr = abbreviations();
  const auto corpus_path = config_.artifact(config_.paths.corpus);
  auto store = corpus::CorpusStore::load(corpus_path, abbr);
  const auto library = corpus::KeywordLibrary::load(config_.artifact(config_.paths.library));
  extraction::KeywordExtractor extractor(provider(), library, abbr, stopwords());

  const auto& ec = config_.extraction;
  extraction::SelectionConfig sel;
  sel.strategy = extraction::parse_strategy(ec.strategy);
  sel.m = ec.m;
  sel.alpha = ec.alpha;
  sel.ngram_range = {ec.ngram_low, ec.ngram_high};
  sel.seed_keywords = ec.seed_keywords;
  sel.seed_weight = ec.seed_weight;
  sel.validate();

  if (!ec.alpha_grid.empty()) {
    const auto tuning = extraction::tune_alpha(store.records(), ec.alpha_grid, extractor, sel, abbr);
    for (const auto& [alpha, f1] : tuning.mean_f1) log(fmt::format("  alpha {:.3f}: mean F1 {:.4f}", alpha, f1));
    sel.alpha = tuning.best_alpha;
    out_ << fmt::format("tuned alpha: {}\n", sel.alpha);
  }

  std::size_t processed = 0;
  std::size_t unclustered = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& paper = store.at(i);
    if (paper.has_author_keywords() && !ec.all_papers) continue;
    ++processed;
    paper.derived_keywords.clear();
    if (paper.abstract.find_first_not_of(" \t\r\n") == std::string::npos) {
      ++unclustered;
      continue;
    }
    const auto result = extractor.extract(paper.identifier, paper.abstract, sel);
    paper.derived_keywords.assign(result.final_keywords.begin(), result.final_keywords.end());
    if (result.unclustered()) ++unclustered;
    log(fmt::format("  {}: {}", paper.identifier, fmt::join(paper.derived_keywords, ", ")));
  }
  store.save(corpus_path);
  out_ << fmt::format("extract: {} papers processed ({}), {} without library keywords\n", processed,
                      extraction::to_string(sel.strategy), unclustered);
}

void Pipeline::cluster() {
  require(config_.paths.corpus, "ingest");
  require(config_.paths.library, "ingest");
  WorkdirLock lock(config_.resolve(config_.paths.work_dir));
  const auto abbr = abbreviations();
  const auto corpus_path = config_.artifact(config_.paths.corpus);
  auto store = corpus::CorpusStore::load(corpus_path, abbr);
  const auto library = corpus::KeywordLibrary::load(config_.artifact(config_.paths.library));
  if (library.empty()) throw Error(ErrorCode::precondition, "keyword library is empty; ingest papers with author keywords");

  const auto keywords = library.keywords();
  const auto vectors = provider().embed_batch(keywords);
  clustering::EmbeddingMap embeddings;
  std::map<std::string, embedding::Vector> store_entries;
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    embeddings.emplace(keywords[i], vectors[i]);
    store_entries.emplace(keywords[i], vectors[i]);
  }
  embedding::write_embedding_store(config_.artifact(config_.paths.keyword_embeddings),
                                   provider().dimension(), store_entries);

  kmeans::Options opt;
  opt.k = config_.clustering.k;
  opt.seed = stage_seed(config_.seed, "cluster");
  opt.max_iter = config_.clustering.max_iter;
  opt.tol = config_.clustering.tol;
  opt.restarts = config_.clustering.restarts;
  auto result = clustering::kmeans(embeddings, opt);
  result.labels = config_.clustering.labels;
  result.labels.resize(result.k);
  result.save(config_.artifact(config_.paths.clustering));

  std::size_t unclustered = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& paper = store.at(i);
    paper.cluster_ids = clustering::paper_clusters(corpus::paper_keywords(paper, abbr), result.assignments);
    if (paper.cluster_ids.empty()) ++unclustered;
  }
  store.save(corpus_path);
  out_ << fmt::format("cluster: {} keywords into k={} clusters, WCSS {:.6f} after {} iterations\n",
                      keywords.size(), result.k, result.wcss_history.back(), result.iterations);
  out_ << fmt::format("cluster: {} of {} papers tagged, {} unclustered\n", store.size() - unclustered,
                      store.size(), unclustered);
}

void Pipeline::mine() {
  require(config_.paths.corpus, "ingest");
  require(config_.paths.clustering, "cluster");
  WorkdirLock lock(config_.resolve(config_.paths.work_dir));
  const auto store = corpus::CorpusStore::load(config_.artifact(config_.paths.corpus), abbreviations());
  const auto tx = association::build_transactions(store.records());
  std::vector<association::AssociationRule> rules;
  if (!tx.transactions.empty()) rules = association::mine_rules(tx.transactions, config_.rules);
  association::save_rules(config_.artifact(config_.paths.rules), rules);
  {
    std::ofstream csv(config_.artifact(config_.paths.rules_csv), std::ios::trunc | std::ios::binary);
    association::write_rules_csv(csv, rules);
  }
  out_ << fmt::format("mine: {} transactions ({} papers excluded), {} rules\n", tx.transactions.size(),
                      tx.excluded, rules.size());
  for (const auto& r : rules) {
    out_ << fmt::format("  {} => {}  support {:.3f} confidence {:.3f} lift {:.3f}\n",
                        association::format_itemset(r.lhs), association::format_itemset(r.rhs),
                        r.metrics.support, r.metrics.confidence, r.metrics.lift);
  }
}

void Pipeline::index() {
  require(config_.paths.corpus, "ingest");
  WorkdirLock lock(config_.resolve(config_.paths.work_dir));
  const auto abbr = abbreviations();
  const auto store = corpus::CorpusStore::load(config_.artifact(config_.paths.corpus), abbr);
  if (store.size() == 0) throw Error(ErrorCode::precondition, "corpus is empty; run ingest first");

  std::vector<std::string> texts;
  texts.reserve(store.size());
  for (const auto& p : store.records()) {
    auto cleaned = text::preprocess_abstract(paper_text(p), abbr);
    texts.push_back(cleaned.empty() ? p.identifier : std::move(cleaned));
  }
  const auto vectors = provider().embed_batch(texts);
  Matrix data(0, provider().dimension());
  for (const auto& v : vectors) data.append_row(v);

  vindex::IndexParams params;
  params.dim = provider().dimension();
  params.nlist = config_.index.nlist ? config_.index.nlist : vindex::default_nlist(store.size());
  params.b = config_.index.b;
  params.ksub = config_.index.ksub;
  params.tau = std::min(config_.index.tau, params.nlist);
  params.seed = stage_seed(config_.seed, "index");
  auto idx = vindex::IvfPqIndex::train(data, params);
  vindex::VectorStore raw;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    idx.add(static_cast<std::int64_t>(i), data.row(i));
    raw.add(static_cast<std::int64_t>(i), data.row(i));
  }
  idx.seal();
  const auto path = config_.artifact(config_.paths.index);
  idx.save(path);
  if (config_.index.keep_vectors) raw.save(config_.artifact(config_.paths.vectors));
  out_ << fmt::format("index: {} vectors, p={} nlist={} b={} ksub={} tau={} -> {} ({} bytes)\n",
                      idx.size(), params.dim, params.nlist, params.b, params.ksub, params.tau,
                      path.string(), idx.file_size());
}

std::shared_ptr<const service::State> Pipeline::load_state() const {
  require(config_.paths.corpus, "ingest");
  require(config_.paths.clustering, "cluster");
  require(config_.paths.rules, "mine");
  require(config_.paths.index, "index");
  provider();
  return service::load_state(config_.state_paths(), provider_, abbreviations());
}

std::string Pipeline::search(const service::QueryRequest& request) {
  return service::handle_search(*load_state(), request).dump();
}

void Pipeline::report() {
  require(config_.paths.corpus, "ingest");
  require(config_.paths.clustering, "cluster");
  const auto store = corpus::CorpusStore::load(config_.artifact(config_.paths.corpus), abbreviations());
  const auto result = clustering::Clustering::load(config_.artifact(config_.paths.clustering));
  const auto kw_store =
      embedding::PrecomputedEmbeddingProvider::load(config_.artifact(config_.paths.keyword_embeddings));
  clustering::EmbeddingMap embeddings;
  for (const auto& [kw, id] : result.assignments) embeddings.emplace(kw, kw_store.embed(kw));

  std::map<int, std::size_t> papers;
  for (const auto& p : store.records()) {
    for (int c : p.cluster_ids) ++papers[c];
  }
  out_ << "Summary of keyword clusters\n";
  out_ << fmt::format("{:<8}{:<24}{:>10}{:>8}  {}\n", "cluster", "label", "keywords", "papers",
                      "top keywords");
  for (std::size_t c = 1; c <= result.k; ++c) {
    const int id = static_cast<int>(c);
    std::vector<std::pair<std::string, double>> words;
    if (result.cluster_size(id) > 0) {
      const auto cloud = clustering::wordcloud_weights(id, result, embeddings);
      words.assign(cloud.weights.begin(), cloud.weights.end());
      std::stable_sort(words.begin(), words.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
    }
    std::vector<std::string> top;
    for (std::size_t i = 0; i < words.size() && i < 5; ++i) top.push_back(words[i].first);
    const auto label = result.label(id).empty() ? std::string("-") : result.label(id);
    out_ << fmt::format("{:<8}{:<24}{:>10}{:>8}  {}\n", fmt::format("C{}", id), label,
                        result.cluster_size(id), papers[id], fmt::join(top, "; "));
  }
}

void Pipeline::serve() {
  std::optional<std::filesystem::path> static_dir;
  if (!config_.paths.static_dir.empty()) static_dir = config_.resolve(config_.paths.static_dir);
  service::Server server([this] { return load_state(); }, static_dir);
  out_ << fmt::format("serving on http://{}:{}\n", config_.server.host, config_.server.port);
  out_.flush();
  server.listen(config_.server.host, config_.server.port);
}

}  // namespace litmine::pipeline
