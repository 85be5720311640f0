#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "litmine/error.hpp"
#include "litmine/pipeline.hpp"

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

int exit_code(const litmine::Error& e) {
  return e.code() == litmine::ErrorCode::unavailable ? kInternalError : kUserError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"litmine: literature mining pipeline"};
  app.require_subcommand(1);

  std::string config_path = "litmine.json";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  auto* config_opt = app.add_option("--config", config_path, "Pipeline config (JSON)");
  app.add_option("--seed", seed, "Global seed; every stage derives its own from it");
  app.add_flag("-v,--verbose", verbose, "Log details to stderr");

  auto* ingest = app.add_subcommand("ingest", "Load JSONL/CSV records into the corpus and rebuild the keyword library");
  std::vector<std::string> files;
  ingest->add_option("files", files, "Input files")->required();

  auto* extract = app.add_subcommand("extract", "Extract keywords for papers without author keywords");
  bool extract_all = false;
  extract->add_flag("--all", extract_all, "Re-extract every paper");

  auto* cluster = app.add_subcommand("cluster", "K-means over keyword embeddings; tag papers with clusters");
  auto* mine = app.add_subcommand("mine", "Apriori association rules over paper cluster sets");
  auto* index = app.add_subcommand("index", "Build the IVF-PQ search index");

  auto* search = app.add_subcommand("search", "Query the index; prints the /api/search JSON body");
  std::string query;
  std::size_t r = 10;
  std::optional<std::size_t> tau;
  std::optional<int> year_from;
  std::optional<int> year_to;
  std::optional<std::string> subtype;
  std::vector<int> clusters;
  search->add_option("query", query, "Free-text query")->required();
  search->add_option("-r", r, "Result count")->check(CLI::PositiveNumber);
  search->add_option("--tau", tau, "Probe width")->check(CLI::PositiveNumber);
  search->add_option("--year-from", year_from);
  search->add_option("--year-to", year_to);
  search->add_option("--subtype", subtype);
  search->add_option("--cluster", clusters, "Keep papers tagged with any of these clusters");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* report = app.add_subcommand("report", "Print the keyword cluster summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUserError;
  }

  try {
    litmine::pipeline::PipelineConfig config;
    if (config_opt->count() > 0 || std::filesystem::exists(config_path)) {
      config = litmine::pipeline::PipelineConfig::load(config_path);
    } else {
      config.base_dir = std::filesystem::current_path();
    }
    if (seed) config.seed = *seed;
    if (extract_all) config.extraction.all_papers = true;
    if (host) config.server.host = *host;
    if (port) config.server.port = *port;

    litmine::pipeline::Pipeline pipeline(std::move(config), std::cout, verbose);
    if (*ingest) {
      pipeline.ingest(std::vector<std::filesystem::path>(files.begin(), files.end()));
    } else if (*extract) {
      pipeline.extract();
    } else if (*cluster) {
      pipeline.cluster();
    } else if (*mine) {
      pipeline.mine();
    } else if (*index) {
      pipeline.index();
    } else if (*search) {
      litmine::service::QueryRequest request;
      request.q = query;
      request.r = r;
      request.tau = tau;
      request.filters.year_from = year_from;
      request.filters.year_to = year_to;
      request.filters.subtype = subtype;
      request.filters.clusters.insert(clusters.begin(), clusters.end());
      std::cout << pipeline.search(request) << '\n';
    } else if (*serve) {
      pipeline.serve();
    } else if (*report) {
      pipeline.report();
    }
  } catch (const litmine::Error& e) {
    std::cerr << "litmine: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "litmine: internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return 0;
}
