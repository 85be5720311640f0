#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "litmine/clustering.hpp"
#include "litmine/corpus.hpp"
#include "litmine/error.hpp"
#include "workspace.hpp"

using namespace litmine;
using namespace litmine::pipeline;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config round trip") {
  auto c = PipelineConfig::load(std::filesystem::path(LITMINE_FIXTURES) / "pipeline.json");
  CHECK(c.seed == 7);
  CHECK(c.clustering.k == 6);
  c.extraction.seed_keywords = {"insurance"};
  c.index.nlist = 12;
  const auto back = PipelineConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("config errors name the location") {
  const auto dir = std::filesystem::temp_directory_path() / "litmine_badcfg";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "bad.json");
    out << "{\n  \"seed\": 1,\n  \"clustering\": {\"k\": }\n}\n";
  }
  try {
    PipelineConfig::load(dir / "bad.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"clustering": {"k": "many"}})")), Error);
}

TEST_CASE("stages refuse to run before their inputs exist") {
  auto c = testing::fresh_workspace("litmine_order");
  std::ostringstream sink;
  Pipeline p(c, sink);
  try {
    p.mine();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
  }
  p.ingest({std::filesystem::path(LITMINE_FIXTURES) / "corpus40.jsonl"});
  try {
    p.mine();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
    CHECK(std::string(e.what()).find("cluster") != std::string::npos);
  }
}

TEST_CASE("work directory lock") {
  const auto dir = std::filesystem::temp_directory_path() / "litmine_lock";
  std::filesystem::remove_all(dir);
  {
    WorkdirLock first(dir);
    CHECK_THROWS_AS(WorkdirLock{dir}, Error);
  }
  CHECK_NOTHROW(WorkdirLock{dir});
}

TEST_CASE("stage seeds differ per stage") {
  CHECK(stage_seed(7, "cluster") != stage_seed(7, "index"));
  CHECK(stage_seed(7, "cluster") == stage_seed(7, "cluster"));
}

TEST_CASE("report counts match an independent tally") {
  const auto& c = testing::built_workspace();
  std::ostringstream out;
  Pipeline p(c, out);
  p.report();
  const auto report = out.str();
  CHECK(report.rfind("Summary of keyword clusters", 0) == 0);

  const auto store = corpus::CorpusStore::load(c.artifact(c.paths.corpus));
  const auto cl = clustering::Clustering::load(c.artifact(c.paths.clustering));
  std::istringstream lines(report);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  for (std::size_t id = 1; id <= cl.k; ++id) {
    REQUIRE(std::getline(lines, line));
    std::istringstream row(line);
    std::string name, label;
    std::size_t keywords = 0, papers = 0;
    row >> name >> label >> keywords >> papers;
    CHECK(name == "C" + std::to_string(id));
    CHECK(keywords == cl.cluster_size(static_cast<int>(id)));
    std::size_t tally = 0;
    for (const auto& paper : store.records()) tally += paper.cluster_ids.count(static_cast<int>(id));
    CHECK(papers == tally);
  }
}

TEST_CASE("re-running a stage reproduces its artifact") {
  const auto& c = testing::built_workspace();
  const auto clustering_before = slurp(c.artifact(c.paths.clustering));
  const auto rules_before = slurp(c.artifact(c.paths.rules));
  const auto index_before = slurp(c.artifact(c.paths.index));
  std::ostringstream sink;
  Pipeline p(c, sink);
  p.cluster();
  p.mine();
  p.index();
  CHECK(slurp(c.artifact(c.paths.clustering)) == clustering_before);
  CHECK(slurp(c.artifact(c.paths.rules)) == rules_before);
  CHECK(slurp(c.artifact(c.paths.index)) == index_before);

  // re-ingesting the same file adds nothing
  p.ingest({std::filesystem::path(LITMINE_FIXTURES) / "corpus40.jsonl"});
  CHECK(corpus::CorpusStore::load(c.artifact(c.paths.corpus)).size() == 40);
}

TEST_CASE("every clustered paper carries final keywords") {
  const auto& c = testing::built_workspace();
  const auto store = corpus::CorpusStore::load(c.artifact(c.paths.corpus));
  const auto lib = corpus::KeywordLibrary::load(c.artifact(c.paths.library));
  std::size_t clustered = 0;
  for (const auto& paper : store.records()) {
    if (!paper.cluster_ids.empty()) ++clustered;
    for (const auto& kw : paper.derived_keywords) CHECK(lib.contains(kw));
  }
  CHECK(clustered > 30);
}
