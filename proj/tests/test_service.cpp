#include <doctest.h>

#include <map>
#include <thread>

#include <httplib.h>

#include "litmine/association.hpp"
#include "litmine/error.hpp"
#include "litmine/service.hpp"
#include "workspace.hpp"

using namespace litmine;
using namespace litmine::service;

namespace {

std::shared_ptr<const State> state() {
  static const auto s = [] {
    std::ostringstream sink;
    pipeline::Pipeline p(testing::built_workspace(), sink);
    return p.load_state();
  }();
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::data_error;
}

}  // namespace

TEST_CASE("search for a paper's own text ranks it first") {
  const auto& s = *state();
  for (std::size_t pos : {0u, 7u, 23u}) {
    const auto& paper = s.papers[pos];
    QueryRequest req;
    req.q = paper.title + ". " + paper.abstract;
    req.r = 5;
    const auto out = handle_search(s, req);
    REQUIRE(out["count"].get<int>() >= 1);
    CHECK(out["results"][0]["identifier"] == paper.identifier);
    CHECK(out["results"][0]["score"].get<double>() < 1e-6);
    for (std::size_t i = 1; i < out["results"].size(); ++i) {
      CHECK(out["results"][i - 1]["score"].get<double>() <= out["results"][i]["score"].get<double>());
    }
  }
}

TEST_CASE("search is deterministic and validates input") {
  const auto& s = *state();
  QueryRequest req;
  req.q = "cyber insurance premium";
  CHECK(handle_search(s, req).dump() == handle_search(s, req).dump());
  const auto out = handle_search(s, req);
  CHECK(out["count"] == 10);
  CHECK(s.clustering.has_cluster(out["query_cluster"].get<int>()));

  req.q = "   ";
  CHECK(code_of([&] { handle_search(s, req); }) == ErrorCode::invalid_argument);
  CHECK(http_status(ErrorCode::invalid_argument) == 400);
  CHECK(http_status(ErrorCode::not_found) == 404);
  CHECK(http_status(ErrorCode::unavailable) == 502);
}

TEST_CASE("filters match an independent scan") {
  const auto& s = *state();
  QueryRequest req;
  req.q = "security";
  req.r = 40;
  req.filters.subtype = "Review";
  std::size_t reviews = 0;
  for (const auto& p : s.papers) reviews += p.subtype_description == "Review";
  const auto out = handle_search(s, req);
  CHECK(out["count"].get<std::size_t>() == reviews);
  for (const auto& row : out["results"]) CHECK(row["subtypeDescription"] == "Review");

  req.filters = {};
  req.filters.year_from = 2019;
  req.filters.year_to = 2020;
  std::size_t in_range = 0;
  for (const auto& p : s.papers) in_range += p.year() >= 2019 && p.year() <= 2020;
  CHECK(handle_search(s, req)["count"].get<std::size_t>() == in_range);
}

TEST_CASE("request parsing") {
  const Params params{{"q", "risk"}, {"r", "3"}, {"cluster", "C2,4"}, {"cluster", "5"}, {"year_from", "2018"}};
  const auto req = parse_query_request(params);
  CHECK(req.q == "risk");
  CHECK(req.r == 3);
  CHECK(req.filters.clusters == std::set<int>{2, 4, 5});
  CHECK(req.filters.year_from == 2018);
  CHECK(code_of([] { parse_query_request({{"q", "x"}, {"r", "abc"}}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("paper listing pages") {
  const auto& s = *state();
  std::vector<std::string> ids;
  for (int page = 1; page <= 3; ++page) {
    const auto out = handle_papers(s, {{"page", std::to_string(page)}, {"page_size", "15"}});
    CHECK(out["total"] == 40);
    CHECK(out["pages"] == 3);
    CHECK(out["papers"].size() == (page < 3 ? 15u : 10u));
    for (const auto& p : out["papers"]) ids.push_back(p["identifier"]);
  }
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 40);
  CHECK(code_of([&] { handle_papers(s, {{"page_size", "0"}}); }) == ErrorCode::invalid_argument);

  const auto one = handle_paper(s, ids[4]);
  CHECK(one["identifier"] == ids[4]);
  CHECK(code_of([&] { handle_paper(s, "nope"); }) == ErrorCode::not_found);
}

TEST_CASE("cluster endpoints agree with the clustering") {
  const auto& s = *state();
  const auto all = handle_clusters(s);
  CHECK(all["k"] == s.clustering.k);
  std::size_t keywords = 0;
  for (const auto& c : all["clusters"]) keywords += c["keyword_count"].get<std::size_t>();
  CHECK(keywords == s.clustering.assignments.size());

  const auto one = handle_cluster(s, 1);
  CHECK(one["keywords"].size() == s.clustering.cluster_size(1));
  double prev = 2.0;
  for (const auto& kw : one["keywords"]) {
    CHECK(kw["weight"].get<double>() <= prev);
    prev = kw["weight"].get<double>();
  }
  CHECK(code_of([&] { handle_cluster(s, 99); }) == ErrorCode::not_found);
}

TEST_CASE("trends count papers per year") {
  const auto& s = *state();
  const auto out = handle_trends(s, {{"cluster", "2"}});
  std::map<int, std::size_t> tally;
  for (const auto& p : s.papers) {
    if (p.cluster_ids.count(2)) ++tally[p.year()];
  }
  std::map<int, std::size_t> got;
  for (const auto& pt : out["series"][0]["points"]) got[pt["year"].get<int>()] = pt["count"].get<std::size_t>();
  for (const auto& [year, n] : tally) CHECK(got[year] == n);
  std::size_t total = 0;
  for (const auto& [year, n] : got) total += n;
  std::size_t expected_total = 0;
  for (const auto& [year, n] : tally) expected_total += n;
  CHECK(total == expected_total);
  CHECK(code_of([&] { handle_trends(s, {}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("rules and projection") {
  const auto& s = *state();
  const auto paths = testing::built_workspace().state_paths();
  CHECK(handle_rules_csv(s) == association::rules_csv(association::load_rules(paths.rules)));
  CHECK(handle_rules(s).size() == s.rules.size());
  const auto proj = handle_projection(s);
  CHECK(proj.dump().find("edges") != std::string::npos);
}

TEST_CASE("HTTP server serves the handlers and reloads") {
  int loads = 0;
  Server server([&] {
    ++loads;
    return state();
  });
  const int port = server.bind_any("127.0.0.1");
  std::thread th([&] { server.run(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/search?q=cyber%20insurance&r=5");
  REQUIRE(res);
  CHECK(res->status == 200);
  QueryRequest req;
  req.q = "cyber insurance";
  req.r = 5;
  CHECK(res->body == handle_search(*state(), req).dump());

  res = client.Get("/api/clusters/99");
  REQUIRE(res);
  CHECK(res->status == 404);
  CHECK(nlohmann::json::parse(res->body)["code"] == "not_found");

  res = client.Get("/api/search?q=");
  REQUIRE(res);
  CHECK(res->status == 400);

  res = client.Get("/api/rules?format=csv");
  REQUIRE(res);
  CHECK(res->body == handle_rules_csv(*state()));

  res = client.Post("/api/admin/reload");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(loads == 2);

  server.stop();
  th.join();
}
