#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "litmine/embedding.hpp"
#include "litmine/error.hpp"

using namespace litmine;
using namespace litmine::embedding;

TEST_CASE("l2_normalize") {
  const Vector v{3.0f, 4.0f};
  const auto n = l2_normalize(v);
  CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(l2_normalize(n) == n);
  CHECK_THROWS_WITH_AS(l2_normalize(Vector{0.0f, 0.0f}), "zero norm", Error);

  std::mt19937 rng(3);
  std::normal_distribution<float> g;
  for (int t = 0; t < 100; ++t) {
    Vector x(17);
    for (auto& c : x) c = g(rng);
    const auto u = l2_normalize(x);
    CHECK(std::abs(norm(u) - 1.0) < 1e-6);
    CHECK(std::abs(cosine_similarity(x, u) - 1.0) < 1e-6);
  }
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(Vector{1, 2}, Vector{1, 2}) == doctest::Approx(1.0));
  CHECK(cosine_similarity(Vector{1, 0}, Vector{0, 1}) == 0.0);
  CHECK(std::abs(cosine_similarity(Vector{1, 0}, Vector{1, 1}) - 0.70710678) < 1e-8);
  CHECK_THROWS_AS(cosine_similarity(Vector{1, 0}, Vector{1, 0, 0}), Error);
  CHECK_THROWS_AS(cosine_similarity(Vector{0, 0}, Vector{1, 0}), Error);
}

TEST_CASE("hash provider determinism and spread") {
  HashEmbeddingProvider p(64, 9);
  CHECK(p.dimension() == 64);
  CHECK(p.embed("cyber risk") == p.embed("cyber risk"));
  CHECK(HashEmbeddingProvider(64, 10).embed("cyber risk") != p.embed("cyber risk"));
  CHECK_THROWS_AS(p.embed(""), Error);

  std::mt19937 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto a = "w" + std::to_string(rng());
    const auto b = "w" + std::to_string(rng());
    if (a == b) continue;
    CHECK(cosine_similarity(p.embed(a), p.embed(b)) < 1.0);
  }
}

TEST_CASE("unit vectors: squared distance equals 2 - 2 cos") {
  HashEmbeddingProvider p(32);
  for (int t = 0; t < 50; ++t) {
    const auto a = p.embed("a" + std::to_string(t));
    const auto b = p.embed("b" + std::to_string(t));
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    CHECK(std::abs(d - (2.0 - 2.0 * cosine_similarity(a, b))) < 1e-6);
  }
}

TEST_CASE("embed_batch") {
  HashEmbeddingProvider p(16);
  CHECK(p.embed_batch({}).empty());
  const std::vector<std::string> texts{"x", "y", "z"};
  const auto batch = p.embed_batch(texts);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(batch[i] == p.embed(texts[i]));
  const std::vector<std::string> bad{"x", "", "z"};
  CHECK_THROWS_WITH_AS(p.embed_batch(bad), "batch item 1: empty text", Error);
}

TEST_CASE("precomputed store round trip is bit exact") {
  const auto path = std::filesystem::temp_directory_path() / "litmine_store.lmeb";
  HashEmbeddingProvider h(8);
  std::map<std::string, Vector> entries{{"alpha", h.embed("alpha")}, {"beta", h.embed("beta")}};
  write_embedding_store(path, 8, entries);
  const auto store = PrecomputedEmbeddingProvider::load(path);
  CHECK(store.size() == 2);
  CHECK(store.embed("alpha") == entries["alpha"]);
  CHECK(store.embed("beta") == entries["beta"]);
  CHECK_THROWS_WITH_AS(store.embed("gamma"), "unknown text: 'gamma'", Error);

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.put('X');
  f.close();
  CHECK_THROWS_AS(PrecomputedEmbeddingProvider::load(path), Error);
}

TEST_CASE("precomputed provider normalizes non-unit vectors") {
  PrecomputedEmbeddingProvider p(2, {{"a", Vector{3, 4}}});
  const auto v = p.embed("a");
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK_THROWS_AS(PrecomputedEmbeddingProvider(2, {{"a", Vector{1, 2, 3}}}), Error);
}

TEST_CASE("remote provider: chunked batch equals per-item calls") {
  HashEmbeddingProvider backend(12, 4);
  std::atomic<int> calls{0};
  httplib::Server server;
  server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["vectors"] = nlohmann::json::array();
    for (const auto& t : body["texts"]) {
      auto v = backend.embed(t.get<std::string>());
      for (auto& x : v) x *= 3.0f;  // server returns unnormalized vectors
      out["vectors"].push_back(v);
    }
    res.set_content(out.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEmbeddingProvider::Options opt;
  opt.base_url = "http://127.0.0.1:" + std::to_string(port);
  opt.dimension = 12;
  opt.batch_size = 64;
  RemoteEmbeddingProvider remote(opt);

  std::vector<std::string> texts;
  for (int i = 0; i < 1000; ++i) texts.push_back("text " + std::to_string(i));
  const auto batch = remote.embed_batch(texts);
  CHECK(calls.load() == 16);
  REQUIRE(batch.size() == texts.size());
  bool same = true;
  for (std::size_t i = 0; i < texts.size(); i += 97) same = same && batch[i] == remote.embed(texts[i]);
  CHECK(same);
  CHECK(std::abs(norm(batch[5]) - 1.0) < 1e-6);

  auto broken = opt;
  broken.path = "/broken";
  try {
    RemoteEmbeddingProvider(broken).embed("x");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unavailable);
    CHECK(e.retryable());
  }
  server.stop();
  th.join();

  auto gone = opt;
  gone.timeout_seconds = 2;
  try {
    RemoteEmbeddingProvider(gone).embed("x");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.retryable());
  }
}
