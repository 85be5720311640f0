#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "litmine/clustering.hpp"
#include "litmine/error.hpp"

using namespace litmine;
using namespace litmine::clustering;

namespace {

// Cyclic Jacobi rotations on a symmetric matrix; returns all eigenvalues.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

Clustering manual(std::size_t k, std::size_t dim) {
  Clustering c;
  c.k = k;
  c.centroids = MatrixD(k, dim);
  c.labels.assign(k, "");
  return c;
}

}  // namespace

TEST_CASE("kmeans over keywords uses ids 1..k and sorted keyword order") {
  EmbeddingMap emb{{"b", {0, 0}}, {"a", {0, 0.1f}}, {"c", {5, 5}}, {"d", {5, 5.1f}}};
  litmine::kmeans::Options opt;
  opt.k = 2;
  opt.restarts = 5;
  const auto c = clustering::kmeans(emb, opt);
  CHECK(c.k == 2);
  CHECK(c.assignments.at("a") == c.assignments.at("b"));
  CHECK(c.assignments.at("c") == c.assignments.at("d"));
  CHECK(c.assignments.at("a") != c.assignments.at("c"));
  for (const auto& [kw, id] : c.assignments) CHECK(c.has_cluster(id));
  CHECK(std::abs(wcss(c, emb) - 0.01) < 1e-6);
  CHECK(c.cluster_size(1) + c.cluster_size(2) == 4);

  // each centroid is the member mean
  for (int id = 1; id <= 2; ++id) {
    double mx = 0, my = 0;
    const auto mem = c.members(id);
    for (const auto& kw : mem) {
      mx += emb.at(kw)[0];
      my += emb.at(kw)[1];
    }
    CHECK(std::abs(c.centroids(id - 1, 0) - mx / mem.size()) < 1e-6);
    CHECK(std::abs(c.centroids(id - 1, 1) - my / mem.size()) < 1e-6);
  }

  auto missing = emb;
  missing.erase("a");
  CHECK_THROWS_AS(wcss(c, missing), Error);
}

TEST_CASE("assign_new") {
  auto c = manual(3, 2);
  c.centroids(0, 0) = -1;
  c.centroids(1, 0) = 1;
  c.centroids(2, 1) = 4;
  const std::vector<float> mid{0, 0};
  CHECK(assign_new(mid, c) == 1);
  const std::vector<float> at3{0, 4};
  CHECK(assign_new(at3, c) == 3);
  const std::vector<float> wrong{0, 0, 0};
  CHECK_THROWS_AS(assign_new(wrong, c), Error);

  std::mt19937 rng(4);
  std::uniform_real_distribution<float> u(-3, 5);
  for (int t = 0; t < 100; ++t) {
    const std::vector<float> v{u(rng), u(rng)};
    int best = 0;
    double bd = 1e300;
    for (int id = 1; id <= 3; ++id) {
      const double dx = v[0] - c.centroids(id - 1, 0), dy = v[1] - c.centroids(id - 1, 1);
      if (dx * dx + dy * dy < bd) {
        bd = dx * dx + dy * dy;
        best = id;
      }
    }
    CHECK(assign_new(v, c) == best);
  }
}

TEST_CASE("paper clusters") {
  const std::map<std::string, int, std::less<>> a{{"kw1", 1}, {"kw2", 1}, {"kw3", 2}};
  CHECK(paper_clusters({"kw1", "kw2", "kw3"}, a) == std::set<int>{1, 2});
  CHECK(paper_clusters({"other"}, a).empty());
  CHECK(paper_clusters({}, a).empty());
}

TEST_CASE("word cloud weights") {
  auto c = manual(2, 2);
  EmbeddingMap emb;
  const float d[] = {0, 1, 2, 3, 4};
  for (int i = 0; i < 5; ++i) {
    const auto kw = "k" + std::to_string(i);
    emb[kw] = {d[i] * 0.6f, d[i] * 0.8f};
    c.assignments[kw] = 1;
  }
  emb["solo"] = {9, 9};
  c.assignments["solo"] = 2;
  c.centroids(1, 0) = 9;
  c.centroids(1, 1) = 9;

  const auto w = wordcloud_weights(1, c, emb);
  const double expected[] = {1.0, 0.75, 0.5, 0.25, 0.0};
  for (int i = 0; i < 5; ++i) CHECK(std::abs(w.weights.at("k" + std::to_string(i)) - expected[i]) < 1e-6);
  CHECK(wordcloud_weights(2, c, emb).weights.at("solo") == 1.0);
  CHECK_THROWS_AS(wordcloud_weights(3, c, emb), Error);
}

TEST_CASE("PCA on a planar configuration preserves distances") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const std::size_t p = 6;
  // orthonormal pair spanning the plane
  std::vector<double> e1(p), e2(p);
  for (auto& x : e1) x = g(rng);
  double n1 = 0;
  for (double x : e1) n1 += x * x;
  for (auto& x : e1) x /= std::sqrt(n1);
  for (auto& x : e2) x = g(rng);
  double dot = 0;
  for (std::size_t i = 0; i < p; ++i) dot += e1[i] * e2[i];
  for (std::size_t i = 0; i < p; ++i) e2[i] -= dot * e1[i];
  double n2 = 0;
  for (double x : e2) n2 += x * x;
  for (auto& x : e2) x /= std::sqrt(n2);

  MatrixD rows(7, p);
  for (std::size_t r = 0; r < 7; ++r) {
    const double a = g(rng) * 3, b = g(rng);
    for (std::size_t i = 0; i < p; ++i) rows(r, i) = 2.0 + a * e1[i] + b * e2[i];
  }
  const auto pts = pca_project(rows);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = i + 1; j < 7; ++j) {
      double orig = 0;
      for (std::size_t k = 0; k < p; ++k) orig += (rows(i, k) - rows(j, k)) * (rows(i, k) - rows(j, k));
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      CHECK(std::abs(std::sqrt(orig) - std::sqrt(dx * dx + dy * dy)) < 1e-6);
    }
  }
}

TEST_CASE("PCA maps duplicate rows to identical coordinates") {
  MatrixD rows(4, 3);
  const double v[4][3] = {{1, 2, 3}, {1, 2, 3}, {0, -1, 4}, {5, 0, 0}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) rows(i, j) = v[i][j];
  const auto pts = pca_project(rows);
  CHECK(pts[0].x == pts[1].x);
  CHECK(pts[0].y == pts[1].y);
}

TEST_CASE("PCA captured variance equals the top two eigenvalues") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const std::size_t n = 5, p = 8;
    MatrixD rows(n, p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) rows(i, j) = g(rng) * (1.0 + j);
    std::vector<double> mean(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) mean[j] += rows(i, j) / n;
    std::vector<std::vector<double>> scatter(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) scatter[a][b] += (rows(i, a) - mean[a]) * (rows(i, b) - mean[b]);
    const auto ev = jacobi_eigenvalues(scatter);

    const auto pts = pca_project(rows);
    double sx = 0, sy = 0;
    for (const auto& q : pts) {
      sx += q.x * q.x;
      sy += q.y * q.y;
    }
    CHECK(std::abs(sx - ev[0]) < 1e-6 * std::max(1.0, ev[0]));
    CHECK(std::abs(sy - ev[1]) < 1e-6 * std::max(1.0, ev[1]));
  }
}

TEST_CASE("centroid projection node sizes") {
  auto c = manual(3, 2);
  c.centroids(0, 0) = 1;
  c.centroids(1, 1) = 1;
  c.centroids(2, 0) = -1;
  c.assignments = {{"a", 1}, {"b", 1}, {"c", 3}};
  const auto proj = pca_project_centroids(c);
  CHECK(proj.coords.size() == 3);
  CHECK(proj.node_sizes.at(1) == 2);
  CHECK(proj.node_sizes.at(2) == 0);
  CHECK(proj.node_sizes.at(3) == 1);
  CHECK_THROWS_AS(pca_project_centroids(manual(1, 2)), Error);
}

TEST_CASE("clustering JSON round trip") {
  EmbeddingMap emb;
  std::mt19937 rng(2);
  std::normal_distribution<float> g;
  for (int i = 0; i < 20; ++i) emb["kw" + std::to_string(i)] = {g(rng), g(rng), g(rng)};
  litmine::kmeans::Options opt;
  opt.k = 4;
  opt.seed = 3;
  auto c = clustering::kmeans(emb, opt);
  c.labels[0] = "first";
  const auto back = Clustering::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.label(1) == "first");
  CHECK(back.assignments == c.assignments);
}
