#include <doctest.h>

#include <cmath>
#include <random>

#include "litmine/error.hpp"
#include "litmine/kmeans.hpp"

using namespace litmine;

namespace {

Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  Matrix m(n, dim);
  for (auto& x : m.data()) x = g(rng);
  return m;
}

Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  Matrix m(0, rows.begin()->size());
  for (const auto& r : rows) m.append_row(std::vector<float>(r));
  return m;
}

}  // namespace

TEST_CASE("k equal to the number of points gives zero WCSS") {
  const auto pts = random_points(12, 3, 1);
  kmeans::Options opt;
  opt.k = 12;
  const auto r = kmeans::run(pts, opt);
  CHECK(r.wcss == doctest::Approx(0.0));
  std::vector<int> seen(12, 0);
  for (auto a : r.assignment) ++seen[a];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("k = 1 centroid is the global mean") {
  const auto pts = random_points(40, 4, 2);
  kmeans::Options opt;
  opt.k = 1;
  const auto r = kmeans::run(pts, opt);
  double total = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 40; ++i) mean += pts(i, j);
    mean /= 40.0;
    CHECK(std::abs(r.centroids(0, j) - mean) < 1e-9);
    for (std::size_t i = 0; i < 40; ++i) total += (pts(i, j) - mean) * (pts(i, j) - mean);
  }
  CHECK(std::abs(r.wcss - total) < 1e-6);
}

TEST_CASE("WCSS never increases and the fixed point is stable") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pts = random_points(200, 5, seed);
    kmeans::Options opt;
    opt.k = 6;
    opt.seed = seed;
    const auto r = kmeans::run(pts, opt);
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
      CHECK(r.wcss_history[i] <= r.wcss_history[i - 1] + 1e-9);
    }
    CHECK(std::abs(kmeans::wcss(pts, r.assignment, r.centroids) - r.wcss) < 1e-6);
    if (r.converged) {
      for (std::size_t i = 0; i < pts.rows(); ++i) {
        CHECK(kmeans::nearest(pts.row(i), r.centroids) == r.assignment[i]);
      }
    }
  }
}

TEST_CASE("deterministic per seed") {
  const auto pts = random_points(100, 3, 9);
  kmeans::Options opt;
  opt.k = 4;
  opt.seed = 11;
  opt.restarts = 3;
  const auto a = kmeans::run(pts, opt);
  const auto b = kmeans::run(pts, opt);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids.data() == b.centroids.data());
}

TEST_CASE("argument errors") {
  const auto pts = from_rows({{0, 0}, {0, 0}, {1, 1}});
  kmeans::Options opt;
  opt.k = 0;
  CHECK_THROWS_AS(kmeans::run(pts, opt), Error);
  opt.k = 3;
  CHECK_THROWS_AS(kmeans::run(pts, opt), Error);  // only two distinct points
  opt.k = 2;
  CHECK(kmeans::run(pts, opt).wcss == doctest::Approx(0.0));
  CHECK(kmeans::count_distinct(pts) == 2);
}

TEST_CASE("two points in one cluster") {
  const auto pts = from_rows({{0, 0}, {2, 0}});
  MatrixD c(1, 2);
  c(0, 0) = 1.0;
  const std::vector<std::uint32_t> a{0, 0};
  CHECK(kmeans::wcss(pts, a, c) == 2.0);
}

TEST_CASE("nearest breaks ties toward the lower index") {
  MatrixD c(2, 2);
  c(0, 0) = -1;
  c(1, 0) = 1;
  const std::vector<float> mid{0, 0};
  CHECK(kmeans::nearest(std::span<const float>(mid), c) == 0);
}

TEST_CASE("explicit initial centroids are honoured") {
  const auto pts = from_rows({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  kmeans::Options opt;
  opt.k = 2;
  MatrixD init(2, 2);
  init(0, 0) = 10;
  opt.initial_centroids = init;
  const auto r = kmeans::run(pts, opt);
  CHECK(r.assignment == std::vector<std::uint32_t>{1, 1, 0, 0});
  CHECK(r.wcss == doctest::Approx(1.0));
}
