#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "litmine/matrix.hpp"

namespace litmine::kmeans {

enum class InitMode {
  random_points,    // k distinct data points, uniformly sampled
  farthest_point,   // greedy k-means++-style seeding
};

struct Options {
  std::size_t k = 30;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;          // relative WCSS improvement
  std::size_t restarts = 1;   // best-of-R by final WCSS
  InitMode init = InitMode::random_points;
  /// k x dim starting centroids; replaces sampling (restarts then ignored).
  std::optional<MatrixD> initial_centroids;
};

struct Result {
  std::vector<std::uint32_t> assignment;  // 0-based cluster per point
  MatrixD centroids;                      // k x dim
  std::vector<double> wcss_history;       // one value per iteration
  double wcss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // true when the last assignment pass was a fixed point
  std::size_t restart = 0; // which restart produced this result
};

/// Number of distinct rows.
std::size_t count_distinct(const Matrix& points);

/// Lloyd iterations: nearest centroid by squared Euclidean distance (ties go
/// to the lowest id), member-mean update, empty clusters reseeded with the
/// point farthest from its centroid. Deterministic for a given seed.
///
/// Throws Error(invalid_argument) when k == 0 or k exceeds the number of
/// distinct points.
Result run(const Matrix& points, const Options& options);

/// Index of the nearest centroid; ties go to the lowest index.
template <typename T, typename C>
std::size_t nearest(std::span<const T> point, const BasicMatrix<C>& centroids,
                    double* best_distance = nullptr) {
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (c == 0 || d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_distance) *best_distance = best_d;
  return best;
}

/// Sum of squared distances of each point to its assigned centroid.
double wcss(const Matrix& points, std::span<const std::uint32_t> assignment,
            const MatrixD& centroids);

}  // namespace litmine::kmeans
