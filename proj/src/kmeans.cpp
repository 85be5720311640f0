#include "litmine/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "litmine/error.hpp"
#include "litmine/random.hpp"

namespace litmine::kmeans {
namespace {

bool rows_equal(std::span<const float> a, std::span<const float> b) {
  return std::equal(a.begin(), a.end(), b.begin());
}

MatrixD init_random_points(const Matrix& points, std::size_t k, Engine& eng) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order.begin(), order.end(), eng);

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (std::size_t idx : order) {
    const bool dup = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
      return rows_equal(points.row(c), points.row(idx));
    });
    if (!dup) chosen.push_back(idx);
    if (chosen.size() == k) break;
  }
  MatrixD centroids(k, points.cols());
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = points.row(chosen[c]);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  }
  return centroids;
}

MatrixD init_farthest_point(const Matrix& points, std::size_t k, Engine& eng) {
  const std::size_t n = points.rows();
  MatrixD centroids(k, points.cols());
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::size_t pick = uniform_index(eng, n);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min(min_d[i], squared_distance(points.row(i), std::as_const(centroids).row(c)));
      if (min_d[i] > far_d) {
        far_d = min_d[i];
        far = i;
      }
    }
    pick = far;
  }
  return centroids;
}

// Returns true if any point changed cluster.
bool assign(const Matrix& points, const MatrixD& centroids, std::vector<std::uint32_t>& assignment,
            std::vector<double>& distance) {
  bool changed = false;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double d = 0.0;
    const auto c = static_cast<std::uint32_t>(nearest(points.row(i), centroids, &d));
    if (c != assignment[i]) changed = true;
    assignment[i] = c;
    distance[i] = d;
  }
  return changed;
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
bool repair_empty(std::size_t k, std::vector<std::uint32_t>& assignment,
                  std::vector<double>& distance, MatrixD& centroids, const Matrix& points) {
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignment) ++counts[a];
  bool repaired = false;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (counts[assignment[i]] > 1 && distance[i] > far_d) {
        far_d = distance[i];
        far = i;
      }
    }
    if (far == points.rows()) break;  // unreachable while k <= distinct points
    --counts[assignment[far]];
    assignment[far] = static_cast<std::uint32_t>(c);
    counts[c] = 1;
    distance[far] = 0.0;
    const auto src = points.row(far);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    repaired = true;
  }
  return repaired;
}

void update(const Matrix& points, const std::vector<std::uint32_t>& assignment, MatrixD& centroids) {
  const std::size_t k = centroids.rows();
  const std::size_t dim = points.cols();
  MatrixD sums(k, dim);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto dst = sums.row(assignment[i]);
    const auto src = points.row(i);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    auto dst = centroids.row(c);
    const auto src = sums.row(c);
    for (std::size_t j = 0; j < dim; ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
  }
}

Result lloyd(const Matrix& points, MatrixD centroids, const Options& options) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  Result res;
  res.assignment.assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> distance(n, 0.0);

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    bool changed = assign(points, centroids, res.assignment, distance);
    changed |= repair_empty(k, res.assignment, distance, centroids, points);
    if (!changed) break;
    update(points, res.assignment, centroids);
    const double w = wcss(points, res.assignment, centroids);
    res.wcss_history.push_back(w);
    res.iterations = iter + 1;
    if (res.wcss_history.size() >= 2) {
      const double prev = res.wcss_history[res.wcss_history.size() - 2];
      if (prev - w < options.tol * prev) break;
    }
  }

  res.centroids = std::move(centroids);
  res.wcss = wcss(points, res.assignment, res.centroids);
  if (res.wcss_history.empty()) res.wcss_history.push_back(res.wcss);

  auto probe = res.assignment;
  res.converged = !assign(points, res.centroids, probe, distance);
  return res;
}

}  // namespace

std::size_t count_distinct(const Matrix& points) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a);
    const auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || !rows_equal(points.row(order[i - 1]), points.row(order[i]))) ++distinct;
  }
  return distinct;
}

double wcss(const Matrix& points, std::span<const std::uint32_t> assignment,
            const MatrixD& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    total += squared_distance(points.row(i), centroids.row(assignment[i]));
  }
  return total;
}

Result run(const Matrix& points, const Options& options) {
  if (options.k == 0) throw Error(ErrorCode::invalid_argument, "k must be positive");
  if (options.max_iter == 0) throw Error(ErrorCode::invalid_argument, "max_iter must be >= 1");
  if (options.tol < 0.0) throw Error(ErrorCode::invalid_argument, "tol must be >= 0");
  const std::size_t distinct = count_distinct(points);
  if (options.k > distinct) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("k={} exceeds the number of distinct points ({})", options.k, distinct));
  }

  if (options.initial_centroids) {
    const auto& init = *options.initial_centroids;
    if (init.rows() != options.k || init.cols() != points.cols()) {
      throw Error(ErrorCode::invalid_argument, "initial centroids have the wrong shape");
    }
    return lloyd(points, init, options);
  }

  Result best;
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    Engine eng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    MatrixD init = options.init == InitMode::farthest_point
                       ? init_farthest_point(points, options.k, eng)
                       : init_random_points(points, options.k, eng);
    Result res = lloyd(points, std::move(init), options);
    res.restart = r;
    if (r == 0 || res.wcss < best.wcss) best = std::move(res);
  }
  return best;
}

}  // namespace litmine::kmeans
