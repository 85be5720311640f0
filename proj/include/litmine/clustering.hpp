#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "litmine/embedding.hpp"
#include "litmine/kmeans.hpp"
#include "litmine/matrix.hpp"

namespace litmine::clustering {

using EmbeddingMap = std::map<std::string, embedding::Vector, std::less<>>;

/// Keyword topic clusters. Cluster ids are 1..k.
struct Clustering {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> labels;  // optional human labels, "" when unset
  MatrixD centroids;                // row id-1 holds cluster id's centroid
  std::map<std::string, int, std::less<>> assignments;
  std::vector<double> wcss_history;
  std::size_t iterations = 0;

  std::size_t dimension() const noexcept { return centroids.cols(); }
  std::vector<std::string> members(int cluster_id) const;
  std::size_t cluster_size(int cluster_id) const;
  std::string label(int cluster_id) const;
  bool has_cluster(int cluster_id) const {
    return cluster_id >= 1 && static_cast<std::size_t>(cluster_id) <= k;
  }

  /// Centroids are stored as base64 little-endian float32.
  nlohmann::ordered_json to_json() const;
  static Clustering from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Clustering load(const std::filesystem::path& path);
};

/// K-means over keyword embeddings (keywords taken in sorted order).
Clustering kmeans(const EmbeddingMap& embeddings, const kmeans::Options& options);

/// Within-cluster sum of squares. Throws if a keyword lacks an embedding.
double wcss(const Clustering& clustering, const EmbeddingMap& embeddings);

/// Nearest-centroid id for an unseen embedding (ties -> lower id).
int assign_new(std::span<const float> embedding, const Clustering& clustering);

/// Union of cluster ids over the keywords that have an assignment.
std::set<int> paper_clusters(const std::set<std::string>& keywords,
                             const std::map<std::string, int, std::less<>>& assignments);

struct WordCloudSpec {
  int cluster_id = 0;
  std::map<std::string, double> weights;  // 1 - d/d_max, in [0, 1]
};

WordCloudSpec wordcloud_weights(int cluster_id, const Clustering& clustering,
                                const EmbeddingMap& embeddings);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Top-2 principal-component coordinates of the rows of `rows`
/// (mean-centred). Power iteration with deflation; each component's
/// largest-magnitude coordinate is made positive.
std::vector<Point2> pca_project(const MatrixD& rows, double tolerance = 1e-9);

struct ProjectionEdge {
  std::vector<int> lhs;
  int rhs = 0;
};

struct CentroidProjection {
  std::map<int, Point2> coords;
  std::vector<ProjectionEdge> edges;
  std::map<int, std::size_t> node_sizes;  // keywords per cluster

  nlohmann::ordered_json to_json() const;
};

/// Coordinates and node sizes; edges are attached by the caller from rules.
CentroidProjection pca_project_centroids(const Clustering& clustering);

}  // namespace litmine::clustering
