#include "litmine/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "litmine/binary_io.hpp"
#include "litmine/error.hpp"
#include "litmine/random.hpp"

namespace litmine::clustering {

std::vector<std::string> Clustering::members(int cluster_id) const {
  std::vector<std::string> out;
  for (const auto& [kw, id] : assignments) {
    if (id == cluster_id) out.push_back(kw);
  }
  return out;
}

std::size_t Clustering::cluster_size(int cluster_id) const {
  return static_cast<std::size_t>(std::count_if(
      assignments.begin(), assignments.end(), [&](const auto& kv) { return kv.second == cluster_id; }));
}

std::string Clustering::label(int cluster_id) const {
  if (!has_cluster(cluster_id) || labels.size() < k) return {};
  return labels[static_cast<std::size_t>(cluster_id - 1)];
}

nlohmann::ordered_json Clustering::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["seed"] = seed;
  j["labels"] = labels;
  j["dimension"] = centroids.cols();
  std::vector<float> flat(centroids.data().begin(), centroids.data().end());
  j["centroids"] = io::encode_f32_base64(flat);
  nlohmann::ordered_json a = nlohmann::ordered_json::object();
  for (const auto& [kw, id] : assignments) a[kw] = id;
  j["assignments"] = std::move(a);
  j["wcss_history"] = wcss_history;
  j["iterations"] = iterations;
  return j;
}

Clustering Clustering::from_json(const nlohmann::json& j) {
  Clustering c;
  c.k = j.at("k").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.labels = j.value("labels", std::vector<std::string>{});
  c.labels.resize(c.k);
  const auto dim = j.at("dimension").get<std::size_t>();
  const auto flat = io::decode_f32_base64(j.at("centroids").get<std::string>());
  if (flat.size() != c.k * dim) {
    throw Error(ErrorCode::data_error,
                fmt::format("centroid matrix has {} values, expected {}", flat.size(), c.k * dim));
  }
  c.centroids = MatrixD(c.k, dim);
  std::copy(flat.begin(), flat.end(), c.centroids.data().begin());
  for (const auto& [kw, id] : j.at("assignments").items()) {
    const int v = id.get<int>();
    if (!c.has_cluster(v)) {
      throw Error(ErrorCode::data_error, fmt::format("keyword '{}' has cluster id {}", kw, v));
    }
    c.assignments[kw] = v;
  }
  c.wcss_history = j.value("wcss_history", std::vector<double>{});
  c.iterations = j.value("iterations", std::size_t{0});
  return c;
}

void Clustering::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  out << to_json().dump(2) << '\n';
}

Clustering Clustering::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::precondition, fmt::format("cannot open clustering {}", path.string()));
  }
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::data_error, fmt::format("{}: {}", path.string(), e.what()));
  }
}

Clustering kmeans(const EmbeddingMap& embeddings, const kmeans::Options& options) {
  if (embeddings.empty()) throw Error(ErrorCode::invalid_argument, "no keyword embeddings to cluster");
  Matrix points;
  for (const auto& [kw, vec] : embeddings) points.append_row(vec);
  auto res = kmeans::run(points, options);

  Clustering c;
  c.k = options.k;
  c.seed = options.seed;
  c.labels.assign(c.k, "");
  c.centroids = std::move(res.centroids);
  c.wcss_history = std::move(res.wcss_history);
  c.iterations = res.iterations;
  std::size_t i = 0;
  for (const auto& [kw, vec] : embeddings) {
    c.assignments.emplace(kw, static_cast<int>(res.assignment[i++]) + 1);
  }
  return c;
}

double wcss(const Clustering& clustering, const EmbeddingMap& embeddings) {
  double total = 0.0;
  for (const auto& [kw, id] : clustering.assignments) {
    const auto it = embeddings.find(kw);
    if (it == embeddings.end()) {
      throw Error(ErrorCode::not_found, fmt::format("keyword '{}' has no embedding", kw));
    }
    total += squared_distance(std::span<const float>(it->second),
                              clustering.centroids.row(static_cast<std::size_t>(id - 1)));
  }
  return total;
}

int assign_new(std::span<const float> embedding, const Clustering& clustering) {
  if (embedding.size() != clustering.dimension()) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("dimension mismatch: {} vs {}", embedding.size(), clustering.dimension()));
  }
  return static_cast<int>(kmeans::nearest(embedding, clustering.centroids)) + 1;
}

std::set<int> paper_clusters(const std::set<std::string>& keywords,
                             const std::map<std::string, int, std::less<>>& assignments) {
  std::set<int> out;
  for (const auto& kw : keywords) {
    if (const auto it = assignments.find(kw); it != assignments.end()) out.insert(it->second);
  }
  return out;
}

WordCloudSpec wordcloud_weights(int cluster_id, const Clustering& clustering,
                                const EmbeddingMap& embeddings) {
  if (!clustering.has_cluster(cluster_id)) {
    throw Error(ErrorCode::not_found, fmt::format("unknown cluster id {}", cluster_id));
  }
  const auto centroid = clustering.centroids.row(static_cast<std::size_t>(cluster_id - 1));
  std::map<std::string, double> dist;
  double d_max = 0.0;
  for (const auto& kw : clustering.members(cluster_id)) {
    const auto it = embeddings.find(kw);
    if (it == embeddings.end()) {
      throw Error(ErrorCode::not_found, fmt::format("keyword '{}' has no embedding", kw));
    }
    const double d = std::sqrt(squared_distance(std::span<const float>(it->second), centroid));
    dist[kw] = d;
    d_max = std::max(d_max, d);
  }
  if (dist.empty()) {
    throw Error(ErrorCode::precondition, fmt::format("cluster {} has no members", cluster_id));
  }
  WordCloudSpec spec;
  spec.cluster_id = cluster_id;
  for (const auto& [kw, d] : dist) spec.weights[kw] = d_max > 0.0 ? 1.0 - d / d_max : 1.0;
  return spec;
}

namespace {

std::vector<double> mat_vec(const std::vector<double>& m, std::size_t n, const std::vector<double>& v) {
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m[i * n + j] * v[j];
    out[i] = acc;
  }
  return out;
}

double vnorm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Dominant eigenpair of the symmetric PSD matrix `g`, orthogonal to `against`.
std::pair<double, std::vector<double>> power_iteration(const std::vector<double>& g, std::size_t n,
                                                       const std::vector<std::vector<double>>& against,
                                                       double tolerance) {
  Engine eng(0x5eed);
  std::vector<double> v(n);
  for (auto& x : v) x = gaussian(eng);
  auto orthogonalize = [&](std::vector<double>& x) {
    for (const auto& u : against) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += x[i] * u[i];
      for (std::size_t i = 0; i < n; ++i) x[i] -= d * u[i];
    }
  };
  orthogonalize(v);
  double nv = vnorm(v);
  if (nv == 0.0) return {0.0, std::vector<double>(n, 0.0)};
  for (auto& x : v) x /= nv;

  double lambda = 0.0;
  constexpr int kMaxIter = 200000;
  for (int it = 0; it < kMaxIter; ++it) {
    auto w = mat_vec(g, n, v);
    orthogonalize(w);
    const double nw = vnorm(w);
    if (nw <= 1e-300) return {0.0, std::vector<double>(n, 0.0)};
    for (auto& x : w) x /= nw;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta = std::max(delta, std::abs(w[i] - v[i]));
    v = std::move(w);
    const double next = nw;
    const bool settled = delta < tolerance && std::abs(next - lambda) <= tolerance * std::max(1.0, next);
    lambda = next;
    if (settled) break;
  }
  // Rayleigh quotient for the final estimate.
  const auto gv = mat_vec(g, n, v);
  double rq = 0.0;
  for (std::size_t i = 0; i < n; ++i) rq += v[i] * gv[i];
  return {std::max(rq, 0.0), v};
}

}  // namespace

std::vector<Point2> pca_project(const MatrixD& rows, double tolerance) {
  const std::size_t n = rows.rows();
  const std::size_t p = rows.cols();
  if (n < 2) throw Error(ErrorCode::invalid_argument, "projection needs at least 2 centroids");

  MatrixD centred = rows;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += rows(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centred(i, j) -= mean;
  }

  // Work on the n x n Gram matrix: its eigenvectors u give coordinates
  // sqrt(lambda) * u directly, and n (clusters) is small.
  std::vector<double> gram(n * n, 0.0);
  double trace = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) acc += centred(a, j) * centred(b, j);
      gram[a * n + b] = gram[b * n + a] = acc;
    }
    trace += gram[a * n + a];
  }

  std::vector<Point2> coords(n);
  std::vector<std::vector<double>> found;
  for (int component = 0; component < 2; ++component) {
    auto [lambda, u] = power_iteration(gram, n, found, tolerance);
    if (lambda <= 1e-14 * std::max(trace, 1e-300)) {
      lambda = 0.0;
      std::fill(u.begin(), u.end(), 0.0);
    }
    // Deflate.
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) gram[a * n + b] -= lambda * u[a] * u[b];
    }
    const double scale = std::sqrt(lambda);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(u[i]) > std::abs(u[arg])) arg = i;
    }
    const double sign = u[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = sign * scale * u[i];
      if (component == 0) coords[i].x = c; else coords[i].y = c;
    }
    if (lambda > 0.0) found.push_back(std::move(u));
  }
  return coords;
}

nlohmann::ordered_json CentroidProjection::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& [id, pt] : coords) {
    nlohmann::ordered_json node;
    node["cluster"] = id;
    node["x"] = pt.x;
    node["y"] = pt.y;
    const auto it = node_sizes.find(id);
    node["keyword_count"] = it == node_sizes.end() ? 0 : it->second;
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  nlohmann::ordered_json e = nlohmann::ordered_json::array();
  for (const auto& edge : edges) {
    nlohmann::ordered_json item;
    item["lhs"] = edge.lhs;
    item["rhs"] = edge.rhs;
    e.push_back(std::move(item));
  }
  j["edges"] = std::move(e);
  return j;
}

CentroidProjection pca_project_centroids(const Clustering& clustering) {
  if (clustering.k < 2) throw Error(ErrorCode::invalid_argument, "projection needs k >= 2");
  const auto pts = pca_project(clustering.centroids);
  CentroidProjection proj;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    proj.coords[id] = pts[i];
    proj.node_sizes[id] = 0;
  }
  for (const auto& [kw, id] : clustering.assignments) ++proj.node_sizes[id];
  return proj;
}

}  // namespace litmine::clustering
