#include "litmine/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "litmine/binary_io.hpp"
#include "litmine/error.hpp"
#include "litmine/random.hpp"

namespace litmine::embedding {

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(std::span<const float> v) {
  const double n = norm(v);
  if (!(n > 0.0)) throw Error(ErrorCode::invalid_argument, "zero norm");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / n);
  }
  return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("dimension mismatch: {} vs {}", a.size(), b.size()));
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorCode::invalid_argument, "zero norm");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<Vector> EmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.push_back(embed(texts[i]));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("batch item {}: {}", i, e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) throw Error(ErrorCode::invalid_argument, "embedding dimension must be > 0");
}

std::string HashEmbeddingProvider::provider_id() const {
  return fmt::format("hash-p{}-s{}", dimension_, seed_);
}

Vector HashEmbeddingProvider::embed(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::invalid_argument, "empty text");
  Engine eng(fnv1a64(text, splitmix64(seed_)));
  std::vector<double> raw(dimension_);
  double sq = 0.0;
  for (auto& x : raw) {
    x = gaussian(eng);
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  Vector out(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(raw[i] / n);
  return out;
}

// ---------------------------------------------------------------------------

PrecomputedEmbeddingProvider::PrecomputedEmbeddingProvider(
    std::size_t dimension, std::unordered_map<std::string, Vector> table, std::string id)
    : dimension_(dimension), table_(std::move(table)), id_(std::move(id)) {
  for (auto& [key, vec] : table_) {
    if (vec.size() != dimension_) {
      throw Error(ErrorCode::data_error,
                  fmt::format("embedding for '{}' has dimension {}, expected {}", key,
                              vec.size(), dimension_));
    }
    const double n = norm(vec);
    if (!std::isfinite(n) || !(n > 0.0)) {
      throw Error(ErrorCode::data_error, fmt::format("embedding for '{}' has zero norm", key));
    }
    // Stored unit vectors are served bit-exactly; anything else is normalized.
    if (std::abs(n - 1.0) > 1e-5) vec = l2_normalize(vec);
  }
}

PrecomputedEmbeddingProvider PrecomputedEmbeddingProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::not_found, fmt::format("cannot open embedding store {}", path.string()));
  }
  if (io::read_bytes(in, 4, "magic") != "LMEB") {
    throw Error(ErrorCode::data_error, fmt::format("{}: bad magic", path.string()));
  }
  const auto version = io::read_u32(in, "version");
  if (version != kFormatVersion) {
    throw Error(ErrorCode::data_error,
                fmt::format("{}: unsupported version {}", path.string(), version));
  }
  const auto dim = io::read_u32(in, "dimension");
  const auto count = io::read_u64(in, "count");
  std::unordered_map<std::string, Vector> table;
  table.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = io::read_u32(in, "key length");
    auto key = io::read_bytes(in, len, "key");
    Vector v(dim);
    io::read_f32s(in, v, "vector");
    table.emplace(std::move(key), std::move(v));
  }
  return PrecomputedEmbeddingProvider(dim, std::move(table),
                                      "precomputed:" + path.filename().string());
}

Vector PrecomputedEmbeddingProvider::embed(std::string_view text) const {
  const auto it = table_.find(std::string(text));
  if (it == table_.end()) {
    throw Error(ErrorCode::not_found, fmt::format("unknown text: '{}'", text));
  }
  return it->second;
}

void write_embedding_store(const std::filesystem::path& path, std::size_t dimension,
                           const std::map<std::string, Vector>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  io::write_bytes(out, "LMEB");
  io::write_u32(out, PrecomputedEmbeddingProvider::kFormatVersion);
  io::write_u32(out, static_cast<std::uint32_t>(dimension));
  io::write_u64(out, entries.size());
  for (const auto& [key, vec] : entries) {
    if (vec.size() != dimension) {
      throw Error(ErrorCode::invalid_argument, fmt::format("'{}' has wrong dimension", key));
    }
    io::write_u32(out, static_cast<std::uint32_t>(key.size()));
    io::write_bytes(out, key);
    io::write_f32s(out, vec);
  }
}

// ---------------------------------------------------------------------------

RemoteEmbeddingProvider::RemoteEmbeddingProvider(Options options)
    : options_(std::move(options)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.max_in_flight))) {
  if (options_.batch_size == 0) options_.batch_size = 1;
}

RemoteEmbeddingProvider::~RemoteEmbeddingProvider() = default;

std::string RemoteEmbeddingProvider::provider_id() const {
  return fmt::format("remote:{}{}#{}", options_.base_url, options_.path, options_.model);
}

std::vector<Vector> RemoteEmbeddingProvider::request(std::span<const std::string> texts) const {
  nlohmann::json body;
  body["texts"] = std::vector<std::string>(texts.begin(), texts.end());

  in_flight_.acquire();
  httplib::Result res;
  {
    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    res = client.Post(options_.path, body.dump(), "application/json");
  }
  in_flight_.release();

  if (!res) {
    throw Error(ErrorCode::unavailable,
                fmt::format("embedding server {} unreachable: {}", options_.base_url,
                            httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(res->status >= 500 ? ErrorCode::unavailable : ErrorCode::data_error,
                fmt::format("embedding server returned HTTP {}", res->status));
  }

  std::vector<Vector> vectors;
  try {
    const auto reply = nlohmann::json::parse(res->body);
    for (const auto& row : reply.at("vectors")) vectors.push_back(row.get<Vector>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::data_error, fmt::format("bad embedding response: {}", e.what()));
  }
  if (vectors.size() != texts.size()) {
    throw Error(ErrorCode::data_error,
                fmt::format("embedding server returned {} vectors for {} texts", vectors.size(),
                            texts.size()));
  }
  for (auto& v : vectors) {
    if (v.size() != options_.dimension) {
      throw Error(ErrorCode::data_error,
                  fmt::format("embedding server returned dimension {}, expected {}", v.size(),
                              options_.dimension));
    }
    v = l2_normalize(v);
  }
  return vectors;
}

Vector RemoteEmbeddingProvider::embed(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::invalid_argument, "empty text");
  const std::string owned(text);
  return std::move(request(std::span<const std::string>(&owned, 1)).front());
}

std::vector<Vector> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) {
      throw Error(ErrorCode::invalid_argument, fmt::format("batch item {}: empty text", i));
    }
  }
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
    const auto n = std::min(options_.batch_size, texts.size() - start);
    try {
      auto chunk = request(texts.subspan(start, n));
      for (auto& v : chunk) out.push_back(std::move(v));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("batch items {}..{}: {}", start, start + n - 1, e.what()));
    }
  }
  return out;
}

}  // namespace litmine::embedding
