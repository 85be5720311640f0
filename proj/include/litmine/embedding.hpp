#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace litmine::embedding {

using Vector = std::vector<float>;

double dot(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> v);

/// Throws Error(invalid_argument, "zero norm") for the zero vector.
Vector l2_normalize(std::span<const float> v);

/// Throws on dimension mismatch or a zero vector. Result clamped to [-1, 1].
double cosine_similarity(std::span<const float> a, std::span<const float> b);

enum class ProviderMode { precomputed, deterministic_test, remote };

/// Text -> fixed-dimension unit vector. Implementations are immutable after
/// construction and may be shared across threads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string provider_id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual ProviderMode mode() const = 0;

  virtual Vector embed(std::string_view text) const = 0;

  /// Element-wise embed, order preserved. The first failure is rethrown
  /// with its batch index in the message.
  virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const;
};

/// Seeded hash of the text expanded into Gaussian components, normalized.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dimension = 384, std::uint64_t seed = 0);

  std::string provider_id() const override;
  std::size_t dimension() const override { return dimension_; }
  ProviderMode mode() const override { return ProviderMode::deterministic_test; }
  Vector embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Lookup table loaded from an "LMEB" store file.
///
/// Layout (little-endian): "LMEB", u32 version, u32 dimension, u64 count,
/// then per entry u32 key length, key bytes, dimension x f32.
class PrecomputedEmbeddingProvider final : public EmbeddingProvider {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  PrecomputedEmbeddingProvider(std::size_t dimension,
                               std::unordered_map<std::string, Vector> table,
                               std::string id = "precomputed");

  static PrecomputedEmbeddingProvider load(const std::filesystem::path& path);

  std::string provider_id() const override { return id_; }
  std::size_t dimension() const override { return dimension_; }
  ProviderMode mode() const override { return ProviderMode::precomputed; }

  /// Throws Error(not_found, "unknown text: ...") for keys not in the store.
  Vector embed(std::string_view text) const override;

  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, Vector> table_;
  std::string id_;
};

/// Writes an LMEB store; entries are emitted in key order.
void write_embedding_store(const std::filesystem::path& path, std::size_t dimension,
                           const std::map<std::string, Vector>& entries);

/// Client for `POST <path> {"texts":[...]}` -> `{"vectors":[[...], ...]}`.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  struct Options {
    std::string base_url = "http://127.0.0.1:8000";  // scheme://host:port
    std::string path = "/embed";
    std::string model = "all-MiniLM-L6-v2";  // informational; the server picks the model
    std::size_t dimension = 384;
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
    int timeout_seconds = 30;
  };

  explicit RemoteEmbeddingProvider(Options options);
  ~RemoteEmbeddingProvider() override;

  std::string provider_id() const override;
  std::size_t dimension() const override { return options_.dimension; }
  ProviderMode mode() const override { return ProviderMode::remote; }

  /// Connection failures raise Error(unavailable), which callers may retry.
  Vector embed(std::string_view text) const override;
  std::vector<Vector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<Vector> request(std::span<const std::string> texts) const;

  Options options_;
  mutable std::counting_semaphore<> in_flight_;
};

}  // namespace litmine::embedding
