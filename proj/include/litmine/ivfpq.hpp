#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_set>
#include <vector>

#include "litmine/matrix.hpp"

namespace litmine::vindex {

struct IndexParams {
  std::size_t dim = 384;
  std::size_t nlist = 1;
  std::size_t b = 8;
  std::size_t ksub = 256;
  std::size_t tau = 8;
  std::uint64_t seed = 0;

  std::size_t dsub() const { return dim / b; }
  /// Throws Error(invalid_argument) on a violated invariant.
  void validate() const;
};

/// round(sqrt(n)) clamped to [1, n].
std::size_t default_nlist(std::size_t n);

struct SearchHit {
  std::int64_t id = 0;
  double distance = 0.0;
  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

struct TrainOptions {
  std::size_t max_iter = 25;
  std::size_t restarts = 1;
};

class CoarseQuantizer {
 public:
  CoarseQuantizer() = default;
  explicit CoarseQuantizer(Matrix centroids);

  static CoarseQuantizer train(const Matrix& vectors, std::size_t nlist, std::uint64_t seed,
                               const TrainOptions& options = {});

  const Matrix& centroids() const { return centroids_; }
  std::size_t size() const { return centroids_.rows(); }
  std::size_t assign(std::span<const float> v) const;
  /// The tau nearest centroids, nearest first, ties by id.
  std::vector<std::size_t> probe(std::span<const float> query, std::size_t tau) const;

 private:
  Matrix centroids_;
};

class ProductQuantizer {
 public:
  ProductQuantizer() = default;
  /// codebooks[j] is ksub x dsub.
  explicit ProductQuantizer(std::vector<Matrix> codebooks);

  /// Independent k-means per subspace. When a subspace has fewer distinct
  /// points than ksub, the trained codewords are repeated to fill the book.
  /// `warm` (same b, smaller ksub) seeds each subspace with its codewords.
  static ProductQuantizer train(const Matrix& residuals, std::size_t b, std::size_t ksub,
                                std::uint64_t seed, const TrainOptions& options = {},
                                const ProductQuantizer* warm = nullptr);

  std::size_t b() const { return codebooks_.size(); }
  std::size_t ksub() const { return codebooks_.empty() ? 0 : codebooks_.front().rows(); }
  std::size_t dsub() const { return codebooks_.empty() ? 0 : codebooks_.front().cols(); }
  const std::vector<Matrix>& codebooks() const { return codebooks_; }

  std::vector<std::uint8_t> encode(std::span<const float> residual) const;
  std::vector<float> decode(std::span<const std::uint8_t> codes) const;
  /// b x ksub table of squared distances from each query subvector to each codeword.
  MatrixD distance_table(std::span<const double> residual) const;
  /// Mean squared reconstruction error over the rows of `residuals`.
  double mse(const Matrix& residuals) const;

 private:
  std::vector<Matrix> codebooks_;
};

struct EncodedVector {
  std::size_t list = 0;
  std::vector<std::uint8_t> codes;
};

/// IVFADC: coarse quantizer over inverted lists, residuals coded by a
/// product quantizer. Train, add, seal, then search.
class IvfPqIndex {
 public:
  struct Entry {
    std::int64_t id = 0;
    std::vector<std::uint8_t> codes;
  };

  IvfPqIndex() = default;
  IvfPqIndex(IndexParams params, CoarseQuantizer coarse, ProductQuantizer pq);

  static IvfPqIndex train(const Matrix& vectors, const IndexParams& params,
                          const TrainOptions& options = {});

  const IndexParams& params() const { return params_; }
  const CoarseQuantizer& coarse() const { return coarse_; }
  const ProductQuantizer& pq() const { return pq_; }
  const std::vector<std::vector<Entry>>& lists() const { return lists_; }
  std::size_t size() const { return count_; }
  bool sealed() const { return sealed_; }

  EncodedVector encode(std::span<const float> v) const;
  void add(std::int64_t id, std::span<const float> v);
  void seal() { sealed_ = true; }

  /// Up to r hits over the tau nearest lists, ascending by estimated
  /// squared distance, ties by id. tau == 0 uses params().tau.
  std::vector<SearchHit> search(std::span<const float> query, std::size_t r,
                                std::size_t tau = 0) const;
  /// Estimated distance of one stored entry (lookup-table path).
  double adc_distance(std::span<const float> query, std::size_t list,
                      std::span<const std::uint8_t> codes) const;

  void save(const std::filesystem::path& path) const;
  static IvfPqIndex load(const std::filesystem::path& path);
  /// Bytes written by save().
  std::size_t file_size() const;

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  void check_dim(std::span<const float> v) const;

  IndexParams params_;
  CoarseQuantizer coarse_;
  ProductQuantizer pq_;
  std::vector<std::vector<Entry>> lists_;
  std::unordered_set<std::int64_t> ids_;
  std::size_t count_ = 0;
  bool sealed_ = false;
};

/// Raw vectors kept beside the index for exact search.
struct VectorStore {
  std::vector<std::int64_t> ids;
  Matrix vectors;

  void add(std::int64_t id, std::span<const float> v);
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);
};

/// Linear-scan r-nearest neighbours by squared Euclidean distance.
std::vector<SearchHit> exact_search(const VectorStore& store, std::span<const float> query,
                                    std::size_t r);

/// Fraction of `truth` ids present in `found`.
double recall(std::span<const SearchHit> found, std::span<const SearchHit> truth);

}  // namespace litmine::vindex
