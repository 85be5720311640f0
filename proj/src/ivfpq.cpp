#include "litmine/ivfpq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "litmine/binary_io.hpp"
#include "litmine/error.hpp"
#include "litmine/kmeans.hpp"
#include "litmine/random.hpp"

namespace litmine::vindex {
namespace {

Matrix to_float(const MatrixD& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.data().size(); ++i) out.data()[i] = static_cast<float>(m.data()[i]);
  return out;
}

MatrixD to_double(const Matrix& m) {
  MatrixD out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.data().size(); ++i) out.data()[i] = m.data()[i];
  return out;
}

bool sort_hits(const SearchHit& a, const SearchHit& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

void keep_best(std::vector<SearchHit>& hits, std::size_t r) {
  if (hits.size() > r) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(r), hits.end(),
                      sort_hits);
    hits.resize(r);
  } else {
    std::sort(hits.begin(), hits.end(), sort_hits);
  }
}

std::uint32_t narrow32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw Error(ErrorCode::invalid_argument, fmt::format("{} too large", what));
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void IndexParams::validate() const {
  if (dim == 0) throw Error(ErrorCode::invalid_argument, "dimension must be > 0");
  if (b == 0 || dim % b != 0) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("b={} must divide the dimension {}", b, dim));
  }
  if (ksub == 0 || ksub > 256) throw Error(ErrorCode::invalid_argument, "ksub must be in [1, 256]");
  if (nlist == 0) throw Error(ErrorCode::invalid_argument, "nlist must be >= 1");
  if (tau == 0 || tau > nlist) {
    throw Error(ErrorCode::invalid_argument, fmt::format("tau={} must be in [1, nlist={}]", tau, nlist));
  }
}

std::size_t default_nlist(std::size_t n) {
  if (n == 0) return 1;
  const auto v = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(v, 1, n);
}

// ---------------------------------------------------------------------------

CoarseQuantizer::CoarseQuantizer(Matrix centroids) : centroids_(std::move(centroids)) {
  for (float x : centroids_.data()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::data_error, "non-finite coarse centroid");
  }
}

CoarseQuantizer CoarseQuantizer::train(const Matrix& vectors, std::size_t nlist,
                                       std::uint64_t seed, const TrainOptions& options) {
  if (nlist == 0) throw Error(ErrorCode::invalid_argument, "nlist must be >= 1");
  if (vectors.rows() < nlist) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("insufficient vectors: {} for nlist={}", vectors.rows(), nlist));
  }
  kmeans::Options opt;
  opt.k = nlist;
  opt.seed = seed;
  opt.max_iter = options.max_iter;
  opt.restarts = options.restarts;
  return CoarseQuantizer(to_float(kmeans::run(vectors, opt).centroids));
}

std::size_t CoarseQuantizer::assign(std::span<const float> v) const {
  return kmeans::nearest(v, centroids_);
}

std::vector<std::size_t> CoarseQuantizer::probe(std::span<const float> query,
                                                std::size_t tau) const {
  std::vector<std::pair<double, std::size_t>> d(centroids_.rows());
  for (std::size_t c = 0; c < centroids_.rows(); ++c) {
    d[c] = {squared_distance(query, centroids_.row(c)), c};
  }
  tau = std::min(tau, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(tau), d.end());
  std::vector<std::size_t> out(tau);
  for (std::size_t i = 0; i < tau; ++i) out[i] = d[i].second;
  return out;
}

// ---------------------------------------------------------------------------

ProductQuantizer::ProductQuantizer(std::vector<Matrix> codebooks) : codebooks_(std::move(codebooks)) {
  for (const auto& cb : codebooks_) {
    if (cb.rows() != ksub() || cb.cols() != dsub()) {
      throw Error(ErrorCode::data_error, "codebooks differ in shape");
    }
  }
  if (ksub() > 256) throw Error(ErrorCode::invalid_argument, "ksub must be <= 256");
}

ProductQuantizer ProductQuantizer::train(const Matrix& residuals, std::size_t b, std::size_t ksub,
                                         std::uint64_t seed, const TrainOptions& options,
                                         const ProductQuantizer* warm) {
  const std::size_t dim = residuals.cols();
  if (b == 0 || dim % b != 0) {
    throw Error(ErrorCode::invalid_argument, fmt::format("b={} must divide the dimension {}", b, dim));
  }
  if (ksub == 0 || ksub > 256) throw Error(ErrorCode::invalid_argument, "ksub must be in [1, 256]");
  if (residuals.rows() == 0) throw Error(ErrorCode::invalid_argument, "no residuals to train on");
  if (warm && (warm->b() != b || warm->dsub() != dim / b || warm->ksub() > ksub)) {
    throw Error(ErrorCode::invalid_argument, "warm start codebooks do not fit");
  }
  const std::size_t dsub = dim / b;
  std::vector<Matrix> books;
  books.reserve(b);
  for (std::size_t j = 0; j < b; ++j) {
    Matrix sub(residuals.rows(), dsub);
    for (std::size_t i = 0; i < residuals.rows(); ++i) {
      const auto src = residuals.row(i).subspan(j * dsub, dsub);
      std::copy(src.begin(), src.end(), sub.row(i).begin());
    }
    const std::size_t k = std::min(ksub, kmeans::count_distinct(sub));

    kmeans::Options opt;
    opt.k = k;
    opt.seed = derive_seed(seed, static_cast<std::uint64_t>(j));
    opt.max_iter = options.max_iter;
    opt.restarts = options.restarts;
    if (warm && warm->ksub() <= k) {
      MatrixD init = to_double(warm->codebooks()[j]);
      std::vector<std::size_t> order(sub.rows());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Engine eng(opt.seed);
      shuffle(order.begin(), order.end(), eng);
      for (std::size_t idx : order) {
        if (init.rows() == k) break;
        bool dup = false;
        for (std::size_t c = 0; c < init.rows() && !dup; ++c) {
          dup = squared_distance(sub.row(idx), std::as_const(init).row(c)) == 0.0;
        }
        if (!dup) {
          std::vector<double> row(sub.row(idx).begin(), sub.row(idx).end());
          init.append_row(row);
        }
      }
      opt.initial_centroids = std::move(init);
    }
    Matrix trained = to_float(kmeans::run(sub, opt).centroids);
    Matrix book(ksub, dsub);
    for (std::size_t c = 0; c < ksub; ++c) {
      const auto src = trained.row(c % trained.rows());
      std::copy(src.begin(), src.end(), book.row(c).begin());
    }
    books.push_back(std::move(book));
  }
  return ProductQuantizer(std::move(books));
}

std::vector<std::uint8_t> ProductQuantizer::encode(std::span<const float> residual) const {
  const std::size_t ds = dsub();
  if (residual.size() != b() * ds) {
    throw Error(ErrorCode::invalid_argument, "residual dimension mismatch");
  }
  std::vector<std::uint8_t> codes(b());
  for (std::size_t j = 0; j < b(); ++j) {
    codes[j] = static_cast<std::uint8_t>(kmeans::nearest(residual.subspan(j * ds, ds), codebooks_[j]));
  }
  return codes;
}

std::vector<float> ProductQuantizer::decode(std::span<const std::uint8_t> codes) const {
  if (codes.size() != b()) throw Error(ErrorCode::invalid_argument, "code length mismatch");
  std::vector<float> out;
  out.reserve(b() * dsub());
  for (std::size_t j = 0; j < b(); ++j) {
    if (codes[j] >= ksub()) throw Error(ErrorCode::data_error, "code out of range");
    const auto row = codebooks_[j].row(codes[j]);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

MatrixD ProductQuantizer::distance_table(std::span<const double> residual) const {
  const std::size_t ds = dsub();
  if (residual.size() != b() * ds) {
    throw Error(ErrorCode::invalid_argument, "residual dimension mismatch");
  }
  MatrixD table(b(), ksub());
  for (std::size_t j = 0; j < b(); ++j) {
    const auto q = residual.subspan(j * ds, ds);
    for (std::size_t c = 0; c < ksub(); ++c) table(j, c) = squared_distance(q, codebooks_[j].row(c));
  }
  return table;
}

double ProductQuantizer::mse(const Matrix& residuals) const {
  if (residuals.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < residuals.rows(); ++i) {
    const auto rec = decode(encode(residuals.row(i)));
    total += squared_distance(residuals.row(i), std::span<const float>(rec));
  }
  return total / static_cast<double>(residuals.rows());
}

// ---------------------------------------------------------------------------

IvfPqIndex::IvfPqIndex(IndexParams params, CoarseQuantizer coarse, ProductQuantizer pq)
    : params_(params), coarse_(std::move(coarse)), pq_(std::move(pq)) {
  params_.validate();
  if (coarse_.size() != params_.nlist || coarse_.centroids().cols() != params_.dim) {
    throw Error(ErrorCode::invalid_argument, "coarse quantizer does not match the parameters");
  }
  if (pq_.b() != params_.b || pq_.ksub() != params_.ksub || pq_.dsub() != params_.dsub()) {
    throw Error(ErrorCode::invalid_argument, "product quantizer does not match the parameters");
  }
  lists_.resize(params_.nlist);
}

IvfPqIndex IvfPqIndex::train(const Matrix& vectors, const IndexParams& params,
                             const TrainOptions& options) {
  params.validate();
  if (vectors.cols() != params.dim) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("vectors have dimension {}, index expects {}", vectors.cols(), params.dim));
  }
  auto coarse = CoarseQuantizer::train(vectors, params.nlist, derive_seed(params.seed, "coarse"), options);
  Matrix residuals(vectors.rows(), params.dim);
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    const auto v = vectors.row(i);
    const auto c = coarse.centroids().row(coarse.assign(v));
    auto dst = residuals.row(i);
    for (std::size_t t = 0; t < params.dim; ++t) {
      dst[t] = static_cast<float>(static_cast<double>(v[t]) - static_cast<double>(c[t]));
    }
  }
  auto pq = ProductQuantizer::train(residuals, params.b, params.ksub, derive_seed(params.seed, "pq"),
                                    options);
  return IvfPqIndex(params, std::move(coarse), std::move(pq));
}

void IvfPqIndex::check_dim(std::span<const float> v) const {
  if (v.size() != params_.dim) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("dimension mismatch: {} vs index {}", v.size(), params_.dim));
  }
}

EncodedVector IvfPqIndex::encode(std::span<const float> v) const {
  check_dim(v);
  EncodedVector out;
  out.list = coarse_.assign(v);
  const auto c = coarse_.centroids().row(out.list);
  std::vector<float> residual(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) {
    residual[t] = static_cast<float>(static_cast<double>(v[t]) - static_cast<double>(c[t]));
  }
  out.codes = pq_.encode(residual);
  return out;
}

void IvfPqIndex::add(std::int64_t id, std::span<const float> v) {
  if (sealed_) throw Error(ErrorCode::precondition, "index is sealed");
  if (ids_.count(id)) throw Error(ErrorCode::invalid_argument, fmt::format("duplicate id {}", id));
  auto enc = encode(v);
  lists_[enc.list].push_back({id, std::move(enc.codes)});
  ids_.insert(id);
  ++count_;
}

double IvfPqIndex::adc_distance(std::span<const float> query, std::size_t list,
                                std::span<const std::uint8_t> codes) const {
  check_dim(query);
  if (list >= params_.nlist) throw Error(ErrorCode::invalid_argument, "list out of range");
  const auto c = coarse_.centroids().row(list);
  std::vector<double> residual(query.size());
  for (std::size_t t = 0; t < query.size(); ++t) residual[t] = static_cast<double>(query[t]) - c[t];
  const auto table = pq_.distance_table(residual);
  double d = 0.0;
  for (std::size_t j = 0; j < codes.size(); ++j) d += table(j, codes[j]);
  return d;
}

std::vector<SearchHit> IvfPqIndex::search(std::span<const float> query, std::size_t r,
                                          std::size_t tau) const {
  if (!sealed_) throw Error(ErrorCode::precondition, "index is not sealed");
  check_dim(query);
  if (r == 0) throw Error(ErrorCode::invalid_argument, "r must be >= 1");
  if (tau == 0) tau = params_.tau;
  if (tau > params_.nlist) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("tau={} must be in [1, nlist={}]", tau, params_.nlist));
  }
  std::vector<SearchHit> hits;
  std::vector<double> residual(query.size());
  for (std::size_t list : coarse_.probe(query, tau)) {
    if (lists_[list].empty()) continue;
    const auto c = coarse_.centroids().row(list);
    for (std::size_t t = 0; t < query.size(); ++t) residual[t] = static_cast<double>(query[t]) - c[t];
    const auto table = pq_.distance_table(residual);
    for (const auto& e : lists_[list]) {
      double d = 0.0;
      for (std::size_t j = 0; j < e.codes.size(); ++j) d += table(j, e.codes[j]);
      hits.push_back({e.id, d});
    }
  }
  keep_best(hits, r);
  return hits;
}

std::size_t IvfPqIndex::file_size() const {
  return 44 + params_.nlist * params_.dim * 4 + params_.b * params_.ksub * params_.dsub() * 4 +
         params_.nlist * 8 + count_ * (8 + params_.b);
}

void IvfPqIndex::save(const std::filesystem::path& path) const {
  if (!sealed_) throw Error(ErrorCode::precondition, "only a sealed index can be saved");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  io::write_bytes(out, "LMIX");
  io::write_u32(out, kFormatVersion);
  io::write_u32(out, narrow32(params_.dim, "dim"));
  io::write_u32(out, narrow32(params_.nlist, "nlist"));
  io::write_u32(out, narrow32(params_.b, "b"));
  io::write_u32(out, narrow32(params_.ksub, "ksub"));
  io::write_u32(out, narrow32(params_.tau, "tau"));
  io::write_u64(out, params_.seed);
  io::write_u64(out, count_);
  io::write_f32s(out, coarse_.centroids().data());
  for (const auto& book : pq_.codebooks()) io::write_f32s(out, book.data());
  for (const auto& list : lists_) io::write_u64(out, list.size());
  for (const auto& list : lists_) {
    for (const auto& e : list) {
      io::write_i64(out, e.id);
      io::write_bytes(out, std::string_view(reinterpret_cast<const char*>(e.codes.data()), e.codes.size()));
    }
  }
  if (!out) throw Error(ErrorCode::data_error, fmt::format("write failed: {}", path.string()));
}

IvfPqIndex IvfPqIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, fmt::format("cannot open index {}", path.string()));
  try {
    if (io::read_bytes(in, 4, "magic") != "LMIX") throw Error(ErrorCode::data_error, "bad magic");
    const auto version = io::read_u32(in, "version");
    if (version != kFormatVersion) {
      throw Error(ErrorCode::data_error, fmt::format("unsupported version {}", version));
    }
    IndexParams p;
    p.dim = io::read_u32(in, "dim");
    p.nlist = io::read_u32(in, "nlist");
    p.b = io::read_u32(in, "b");
    p.ksub = io::read_u32(in, "ksub");
    p.tau = io::read_u32(in, "tau");
    p.seed = io::read_u64(in, "seed");
    const auto count = io::read_u64(in, "entry count");
    p.validate();

    Matrix centroids(p.nlist, p.dim);
    io::read_f32s(in, centroids.data(), "coarse centroids");
    std::vector<Matrix> books;
    for (std::size_t j = 0; j < p.b; ++j) {
      Matrix book(p.ksub, p.dsub());
      io::read_f32s(in, book.data(), "codebook");
      books.push_back(std::move(book));
    }
    IvfPqIndex index(p, CoarseQuantizer(std::move(centroids)), ProductQuantizer(std::move(books)));
    std::vector<std::uint64_t> sizes(p.nlist);
    std::uint64_t total = 0;
    for (auto& s : sizes) {
      s = io::read_u64(in, "list length");
      total += s;
    }
    if (total != count) {
      throw Error(ErrorCode::data_error,
                  fmt::format("list lengths sum to {} but header says {}", total, count));
    }
    for (std::size_t l = 0; l < p.nlist; ++l) {
      auto& list = index.lists_[l];
      list.reserve(sizes[l]);
      for (std::uint64_t e = 0; e < sizes[l]; ++e) {
        Entry entry;
        entry.id = io::read_i64(in, "entry id");
        const auto bytes = io::read_bytes(in, p.b, "entry codes");
        entry.codes.assign(bytes.begin(), bytes.end());
        for (auto c : entry.codes) {
          if (c >= p.ksub) throw Error(ErrorCode::data_error, "code out of range");
        }
        if (!index.ids_.insert(entry.id).second) {
          throw Error(ErrorCode::data_error, fmt::format("duplicate id {}", entry.id));
        }
        list.push_back(std::move(entry));
      }
    }
    index.count_ = count;
    index.sealed_ = true;
    return index;
  } catch (const Error& e) {
    throw Error(ErrorCode::data_error, fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------

void VectorStore::add(std::int64_t id, std::span<const float> v) {
  ids.push_back(id);
  vectors.append_row(v);
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, fmt::format("cannot write {}", path.string()));
  io::write_bytes(out, "LMRV");
  io::write_u32(out, 1);
  io::write_u32(out, narrow32(vectors.cols(), "dim"));
  io::write_u64(out, ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    io::write_i64(out, ids[i]);
    io::write_f32s(out, vectors.row(i));
  }
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, fmt::format("cannot open vector store {}", path.string()));
  try {
    if (io::read_bytes(in, 4, "magic") != "LMRV") throw Error(ErrorCode::data_error, "bad magic");
    const auto version = io::read_u32(in, "version");
    if (version != 1) throw Error(ErrorCode::data_error, fmt::format("unsupported version {}", version));
    const auto dim = io::read_u32(in, "dim");
    const auto count = io::read_u64(in, "count");
    VectorStore store;
    store.vectors = Matrix(0, dim);
    std::vector<float> row(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto id = io::read_i64(in, "id");
      io::read_f32s(in, row, "vector");
      store.add(id, row);
    }
    return store;
  } catch (const Error& e) {
    throw Error(ErrorCode::data_error, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<SearchHit> exact_search(const VectorStore& store, std::span<const float> query,
                                    std::size_t r) {
  if (r == 0) throw Error(ErrorCode::invalid_argument, "r must be >= 1");
  if (!store.ids.empty() && query.size() != store.vectors.cols()) {
    throw Error(ErrorCode::invalid_argument, "dimension mismatch");
  }
  std::vector<SearchHit> hits(store.ids.size());
  for (std::size_t i = 0; i < store.ids.size(); ++i) {
    hits[i] = {store.ids[i], squared_distance(query, store.vectors.row(i))};
  }
  keep_best(hits, r);
  return hits;
}

double recall(std::span<const SearchHit> found, std::span<const SearchHit> truth) {
  if (truth.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& t : truth) {
    hit += std::any_of(found.begin(), found.end(), [&](const SearchHit& f) { return f.id == t.id; });
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace litmine::vindex
