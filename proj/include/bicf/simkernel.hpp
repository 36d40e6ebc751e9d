#pragma once

// Random-walk user similarity on a bipartite network.
//
// Entry (i, j) of every matrix here is the share of the unit resource held
// by user j that ends up at user i: one unit leaves j, is split evenly over
// j's objects, and each object splits what it received evenly over its
// users. Columns of non-isolated users therefore sum to one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "bicf/dense_matrix.hpp"
#include "bicf/error.hpp"
#include "bicf/ingest.hpp"
#include "bicf/parallel.hpp"

namespace bicf {

enum class SimilarityKind : std::uint8_t { first_order = 0, second_order = 1, max_symmetrized = 2 };

inline const char* to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::first_order: return "first_order";
    case SimilarityKind::second_order: return "second_order";
    case SimilarityKind::max_symmetrized: return "max_symmetrized";
  }
  return "?";
}

class SimilarityMatrix {
public:
  SimilarityMatrix() = default;
  SimilarityMatrix(SimilarityKind kind, double lambda, DenseMatrix values)
      : kind_(kind), lambda_(lambda), values_(std::move(values)) {
    if (values_.rows() != values_.cols()) throw std::invalid_argument("similarity matrix must be square");
  }

  std::size_t users() const noexcept { return values_.rows(); }
  SimilarityKind kind() const noexcept { return kind_; }
  /// Second-order weight; 0 for first-order matrices.
  double lambda() const noexcept { return lambda_; }

  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  const DenseMatrix& values() const noexcept { return values_; }

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

private:
  SimilarityKind kind_ = SimilarityKind::first_order;
  double lambda_ = 0.0;
  DenseMatrix values_;
};

/// s_ij = (1/k_j) sum_l a_li a_lj / k_l. Rows and columns of isolated users
/// stay zero.
inline SimilarityMatrix first_order(const BipartiteGraph& g, unsigned threads = 0) {
  if (g.links() == 0) throw GraphError("first_order: graph has no links");
  const std::size_t n = g.users();
  DenseMatrix s(n, n);
  std::vector<double> inv_object(g.objects());
  for (Index l = 0; l < g.objects(); ++l)
    inv_object[l] = g.object_degree(l) ? 1.0 / g.object_degree(l) : 0.0;

  parallel_for(n, threads, [&](std::size_t i, unsigned) {
    auto row = s.row(i);
    for (Index l : g.objects_of(static_cast<Index>(i)))
      for (Index j : g.users_of(l)) row[j] += inv_object[l];
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] != 0.0) row[j] /= g.user_degree(static_cast<Index>(j));
  });
  return SimilarityMatrix(SimilarityKind::first_order, 0.0, std::move(s));
}

/// S * S over all intermediate users, including i and j themselves.
inline DenseMatrix square(const SimilarityMatrix& s, unsigned threads = 0) {
  return multiply(s.values(), s.values(), threads);
}

/// The single expression every second-order weight goes through, so the
/// matrix route and the panel route in the harness agree bit for bit.
inline double second_order_entry(double s, double s2, double lambda) { return s + lambda * s2; }

inline void check_lambda(double lambda) {
  if (!(lambda >= -1.0 && lambda <= 0.0))
    warn("lambda " + std::to_string(lambda) + " is outside [-1, 0]");
}

/// H = S + lambda S^2 from a precomputed square.
inline SimilarityMatrix second_order(const SimilarityMatrix& s, const DenseMatrix& s_squared, double lambda) {
  if (s.kind() != SimilarityKind::first_order)
    throw std::invalid_argument("second_order expects a first-order matrix");
  if (s_squared.rows() != s.users() || s_squared.cols() != s.users())
    throw std::invalid_argument("second_order: S^2 shape mismatch");
  check_lambda(lambda);
  DenseMatrix h(s.users(), s.users());
  const auto sv = s.values().data();
  const auto s2 = s_squared.data();
  auto out = h.data();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = second_order_entry(sv[k], s2[k], lambda);
  return SimilarityMatrix(SimilarityKind::second_order, lambda, std::move(h));
}

inline SimilarityMatrix second_order(const SimilarityMatrix& s, double lambda, unsigned threads = 0) {
  return second_order(s, square(s, threads), lambda);
}

/// h^max_ij = max(h_ij, h_ji).
inline SimilarityMatrix max_symmetrize(const SimilarityMatrix& h) {
  const std::size_t n = h.users();
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = std::max(h(i, j), h(j, i));
  return SimilarityMatrix(SimilarityKind::max_symmetrized, h.lambda(), std::move(out));
}

// Similarity cache, native-endian binary:
//   "BICFSIM1" | u64 n | u8 kind | f64 lambda | u64 graph hash | n*n f64 row-major
inline void write_similarity(std::ostream& out, const SimilarityMatrix& sim, std::uint64_t graph_hash) {
  const std::uint64_t n = sim.users();
  const auto kind = static_cast<std::uint8_t>(sim.kind());
  const double lambda = sim.lambda();
  out.write("BICFSIM1", 8);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&kind), sizeof kind);
  out.write(reinterpret_cast<const char*>(&lambda), sizeof lambda);
  out.write(reinterpret_cast<const char*>(&graph_hash), sizeof graph_hash);
  const auto data = sim.values().data();
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (!out) throw std::runtime_error("failed writing similarity cache");
}

/// Loads a cached matrix and checks it was built from `train`.
inline SimilarityMatrix read_similarity(std::istream& in, const BipartiteGraph& train) {
  char magic[8];
  std::uint64_t n = 0, hash = 0;
  std::uint8_t kind = 0;
  double lambda = 0.0;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "BICFSIM1", 8) != 0) throw FormatError("not a BICFSIM1 file");
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&kind), sizeof kind);
  in.read(reinterpret_cast<char*>(&lambda), sizeof lambda);
  in.read(reinterpret_cast<char*>(&hash), sizeof hash);
  if (!in) throw FormatError("truncated similarity header");
  if (kind > 2) throw FormatError("unknown similarity kind");
  if (n != train.users() || hash != train.content_hash())
    throw FormatError("similarity cache was built from a different training graph");
  DenseMatrix values(n, n);
  auto data = values.data();
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (!in) throw FormatError("truncated similarity values");
  return SimilarityMatrix(static_cast<SimilarityKind>(kind), lambda, std::move(values));
}

}  // namespace bicf
