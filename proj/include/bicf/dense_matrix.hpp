#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "bicf/parallel.hpp"

namespace bicf {

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transposed() const {
    DenseMatrix t(cols_, rows_);
    constexpr std::size_t tile = 64;
    for (std::size_t i0 = 0; i0 < rows_; i0 += tile)
      for (std::size_t j0 = 0; j0 < cols_; j0 += tile)
        for (std::size_t i = i0; i < std::min(i0 + tile, rows_); ++i)
          for (std::size_t j = j0; j < std::min(j0 + tile, cols_); ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline constexpr std::size_t kRowBlock = 32;
inline constexpr std::size_t kDepthBlock = 128;
inline constexpr std::size_t kColBlock = 512;

// C[i0:i1, :] = A[i0:i1, :] * B, accumulating over k in ascending order
// for every entry.
inline void multiply_rows(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c, std::size_t i0,
                          std::size_t i1) {
  const std::size_t depth = a.cols();
  const std::size_t cols = b.cols();
  for (std::size_t j0 = 0; j0 < cols; j0 += kColBlock) {
    const std::size_t j1 = std::min(j0 + kColBlock, cols);
    for (std::size_t k0 = 0; k0 < depth; k0 += kDepthBlock) {
      const std::size_t k1 = std::min(k0 + kDepthBlock, depth);
      std::size_t i = i0;
      for (; i + 4 <= i1; i += 4) {
        double* c0 = c.row(i).data();
        double* c1 = c.row(i + 1).data();
        double* c2 = c.row(i + 2).data();
        double* c3 = c.row(i + 3).data();
        for (std::size_t k = k0; k < k1; ++k) {
          const double a0 = a(i, k), a1 = a(i + 1, k), a2 = a(i + 2, k), a3 = a(i + 3, k);
          if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
          const double* bk = b.row(k).data();
          for (std::size_t j = j0; j < j1; ++j) {
            const double bkj = bk[j];
            c0[j] += a0 * bkj;
            c1[j] += a1 * bkj;
            c2[j] += a2 * bkj;
            c3[j] += a3 * bkj;
          }
        }
      }
      for (; i < i1; ++i) {
        double* ci = c.row(i).data();
        for (std::size_t k = k0; k < k1; ++k) {
          const double aik = a(i, k);
          if (aik == 0.0) continue;
          const double* bk = b.row(k).data();
          for (std::size_t j = j0; j < j1; ++j) ci[j] += aik * bk[j];
        }
      }
    }
  }
}

}  // namespace detail

/// Cache-blocked C = A * B, parallel over row blocks. Each entry is summed
/// over k in ascending order, so the result does not depend on `threads`.
/// Zero terms are skipped; adding +0.0 never changes a partial sum, so the
/// skip is exact.
inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b, unsigned threads = 0) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t blocks = (a.rows() + detail::kRowBlock - 1) / detail::kRowBlock;
  parallel_for(blocks, threads, [&](std::size_t blk, unsigned) {
    const std::size_t i0 = blk * detail::kRowBlock;
    detail::multiply_rows(a, b, c, i0, std::min(i0 + detail::kRowBlock, a.rows()));
  });
  return c;
}

}  // namespace bicf
