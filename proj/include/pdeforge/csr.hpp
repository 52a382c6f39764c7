// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pdeforge/error.hpp"

namespace pdeforge {

/// Compressed-sparse-row matrix of doubles.
///
/// Invariants: row_ptr has nrows+1 nondecreasing entries starting at 0 and
/// ending at nnz; column indices strictly increase within a row.
struct CsrMatrix {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }
  bool square() const noexcept { return nrows == ncols; }

  /// Stored value at (i,j), or 0 when (i,j) is outside the pattern.
  double at(std::size_t i, std::size_t j) const {
    const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
  }

  /// Throws DimensionError if the structural invariants do not hold.
  void validate() const {
    if (row_ptr.size() != nrows + 1 || row_ptr.front() != 0 || row_ptr.back() != values.size() ||
        col_idx.size() != values.size())
      throw DimensionError("CsrMatrix: inconsistent row_ptr/col_idx/values sizes");
    for (std::size_t i = 0; i < nrows; ++i) {
      if (row_ptr[i] > row_ptr[i + 1]) throw DimensionError("CsrMatrix: row_ptr decreasing");
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        if (col_idx[p] >= ncols) throw DimensionError("CsrMatrix: column index out of range");
        if (p > row_ptr[i] && col_idx[p] <= col_idx[p - 1])
          throw DimensionError("CsrMatrix: column indices not strictly increasing");
      }
    }
  }

  /// Frobenius norm.
  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }

  /// Dense row-major copy (nrows * ncols).
  std::vector<double> to_dense() const {
    std::vector<double> d(nrows * ncols, 0.0);
    for (std::size_t i = 0; i < nrows; ++i)
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d[i * ncols + col_idx[p]] = values[p];
    return d;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

/// Appends rows in order; columns within a row must be pushed ascending.
class CsrBuilder {
 public:
  CsrBuilder(std::size_t nrows, std::size_t ncols, std::size_t nnz_hint = 0) {
    m_.nrows = nrows;
    m_.ncols = ncols;
    m_.row_ptr.reserve(nrows + 1);
    m_.col_idx.reserve(nnz_hint);
    m_.values.reserve(nnz_hint);
  }

  void push(std::size_t col, double value) {
    m_.col_idx.push_back(col);
    m_.values.push_back(value);
  }
  void end_row() { m_.row_ptr.push_back(m_.values.size()); }

  CsrMatrix finish() && {
    if (m_.row_ptr.size() != m_.nrows + 1) throw DimensionError("CsrBuilder: wrong number of rows");
    return std::move(m_);
  }

 private:
  CsrMatrix m_;
};

inline CsrMatrix csr_identity(std::size_t n, double diag = 1.0) {
  CsrBuilder b(n, n, n);
  for (std::size_t i = 0; i < n; ++i) {
    b.push(i, diag);
    b.end_row();
  }
  return std::move(b).finish();
}

/// b = A x. Row-sequential, column-ascending summation, so the result is
/// bit-reproducible for a given build.
inline void apply_operator(const CsrMatrix& A, std::span<const double> x, std::span<double> b) {
  if (x.size() != A.ncols || b.size() != A.nrows)
    throw DimensionError("apply_operator: dimension mismatch (A is " + std::to_string(A.nrows) + "x" +
                         std::to_string(A.ncols) + ", x has " + std::to_string(x.size()) + ")");
  const std::size_t* rp = A.row_ptr.data();
  const std::size_t* ci = A.col_idx.data();
  const double* av = A.values.data();
  for (std::size_t i = 0; i < A.nrows; ++i) {
    double s = 0.0;
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) s += av[p] * x[ci[p]];
    b[i] = s;
  }
}

inline std::vector<double> apply_operator(const CsrMatrix& A, std::span<const double> x) {
  std::vector<double> b(A.nrows);
  apply_operator(A, x, b);
  return b;
}

/// Entrywise structural and value equality with the transpose.
inline bool is_symmetric(const CsrMatrix& A) {
  if (!A.square()) return false;
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
      const std::size_t j = A.col_idx[p];
      const auto first = A.col_idx.begin() + static_cast<std::ptrdiff_t>(A.row_ptr[j]);
      const auto last = A.col_idx.begin() + static_cast<std::ptrdiff_t>(A.row_ptr[j + 1]);
      const auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i) return false;
      if (A.values[static_cast<std::size_t>(it - A.col_idx.begin())] != A.values[p]) return false;
    }
  return true;
}

/// Matrix Market coordinate dump (1-based indices, 17 significant digits).
inline void write_matrix_market(std::ostream& os, const CsrMatrix& A) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.nrows << ' ' << A.ncols << ' ' << A.nnz() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
      os << (i + 1) << ' ' << (A.col_idx[p] + 1) << ' ' << A.values[p] << '\n';
}

}  // namespace pdeforge
