// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdeforge/csr.hpp"
#include "pdeforge/error.hpp"

namespace pdeforge {

inline constexpr std::size_t kDefaultOracleCap = 4096;

/// Dense-oracle size cap; PDEFORGE_ORACLE_CAP overrides the default.
inline std::size_t oracle_cap() {
  if (const char* env = std::getenv("PDEFORGE_ORACLE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultOracleCap;
}

/// Solves A x = b by dense LU with partial pivoting. Intended as a test
/// oracle for the iterative solvers, so it is capped at oracle_cap() rows.
inline std::vector<double> dense_solve(const CsrMatrix& A, std::span<const double> b,
                                       std::size_t cap = oracle_cap()) {
  if (!A.square()) throw DimensionError("dense_solve: matrix is not square");
  if (b.size() != A.nrows) throw DimensionError("dense_solve: rhs length mismatch");
  const std::size_t n = A.nrows;
  if (n > cap)
    throw SizeError("dense_solve: n=" + std::to_string(n) + " exceeds oracle cap " + std::to_string(cap));

  std::vector<double> M = A.to_dense();
  std::vector<double> x(b.begin(), b.end());
  double scale = 0.0;
  for (double v : M) scale = std::max(scale, std::abs(v));
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(M[r * n + k]) > std::abs(M[piv * n + k])) piv = r;
    if (!(std::abs(M[piv * n + k]) > tiny))
      throw SingularityError("dense_solve: pivot " + std::to_string(k) + " is zero to working precision");
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(M[k * n + c], M[piv * n + c]);
      std::swap(x[k], x[piv]);
    }
    const double d = M[k * n + k];
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = M[r * n + k] / d;
      if (f == 0.0) continue;
      M[r * n + k] = 0.0;
      for (std::size_t c = k + 1; c < n; ++c) M[r * n + c] -= f * M[k * n + c];
      x[r] -= f * x[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = x[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= M[k * n + c] * x[c];
    x[k] = s / M[k * n + k];
  }
  return x;
}

}  // namespace pdeforge
