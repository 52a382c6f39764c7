// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pdeforge/csr.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/rng.hpp"
#include "pdeforge/solvers/report.hpp"

namespace pdeforge {

namespace detail {

/// Compares up to `samples` stored entries against their transposes.
inline void spot_check_symmetry(const CsrMatrix& A, std::size_t samples = 64) {
  if (A.nnz() == 0) return;
  std::uint64_t state = 0x5eed5eedULL ^ A.nnz();
  for (std::size_t s = 0; s < samples; ++s) {
    state = mix64(state + 0x9e3779b97f4a7c15ULL);
    const std::size_t p = static_cast<std::size_t>(state % A.nnz());
    const auto it = std::upper_bound(A.row_ptr.begin(), A.row_ptr.end(), p);
    const std::size_t i = static_cast<std::size_t>(it - A.row_ptr.begin()) - 1;
    const std::size_t j = A.col_idx[p];
    const double aij = A.values[p];
    const double aji = A.at(j, i);
    if (std::abs(aij - aji) > 1e-12 * std::max(std::abs(aij), std::abs(aji)))
      throw PreconditionError("cg: matrix is not symmetric at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
  }
}

}  // namespace detail

/// Conjugate Gradient for symmetric positive-definite systems.
inline SolveReport cg(const CsrMatrix& A, std::span<const double> b, std::span<const double> x0,
                      const SolveOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate();
  if (!A.square()) throw DimensionError("cg: matrix is not square");
  const std::size_t n = A.nrows;
  if (b.size() != n || x0.size() != n) throw DimensionError("cg: vector length mismatch");
  detail::spot_check_symmetry(A);

  SolveReport rep;
  rep.x.assign(x0.begin(), x0.end());
  if (opts.record_trace) rep.trace.emplace();
  rep.b_norm = detail::norm2(b);
  const double denom = rep.b_norm > 0.0 ? rep.b_norm : 1.0;

  std::vector<double> r(n), p(n), Ap(n);
  auto true_residual = [&] {
    apply_operator(A, rep.x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return detail::norm2(r) / denom;
  };

  rep.final_relative_residual = true_residual();
  p = r;
  double rr = detail::dot(r, r);
  if (rep.final_relative_residual <= opts.tol) rep.converged = true;

  for (std::size_t it = 0; !rep.converged && it < opts.max_iter; ++it) {
    apply_operator(A, p, Ap);
    const double pAp = detail::dot(p, Ap);
    if (!std::isfinite(pAp)) throw NumericalBreakdown("cg: non-finite curvature");
    if (pAp <= 0.0) throw NotSpdError("cg: p^T A p <= 0 at iteration " + std::to_string(it + 1));
    const double alpha = rr / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      rep.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rr_new = detail::dot(r, r);
    const double res = std::sqrt(rr_new);
    rep.iterations = it + 1;
    if (rep.trace) rep.trace->push_back({it + 1, res, 0.0, 0.0, 0.0});
    if (res / denom <= opts.tol) {
      rep.final_relative_residual = true_residual();
      if (rep.final_relative_residual <= opts.tol) {
        rep.converged = true;
        break;
      }
      // drifted: restart the recurrence from the explicit residual
      p = r;
      rr = detail::dot(r, r);
      continue;
    }
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
  if (!rep.converged) rep.final_relative_residual = true_residual();
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline SolveReport cg(const CsrMatrix& A, std::span<const double> b, const SolveOptions& opts) {
  const std::vector<double> x0(A.nrows, 0.0);
  return cg(A, b, x0, opts);
}

}  // namespace pdeforge
