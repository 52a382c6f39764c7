// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pdeforge/csr.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/solvers/report.hpp"

namespace pdeforge {

inline constexpr double kReorthThreshold = 0.70710678118654752;

/// Full (non-restarted) GMRES.
///
/// Arnoldi with modified Gram-Schmidt, repeated once when the new vector
/// loses more than 1 - 1/sqrt(2) of its norm; the Hessenberg least-squares problem
/// is updated incrementally with Givens rotations. Stops when the relative
/// residual drops to opts.tol (confirmed against the explicit residual
/// b - A x), on happy breakdown h_{j+1,j} < 1e-14 ||A||_F, or at max_iter.
inline SolveReport gmres(const CsrMatrix& A, std::span<const double> b, std::span<const double> x0,
                         const SolveOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate();
  if (!A.square()) throw DimensionError("gmres: matrix is not square");
  const std::size_t n = A.nrows;
  if (b.size() != n || x0.size() != n) throw DimensionError("gmres: vector length mismatch");

  SolveReport rep;
  rep.x.assign(x0.begin(), x0.end());
  if (opts.record_trace) rep.trace.emplace();
  rep.b_norm = detail::norm2(b);
  const double denom = rep.b_norm > 0.0 ? rep.b_norm : 1.0;
  auto finish = [&]() -> SolveReport {
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(rep);
  };

  std::vector<double> r(n);
  apply_operator(A, rep.x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  const double beta = detail::norm2(r);
  if (!std::isfinite(beta)) throw NumericalBreakdown("gmres: non-finite initial residual");
  rep.final_relative_residual = beta / denom;
  if (rep.final_relative_residual <= opts.tol) {
    rep.converged = true;
    return finish();
  }

  const double breakdown_tol = 1e-14 * A.frobenius_norm();
  const std::size_t m = std::min(opts.max_iter, n);

  std::vector<std::vector<double>> V;
  V.reserve(m + 1);
  V.emplace_back(n);
  for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;

  // R holds the rotated Hessenberg columns (upper triangular part).
  std::vector<std::vector<double>> R;
  R.reserve(m);
  std::vector<double> cs, sn;
  std::vector<double> g{beta};
  std::vector<double> w(n);

  auto form_solution = [&](std::size_t k) {
    std::vector<double> y(k);
    for (std::size_t i = k; i-- > 0;) {
      double s = g[i];
      for (std::size_t c = i + 1; c < k; ++c) s -= R[c][i] * y[c];
      y[i] = s / R[i][i];
    }
    std::vector<double> x(x0.begin(), x0.end());
    for (std::size_t c = 0; c < k; ++c) {
      const double yc = y[c];
      const double* v = V[c].data();
      for (std::size_t i = 0; i < n; ++i) x[i] += yc * v[i];
    }
    return x;
  };

  for (std::size_t j = 0; j < m; ++j) {
    apply_operator(A, V[j], w);
    std::vector<double> col(j + 1, 0.0);
    const double wnorm = detail::norm2(w);
    auto mgs_pass = [&] {
      for (std::size_t i = 0; i <= j; ++i) {
        const double hij = detail::dot(w, V[i]);
        col[i] += hij;
        const double* v = V[i].data();
        for (std::size_t q = 0; q < n; ++q) w[q] -= hij * v[q];
      }
    };
    mgs_pass();
    double hsub = detail::norm2(w);
    // second pass only after heavy cancellation (DGKS criterion)
    if (hsub < kReorthThreshold * wnorm) {
      mgs_pass();
      hsub = detail::norm2(w);
    }
    if (!std::isfinite(hsub)) throw NumericalBreakdown("gmres: non-finite Arnoldi vector");

    for (std::size_t i = 0; i < j; ++i) {
      const double a = col[i], c = col[i + 1];
      col[i] = cs[i] * a + sn[i] * c;
      col[i + 1] = -sn[i] * a + cs[i] * c;
    }
    const double diag = col[j];
    const double rr = std::hypot(diag, hsub);
    if (rr == 0.0) throw NumericalBreakdown("gmres: singular Hessenberg matrix");
    cs.push_back(diag / rr);
    sn.push_back(hsub / rr);
    const double g_pre = g[j];
    const double galerkin_y = diag != 0.0 ? std::abs(g_pre / diag) : std::numeric_limits<double>::infinity();
    col[j] = rr;
    g.push_back(-sn[j] * g_pre);
    g[j] = cs[j] * g_pre;
    R.push_back(std::move(col));

    const double res = std::abs(g[j + 1]);
    if (!std::isfinite(res)) throw NumericalBreakdown("gmres: non-finite residual estimate");
    rep.iterations = j + 1;
    if (rep.trace)
      rep.trace->push_back({j + 1, res, hsub, galerkin_y, std::abs(g[j] / rr)});

    const bool breakdown = hsub <= breakdown_tol;
    if (!breakdown) {
      V.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / hsub;
    }
    const bool last = (j + 1 == m);
    if (res / denom <= opts.tol || breakdown || last) {
      std::vector<double> x = form_solution(j + 1);
      apply_operator(A, x, r);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
      const double true_rel = detail::norm2(r) / denom;
      if (!std::isfinite(true_rel)) throw NumericalBreakdown("gmres: non-finite solution");
      rep.x = std::move(x);
      rep.final_relative_residual = true_rel;
      rep.happy_breakdown = breakdown;
      if (true_rel <= opts.tol) {
        rep.converged = true;
        break;
      }
      if (breakdown || last) break;
      // recurrence and explicit residual disagree; keep iterating
    }
  }
  if (opts.keep_basis) {
    if (V.size() > rep.iterations) V.resize(rep.iterations);
    rep.basis = std::move(V);
  }
  return finish();
}

inline SolveReport gmres(const CsrMatrix& A, std::span<const double> b, const SolveOptions& opts) {
  const std::vector<double> x0(A.nrows, 0.0);
  return gmres(A, b, x0, opts);
}

}  // namespace pdeforge
