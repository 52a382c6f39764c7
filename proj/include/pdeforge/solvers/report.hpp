// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pdeforge/error.hpp"

namespace pdeforge {

struct SolveOptions {
  double tol = 1e-5;  ///< relative to ||b||
  std::size_t max_iter = 1000;
  bool record_trace = false;
  /// Keep the Arnoldi basis in the report (tests only; O(m n) memory).
  bool keep_basis = false;

  void validate() const {
    if (!(tol > 0.0)) throw ParameterError("SolveOptions: tol must be > 0");
    if (max_iter < 1) throw ParameterError("SolveOptions: max_iter must be >= 1");
  }
};

/// One Krylov iteration. For GMRES:
///  - residual_norm: ||beta e1 - H_j y|| read off the rotated right-hand side;
///  - h_subdiag: h_{j+1,j};
///  - y_last_abs: |last entry| of the solution of the square system
///    H_j y = beta e1 (the Galerkin iterate), for which
///    residual_norm <= h_subdiag * y_last_abs is exact;
///  - lsq_y_last_abs: |last entry| of the least-squares y actually used.
/// CG records zeros for the Hessenberg quantities.
struct IterationRecord {
  std::size_t j = 0;
  double residual_norm = 0.0;
  double h_subdiag = 0.0;
  double y_last_abs = 0.0;
  double lsq_y_last_abs = 0.0;
};

struct SolveReport {
  std::vector<double> x;
  std::size_t iterations = 0;
  bool converged = false;
  bool happy_breakdown = false;
  double final_relative_residual = 0.0;
  double b_norm = 0.0;
  std::optional<std::vector<IterationRecord>> trace;
  std::vector<std::vector<double>> basis;  ///< filled only with keep_basis
  double wall_time = 0.0;                  ///< seconds
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) noexcept {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace detail

struct BoundCheckResult {
  std::vector<bool> passed;  ///< per traced iteration
  double max_violation = 0.0;  ///< max(residual - bound), may be negative
  double slack = 0.0;
  bool all_passed() const noexcept {
    for (bool p : passed)
      if (!p) return false;
    return true;
  }
};

/// Checks ||r_j|| <= |h_{j+1,j}| |y_j| + slack at every traced GMRES
/// iteration, slack = 1e-10 (1 + ||b||).
inline BoundCheckResult verify_residual_bound(const SolveReport& report) {
  if (!report.trace) throw PreconditionError("verify_residual_bound: report has no trace");
  BoundCheckResult out;
  out.slack = 1e-10 * (1.0 + report.b_norm);
  out.max_violation = -INFINITY;
  for (const auto& rec : *report.trace) {
    const double bound = rec.h_subdiag * rec.y_last_abs;
    const double violation = rec.residual_norm - bound;
    out.passed.push_back(violation <= out.slack);
    if (violation > out.max_violation) out.max_violation = violation;
  }
  if (out.passed.empty()) out.max_violation = 0.0;
  return out;
}

}  // namespace pdeforge
