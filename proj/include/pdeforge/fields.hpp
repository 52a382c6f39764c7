// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdeforge/error.hpp"
#include "pdeforge/grid.hpp"
#include "pdeforge/rng.hpp"

namespace pdeforge {

enum class FieldTransform { None, Exp };

/// Gaussian random field parameters: spectral decay (tau, alpha) followed by
/// the pointwise map  v -> transform(scale * v + offset).
struct GrfParams {
  double tau = 3.0;
  double alpha = 2.0;
  double scale = 1.0;
  double offset = 0.0;
  FieldTransform transform = FieldTransform::None;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("GrfParams: tau must be > 0");
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ParameterError("GrfParams: alpha must be > 1");
    if (!std::isfinite(scale) || !std::isfinite(offset)) throw ParameterError("GrfParams: non-finite scale/offset");
  }

  friend bool operator==(const GrfParams&, const GrfParams&) = default;
};

/// Spectral amplitude of cosine mode (k1,k2): tau^(alpha-1) (pi^2 |k|^2 + tau^2)^(-alpha/2).
inline double grf_mode_amplitude(double tau, double alpha, std::size_t k1, std::size_t k2) {
  const double k2sum = static_cast<double>(k1 * k1 + k2 * k2);
  return std::pow(tau, alpha - 1.0) *
         std::pow(std::numbers::pi * std::numbers::pi * k2sum + tau * tau, -alpha / 2.0);
}

/// Cosine-series GRF synthesizer for one grid and parameter set.
///
/// g(x,y) = sum_{k1,k2=0}^{K} lambda_k xi_k c_k1 c_k2 cos(pi k1 x) cos(pi k2 y),
/// K = n+1, xi_k iid N(0,1), c_0 = 1, c_k = sqrt(2). Evaluated on the node
/// set as C * (amp o xi) * C with C[I][k] = cos(pi k x_I), so one draw costs
/// O(P^3) for P = n+2 nodes per axis.
class GrfSampler {
 public:
  GrfSampler(const Grid2D& grid, const GrfParams& params) : grid_(grid), params_(params) {
    params_.validate();
    const std::size_t p = grid.nodes_per_axis();
    const NodeTrigTable trig(grid);
    cos_.resize(p * p);
    for (std::size_t I = 0; I < p; ++I)
      for (std::size_t k = 0; k < p; ++k) cos_[I * p + k] = trig.cos_kx(k, I);
    amp_.resize(p * p);
    for (std::size_t k1 = 0; k1 < p; ++k1)
      for (std::size_t k2 = 0; k2 < p; ++k2) {
        const double c = (k1 == 0 ? 1.0 : std::numbers::sqrt2) * (k2 == 0 ? 1.0 : std::numbers::sqrt2);
        amp_[k1 * p + k2] = c * grf_mode_amplitude(params_.tau, params_.alpha, k1, k2);
      }
  }

  const Grid2D& grid() const noexcept { return grid_; }
  const GrfParams& params() const noexcept { return params_; }

  /// Raw zero-mean field (before scale/offset/transform).
  template <class Engine>
  FieldSample sample_raw(Engine& rng) const {
    const std::size_t p = grid_.nodes_per_axis();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> m(p * p);
    for (std::size_t i = 0; i < p * p; ++i) m[i] = amp_[i] * normal(rng);

    // t = m * C   (rows k1, columns J)
    std::vector<double> t(p * p, 0.0);
    for (std::size_t k1 = 0; k1 < p; ++k1) {
      double* trow = &t[k1 * p];
      for (std::size_t k2 = 0; k2 < p; ++k2) {
        const double a = m[k1 * p + k2];
        const double* crow = &cos_[k2 * p];  // C is symmetric: C[J][k2] = C[k2][J]
        for (std::size_t J = 0; J < p; ++J) trow[J] += a * crow[J];
      }
    }
    // g = C * t
    std::vector<double> g(p * p, 0.0);
    for (std::size_t I = 0; I < p; ++I) {
      double* grow = &g[I * p];
      for (std::size_t k1 = 0; k1 < p; ++k1) {
        const double c = cos_[I * p + k1];
        const double* trow = &t[k1 * p];
        for (std::size_t J = 0; J < p; ++J) grow[J] += c * trow[J];
      }
    }
    return FieldSample(grid_, std::move(g));
  }

  template <class Engine>
  FieldSample sample(Engine& rng) const {
    FieldSample f = sample_raw(rng);
    for (double& v : f.values()) {
      v = params_.scale * v + params_.offset;
      if (params_.transform == FieldTransform::Exp) v = std::exp(v);
    }
    return f;
  }

 private:
  Grid2D grid_;
  GrfParams params_;
  std::vector<double> cos_;
  std::vector<double> amp_;
};

template <class Engine>
FieldSample sample_grf(const Grid2D& grid, const GrfParams& params, Engine& rng) {
  return GrfSampler(grid, params).sample(rng);
}

/// iid U[lo, hi) at every node.
template <class Engine>
FieldSample sample_uniform(const Grid2D& grid, double lo, double hi, Engine& rng) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ParameterError("sample_uniform: need finite lo < hi");
  std::uniform_real_distribution<double> dist(lo, hi);
  FieldSample f(grid);
  for (double& v : f.values()) {
    v = dist(rng);
    if (v >= hi) v = std::nextafter(hi, lo);
  }
  return f;
}

/// The index-th (1-based) pair of the diagonal enumeration of
/// {first, first+1, ...}^2: diagonals of constant k1+k2 in increasing order,
/// k1 ascending within a diagonal.
inline std::pair<std::size_t, std::size_t> diagonal_pair(std::size_t index, std::size_t first) {
  if (index < 1) throw ParameterError("diagonal_pair: index must be >= 1");
  std::size_t remaining = index - 1;
  for (std::size_t d = 0;; ++d) {
    const std::size_t len = d + 1;
    if (remaining < len) return {first + remaining, first + d - remaining};
    remaining -= len;
  }
}

/// sin(pi k1 x) sin(pi k2 y) for the index-th pair of positive integers.
inline FieldSample fourier_basis_field(const Grid2D& grid, std::size_t index) {
  if (index < 1) throw ParameterError("fourier_basis_field: index must be >= 1");
  const auto [k1, k2] = diagonal_pair(index, 1);
  const NodeTrigTable trig(grid);
  FieldSample f(grid);
  const std::size_t p = grid.nodes_per_axis();
  for (std::size_t I = 0; I < p; ++I)
    for (std::size_t J = 0; J < p; ++J) f.at(I, J) = trig.sin_kx(k1, I) * trig.sin_kx(k2, J);
  return f;
}

/// Chebyshev polynomial T_k(t) by the three-term recurrence.
inline double chebyshev_t(std::size_t k, double t) noexcept {
  if (k == 0) return 1.0;
  double prev = 1.0, cur = t;
  for (std::size_t i = 1; i < k; ++i) {
    const double next = 2.0 * t * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// sin(pi x) sin(pi y), exactly zero on the boundary.
inline FieldSample boundary_decay_mask(const Grid2D& grid) {
  const NodeTrigTable trig(grid);
  FieldSample f(grid);
  const std::size_t p = grid.nodes_per_axis();
  for (std::size_t I = 0; I < p; ++I)
    for (std::size_t J = 0; J < p; ++J) f.at(I, J) = trig.sin_kx(1, I) * trig.sin_kx(1, J);
  return f;
}

/// T_k1(2x-1) T_k2(2y-1) windowed by sin(pi x) sin(pi y), for the index-th
/// pair of nonnegative integers (index 1 is (0,0)).
inline FieldSample chebyshev_basis_field(const Grid2D& grid, std::size_t index) {
  if (index < 1) throw ParameterError("chebyshev_basis_field: index must be >= 1");
  const auto [k1, k2] = diagonal_pair(index, 0);
  FieldSample f = boundary_decay_mask(grid);
  const std::size_t p = grid.nodes_per_axis();
  for (std::size_t I = 0; I < p; ++I)
    for (std::size_t J = 0; J < p; ++J)
      f.at(I, J) *= chebyshev_t(k1, 2.0 * grid.coord(I) - 1.0) * chebyshev_t(k2, 2.0 * grid.coord(J) - 1.0);
  return f;
}

}  // namespace pdeforge
