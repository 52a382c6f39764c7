// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pdeforge/error.hpp"

namespace pdeforge {

/// Uniform grid on [0,1]^2 with n interior nodes per axis.
///
/// Unknowns are the n*n interior nodes, indexed row-major as idx(i,j) = i*n + j.
/// Fields are stored over the full (n+2)*(n+2) node set, boundary included;
/// node (I,J) sits at x = I*h, y = J*h. Interior unknown (i,j) is node (i+1,j+1).
class Grid2D {
 public:
  explicit Grid2D(std::size_t n_interior) : n_(n_interior) {
    if (n_ < 1) throw ParameterError("Grid2D: n_interior must be >= 1");
  }

  std::size_t n_interior() const noexcept { return n_; }
  std::size_t nodes_per_axis() const noexcept { return n_ + 2; }
  std::size_t num_unknowns() const noexcept { return n_ * n_; }
  std::size_t num_nodes() const noexcept { return (n_ + 2) * (n_ + 2); }
  double h() const noexcept { return 1.0 / static_cast<double>(n_ + 1); }

  std::size_t unknown_index(std::size_t i, std::size_t j) const noexcept { return i * n_ + j; }
  std::size_t node_index(std::size_t I, std::size_t J) const noexcept {
    return I * (n_ + 2) + J;
  }
  /// Node index of interior unknown (i,j).
  std::size_t node_of_unknown(std::size_t i, std::size_t j) const noexcept {
    return node_index(i + 1, j + 1);
  }
  bool is_boundary_node(std::size_t I, std::size_t J) const noexcept {
    return I == 0 || J == 0 || I == n_ + 1 || J == n_ + 1;
  }
  double coord(std::size_t I) const noexcept { return static_cast<double>(I) * h(); }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t n_;
};

/// sin(pi*m/(n+1)) and cos(pi*m/(n+1)) for m in [0, 2(n+1)), with the
/// zeros of sine exact. Node trig values are looked up via (k*I) mod 2(n+1).
class NodeTrigTable {
 public:
  explicit NodeTrigTable(const Grid2D& grid) : period_(2 * (grid.n_interior() + 1)) {
    const auto half = static_cast<double>(grid.n_interior() + 1);
    sin_.resize(period_);
    cos_.resize(period_);
    for (std::size_t m = 0; m < period_; ++m) {
      const double t = std::numbers::pi * static_cast<double>(m) / half;
      sin_[m] = (m % (period_ / 2) == 0) ? 0.0 : std::sin(t);
      cos_[m] = std::cos(t);
    }
  }
  /// sin(pi * k * x_I)
  double sin_kx(std::size_t k, std::size_t I) const noexcept { return sin_[(k * I) % period_]; }
  /// cos(pi * k * x_I)
  double cos_kx(std::size_t k, std::size_t I) const noexcept { return cos_[(k * I) % period_]; }

 private:
  std::size_t period_;
  std::vector<double> sin_;
  std::vector<double> cos_;
};

/// A scalar function sampled on every node of a grid (boundary included).
class FieldSample {
 public:
  explicit FieldSample(Grid2D grid) : grid_(grid), values_(grid.num_nodes(), 0.0) {}
  FieldSample(Grid2D grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.num_nodes())
      throw DimensionError("FieldSample: expected " + std::to_string(grid_.num_nodes()) +
                           " values, got " + std::to_string(values_.size()));
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double at(std::size_t I, std::size_t J) const noexcept { return values_[grid_.node_index(I, J)]; }
  double& at(std::size_t I, std::size_t J) noexcept { return values_[grid_.node_index(I, J)]; }

  /// The n*n interior values in row-major order.
  std::vector<double> interior() const {
    const std::size_t n = grid_.n_interior();
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = values_[grid_.node_of_unknown(i, j)];
    return out;
  }

  void set_interior(std::span<const double> interior) {
    const std::size_t n = grid_.n_interior();
    if (interior.size() != n * n) throw DimensionError("FieldSample::set_interior: size mismatch");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) values_[grid_.node_of_unknown(i, j)] = interior[i * n + j];
  }

  double min() const noexcept {
    double m = values_.front();
    for (double v : values_) m = v < m ? v : m;
    return m;
  }
  double max() const noexcept {
    double m = values_.front();
    for (double v : values_) m = v > m ? v : m;
    return m;
  }
  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  /// Largest |value| over boundary nodes.
  double boundary_max_abs() const noexcept {
    const std::size_t p = grid_.nodes_per_axis();
    double m = 0.0;
    for (std::size_t I = 0; I < p; ++I)
      for (std::size_t J = 0; J < p; ++J)
        if (grid_.is_boundary_node(I, J)) m = std::max(m, std::abs(at(I, J)));
    return m;
  }

  friend bool operator==(const FieldSample&, const FieldSample&) = default;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

inline FieldSample constant_field(const Grid2D& grid, double value) {
  return FieldSample(grid, std::vector<double>(grid.num_nodes(), value));
}

}  // namespace pdeforge
