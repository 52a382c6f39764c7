// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's assembly or solver code.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "pdeforge/grid.hpp"

namespace pdeforge::testing {

/// Row-major dense n2 x n2 matrix.
struct Dense {
  std::size_t n = 0;
  std::vector<double> v;
  explicit Dense(std::size_t size) : n(size), v(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

/// Node-value accessor on the (n+2)^2 set, written out longhand.
inline double node(const std::vector<double>& f, std::size_t n, std::size_t I, std::size_t J) {
  return f[I * (n + 2) + J];
}

/// -div(a grad u) built neighbor by neighbor from coordinates.
inline Dense dense_darcy(std::size_t n, const std::vector<double>& a) {
  Dense A(n * n);
  const double h = 1.0 / static_cast<double>(n + 1);
  const int dI[4] = {1, -1, 0, 0};
  const int dJ[4] = {0, 0, 1, -1};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t I = i + 1, J = j + 1, row = i * n + j;
      for (int f = 0; f < 4; ++f) {
        const std::size_t NI = I + dI[f], NJ = J + dJ[f];
        const double af = (node(a, n, I, J) + node(a, n, NI, NJ)) / 2.0;
        A(row, row) += af / (h * h);
        const bool interior = NI >= 1 && NI <= n && NJ >= 1 && NJ <= n;
        if (interior) A(row, (NI - 1) * n + (NJ - 1)) -= af / (h * h);
      }
    }
  return A;
}

inline Dense dense_helmholtz(std::size_t n, const std::vector<double>& k2) {
  Dense A(n * n);
  const double h = 1.0 / static_cast<double>(n + 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = i * n + j;
      A(row, row) = -4.0 / (h * h) + node(k2, n, i + 1, j + 1);
      if (i > 0) A(row, row - n) = 1.0 / (h * h);
      if (i + 1 < n) A(row, row + n) = 1.0 / (h * h);
      if (j > 0) A(row, row - 1) = 1.0 / (h * h);
      if (j + 1 < n) A(row, row + 1) = 1.0 / (h * h);
    }
  return A;
}

inline Dense dense_diffusion_reaction(std::size_t n, const std::vector<double>& k, const std::vector<double>& q) {
  Dense A = dense_darcy(n, k);
  for (double& x : A.v) x = -x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(i * n + j, i * n + j) += node(q, n, i + 1, j + 1);
  return A;
}

inline std::vector<double> dense_mul(const Dense& A, const std::vector<double>& x) {
  std::vector<double> y(A.n, 0.0);
  for (std::size_t i = 0; i < A.n; ++i) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < A.n; ++j) s += static_cast<long double>(A(i, j)) * x[j];
    y[i] = static_cast<double>(s);
  }
  return y;
}

inline double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  const double den = norm(b);
  return std::sqrt(num) / (den > 0.0 ? den : 1.0);
}

inline std::vector<double> random_vector(std::mt19937_64& g, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (double& v : x) v = u(g);
  return x;
}

inline FieldSample random_field(std::mt19937_64& g, const Grid2D& grid, double lo, double hi) {
  return FieldSample(grid, random_vector(g, grid.num_nodes(), lo, hi));
}

inline std::vector<double> vec(const FieldSample& f) { return {f.values().begin(), f.values().end()}; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pdeforge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pdeforge::testing
