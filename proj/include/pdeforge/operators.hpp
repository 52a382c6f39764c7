// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pdeforge/csr.hpp"
#include "pdeforge/error.hpp"
#include "pdeforge/grid.hpp"

namespace pdeforge {

enum class PdeKind { Darcy, Helmholtz, DiffusionReaction };

inline std::string_view to_string(PdeKind k) {
  switch (k) {
    case PdeKind::Darcy: return "darcy";
    case PdeKind::Helmholtz: return "helmholtz";
    case PdeKind::DiffusionReaction: return "diffusion";
  }
  return "?";
}

inline PdeKind parse_pde_kind(std::string_view s) {
  if (s == "darcy") return PdeKind::Darcy;
  if (s == "helmholtz") return PdeKind::Helmholtz;
  if (s == "diffusion") return PdeKind::DiffusionReaction;
  throw ParameterError("unknown pde tag '" + std::string(s) + "'");
}

/// Names of the coefficient fields stored for a PDE family, in file order.
inline std::vector<std::string> coefficient_field_names(PdeKind k) {
  switch (k) {
    case PdeKind::Darcy: return {"a"};
    case PdeKind::Helmholtz: return {"k2"};
    case PdeKind::DiffusionReaction: return {"k", "q"};
  }
  return {};
}

/// Human-readable statement of the discretized equation, recorded in manifests.
inline std::string_view sign_convention(PdeKind k) {
  switch (k) {
    case PdeKind::Darcy: return "-div(a grad u) = f";
    case PdeKind::Helmholtz: return "lap(u) + k2 u = f";
    case PdeKind::DiffusionReaction: return "div(k grad u) + q u = f";
  }
  return "";
}

struct DarcyCoefficients {
  FieldSample a;
};
struct HelmholtzCoefficients {
  FieldSample k2;
};
struct DiffusionReactionCoefficients {
  FieldSample k;
  FieldSample q;
};

/// Parameter fields of one PDE instance. All members live on one grid.
class PdeCoefficients {
 public:
  using Storage = std::variant<DarcyCoefficients, HelmholtzCoefficients, DiffusionReactionCoefficients>;

  PdeCoefficients(DarcyCoefficients c) : s_(std::move(c)) {}
  PdeCoefficients(HelmholtzCoefficients c) : s_(std::move(c)) {}
  PdeCoefficients(DiffusionReactionCoefficients c) : s_(std::move(c)) {
    const auto& d = std::get<DiffusionReactionCoefficients>(s_);
    if (!(d.k.grid() == d.q.grid())) throw DimensionError("PdeCoefficients: k and q on different grids");
  }

  PdeKind kind() const noexcept { return static_cast<PdeKind>(s_.index()); }
  const Storage& storage() const noexcept { return s_; }
  const Grid2D& grid() const noexcept {
    return std::visit(
        [](const auto& c) -> const Grid2D& {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, DarcyCoefficients>) return c.a.grid();
          else if constexpr (std::is_same_v<T, HelmholtzCoefficients>) return c.k2.grid();
          else return c.k.grid();
        },
        s_);
  }

  /// Fields in the order given by coefficient_field_names(kind()).
  std::vector<const FieldSample*> fields() const {
    return std::visit(
        [](const auto& c) -> std::vector<const FieldSample*> {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, DarcyCoefficients>) return {&c.a};
          else if constexpr (std::is_same_v<T, HelmholtzCoefficients>) return {&c.k2};
          else return {&c.k, &c.q};
        },
        s_);
  }

  /// Rebuild from fields ordered as coefficient_field_names(kind).
  static PdeCoefficients from_fields(PdeKind kind, std::vector<FieldSample> fields) {
    const auto expected = coefficient_field_names(kind).size();
    if (fields.size() != expected) throw DimensionError("PdeCoefficients: wrong number of fields");
    switch (kind) {
      case PdeKind::Darcy: return DarcyCoefficients{std::move(fields[0])};
      case PdeKind::Helmholtz: return HelmholtzCoefficients{std::move(fields[0])};
      case PdeKind::DiffusionReaction:
        return DiffusionReactionCoefficients{std::move(fields[0]), std::move(fields[1])};
    }
    throw ParameterError("PdeCoefficients: bad kind");
  }

 private:
  Storage s_;
};

namespace detail {

inline void check_grid(const Grid2D& grid, const FieldSample& f, const char* what) {
  if (!(f.grid() == grid)) throw DimensionError(std::string(what) + ": field grid does not match");
}

inline void check_positive(const FieldSample& f, const char* what) {
  for (double v : f.values())
    if (!(v > 0.0) || !std::isfinite(v))
      throw EllipticityError(std::string(what) + ": coefficient must be finite and > 0 (min " +
                             std::to_string(f.min()) + ")");
}

/// Visits the 5-point stencil of every interior unknown in CSR column order.
/// `emit(col, i, j, di, dj)` is called per stored entry, (di,dj) = (0,0) for
/// the diagonal; `row_done()` after each row.
template <class Emit, class RowDone>
void for_each_stencil(const Grid2D& grid, Emit&& emit, RowDone&& row_done) {
  const std::size_t n = grid.n_interior();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = grid.unknown_index(i, j);
      if (i > 0) emit(row - n, i, j, -1, 0);
      if (j > 0) emit(row - 1, i, j, 0, -1);
      emit(row, i, j, 0, 0);
      if (j + 1 < n) emit(row + 1, i, j, 0, 1);
      if (i + 1 < n) emit(row + n, i, j, 1, 0);
      row_done();
    }
}

}  // namespace detail

/// Flux-form 5-point discretization of -div(a grad u) with zero Dirichlet
/// data. Face coefficients are arithmetic means of the two adjacent node
/// values; faces touching the boundary use the boundary node's value.
inline CsrMatrix assemble_darcy(const Grid2D& grid, const FieldSample& a) {
  detail::check_grid(grid, a, "assemble_darcy");
  detail::check_positive(a, "assemble_darcy");
  const std::size_t n = grid.n_interior();
  const double inv_h2 = static_cast<double>((n + 1) * (n + 1));
  auto face = [&](std::size_t I, std::size_t J, int dI, int dJ) {
    return 0.5 * (a.at(I, J) + a.at(I + dI, J + dJ));
  };
  CsrBuilder b(grid.num_unknowns(), grid.num_unknowns(), 5 * grid.num_unknowns());
  detail::for_each_stencil(
      grid,
      [&](std::size_t col, std::size_t i, std::size_t j, int di, int dj) {
        const std::size_t I = i + 1, J = j + 1;
        if (di == 0 && dj == 0) {
          const double s = face(I, J, 1, 0) + face(I, J, -1, 0) + face(I, J, 0, 1) + face(I, J, 0, -1);
          b.push(col, s * inv_h2);
        } else {
          b.push(col, -face(I, J, di, dj) * inv_h2);
        }
      },
      [&] { b.end_row(); });
  return std::move(b).finish();
}

/// lap(u) + k2 u with the standard h^-2 scaled stencil.
inline CsrMatrix assemble_helmholtz(const Grid2D& grid, const FieldSample& k2) {
  detail::check_grid(grid, k2, "assemble_helmholtz");
  const std::size_t n = grid.n_interior();
  const double inv_h2 = static_cast<double>((n + 1) * (n + 1));
  CsrBuilder b(grid.num_unknowns(), grid.num_unknowns(), 5 * grid.num_unknowns());
  detail::for_each_stencil(
      grid,
      [&](std::size_t col, std::size_t i, std::size_t j, int di, int dj) {
        if (di == 0 && dj == 0) b.push(col, -4.0 * inv_h2 + k2.at(i + 1, j + 1));
        else b.push(col, inv_h2);
      },
      [&] { b.end_row(); });
  return std::move(b).finish();
}

/// Unscaled Helmholtz stencil: diagonal -4 + k, neighbors 1 (h folded into
/// the system). Used only as a golden reference for the 2x2 worked example.
inline CsrMatrix assemble_helmholtz_paper_normalized(const Grid2D& grid, double k) {
  CsrBuilder b(grid.num_unknowns(), grid.num_unknowns(), 5 * grid.num_unknowns());
  detail::for_each_stencil(
      grid,
      [&](std::size_t col, std::size_t, std::size_t, int di, int dj) {
        b.push(col, (di == 0 && dj == 0) ? -4.0 + k : 1.0);
      },
      [&] { b.end_row(); });
  return std::move(b).finish();
}

/// div(k grad u) + q u, i.e. -assemble_darcy(k) + diag(q).
inline CsrMatrix assemble_diffusion_reaction(const Grid2D& grid, const FieldSample& k,
                                             const FieldSample& q) {
  detail::check_grid(grid, q, "assemble_diffusion_reaction");
  CsrMatrix A = assemble_darcy(grid, k);
  for (double& v : A.values) v = -v;
  const std::size_t n = grid.n_interior();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = grid.unknown_index(i, j);
      // diagonal is the middle entry after the (i-1,j) and (i,j-1) neighbors
      const std::size_t p = A.row_ptr[row] + (i > 0 ? 1 : 0) + (j > 0 ? 1 : 0);
      A.values[p] += q.at(i + 1, j + 1);
    }
  return A;
}

inline CsrMatrix assemble(const PdeCoefficients& c) {
  return std::visit(
      [](const auto& x) -> CsrMatrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DarcyCoefficients>) return assemble_darcy(x.a.grid(), x.a);
        else if constexpr (std::is_same_v<T, HelmholtzCoefficients>)
          return assemble_helmholtz(x.k2.grid(), x.k2);
        else return assemble_diffusion_reaction(x.k.grid(), x.k, x.q);
      },
      c.storage());
}

}  // namespace pdeforge
