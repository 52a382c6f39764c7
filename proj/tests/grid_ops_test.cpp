// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pdeforge/csr.hpp"
#include "pdeforge/dense.hpp"
#include "pdeforge/fields.hpp"
#include "pdeforge/grid.hpp"
#include "pdeforge/operators.hpp"
#include "pdeforge/rng.hpp"
#include "test_support.hpp"

namespace pdeforge {
namespace {

using testing::Dense;

Eigen::MatrixXd to_eigen(const CsrMatrix& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.nrows), static_cast<Eigen::Index>(A.ncols));
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(A.col_idx[p])) = A.values[p];
  return M;
}

void expect_matches_dense(const CsrMatrix& A, const Dense& D, double rel) {
  ASSERT_EQ(A.nrows, D.n);
  double scale = 0.0;
  for (double v : D.v) scale = std::max(scale, std::abs(v));
  const auto M = A.to_dense();
  for (std::size_t i = 0; i < D.n; ++i)
    for (std::size_t j = 0; j < D.n; ++j)
      ASSERT_NEAR(M[i * D.n + j], D(i, j), rel * scale) << "entry (" << i << "," << j << ")";
}

std::size_t brute_force_stencil_nnz(std::size_t n) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ++count;
      count += (i > 0) + (i + 1 < n) + (j > 0) + (j + 1 < n);
    }
  return count;
}

// ---------------------------------------------------------------------------
// Grid2D

TEST(Grid2D, SpacingAndCounts) {
  const Grid2D g(4);
  EXPECT_EQ(g.num_unknowns(), 16u);
  EXPECT_EQ(g.num_nodes(), 36u);
  EXPECT_EQ(g.h(), 1.0 / 5.0);
  EXPECT_THROW(Grid2D(0), ParameterError);
}

TEST(Grid2D, UnknownIndexIsBijection) {
  for (std::size_t n : {1u, 2u, 7u}) {
    const Grid2D g(n);
    std::vector<int> hit(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto k = g.unknown_index(i, j);
        ASSERT_LT(k, n * n);
        ++hit[k];
        EXPECT_FALSE(g.is_boundary_node(i + 1, j + 1));
      }
    for (int h : hit) EXPECT_EQ(h, 1);
  }
}

TEST(FieldSample, InteriorViewIsRowMajor) {
  const Grid2D g(3);
  FieldSample f(g);
  for (std::size_t I = 0; I < 5; ++I)
    for (std::size_t J = 0; J < 5; ++J) f.at(I, J) = 10.0 * static_cast<double>(I) + static_cast<double>(J);
  const auto in = f.interior();
  ASSERT_EQ(in.size(), 9u);
  EXPECT_EQ(in[0], 11.0);
  EXPECT_EQ(in[2], 13.0);
  EXPECT_EQ(in[3], 21.0);
  EXPECT_EQ(in[8], 33.0);
  EXPECT_THROW(FieldSample(g, std::vector<double>(24)), DimensionError);
}

// ---------------------------------------------------------------------------
// CSR basics

TEST(Csr, IdentityActionReturnsInput) {
  const auto I = csr_identity(7);
  std::mt19937_64 rng(1);
  const auto x = testing::random_vector(rng, 7);
  EXPECT_EQ(apply_operator(I, x), x);
}

TEST(Csr, ApplyRejectsWrongLength) {
  const auto I = csr_identity(3);
  const std::vector<double> x(4, 1.0);
  EXPECT_THROW(apply_operator(I, x), DimensionError);
}

TEST(Csr, ValidateCatchesBrokenStructure) {
  CsrMatrix A = csr_identity(3);
  A.col_idx[1] = 5;
  EXPECT_THROW(A.validate(), DimensionError);
  CsrMatrix B = csr_identity(3);
  B.row_ptr[2] = 0;
  EXPECT_THROW(B.validate(), DimensionError);
}

TEST(Csr, MatrixMarketDump) {
  std::ostringstream os;
  write_matrix_market(os, csr_identity(2, 3.0));
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
  EXPECT_NE(s.find("2 2 2"), std::string::npos);
  EXPECT_NE(s.find("2 2 3"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Darcy

TEST(Darcy, UnitCoefficientTwoByTwo) {
  const Grid2D g(2);
  const auto A = assemble_darcy(g, constant_field(g, 1.0));
  const double want[4][4] = {{4, -1, -1, 0}, {-1, 4, 0, -1}, {-1, 0, 4, -1}, {0, -1, -1, 4}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(A.at(i, j), 9.0 * want[i][j]);
}

TEST(Darcy, UnitCoefficientEigenvaluesMatchAnalytic) {
  const Grid2D g(3);
  const auto A = assemble_darcy(g, constant_field(g, 1.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(A));
  std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + 9);
  std::vector<double> want;
  const double h = g.h();
  for (int p = 1; p <= 3; ++p)
    for (int q = 1; q <= 3; ++q) {
      const double sp = std::sin(std::numbers::pi * p * h / 2), sq = std::sin(std::numbers::pi * q * h / 2);
      want.push_back(4.0 / (h * h) * (sp * sp + sq * sq));
    }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(got[i], want[i], 1e-10 * want.back());
}

TEST(Darcy, MatchesBruteForceOracle) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 4u, 7u}) {
    const Grid2D g(n);
    const auto a = testing::random_field(rng, g, 0.1, 5.0);
    expect_matches_dense(assemble_darcy(g, a), testing::dense_darcy(n, testing::vec(a)), 1e-14);
  }
}

TEST(Darcy, SymmetricAndPositiveDefinite) {
  std::mt19937_64 rng(12);
  for (std::size_t n = 1; n <= 8; ++n) {
    const Grid2D g(n);
    const auto A = assemble_darcy(g, testing::random_field(rng, g, 0.05, 20.0));
    EXPECT_TRUE(is_symmetric(A));
    const auto M = to_eigen(A);
    EXPECT_EQ(M, M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "n=" << n;
  }
}

TEST(Darcy, StencilSparsity) {
  for (std::size_t n : {1u, 2u, 3u, 10u}) {
    const Grid2D g(n);
    const auto A = assemble_darcy(g, constant_field(g, 2.0));
    A.validate();
    EXPECT_EQ(A.nnz(), brute_force_stencil_nnz(n));
    for (std::size_t i = 0; i < A.nrows; ++i) EXPECT_LE(A.row_ptr[i + 1] - A.row_ptr[i], 5u);
    for (double v : A.values) EXPECT_NE(v, 0.0);
  }
}

TEST(Darcy, ConstantCoefficientScales) {
  const Grid2D g(5);
  const auto A1 = assemble_darcy(g, constant_field(g, 1.0));
  const auto A3 = assemble_darcy(g, constant_field(g, 3.0));
  for (std::size_t p = 0; p < A1.values.size(); ++p) EXPECT_DOUBLE_EQ(A3.values[p], 3.0 * A1.values[p]);
}

TEST(Darcy, RejectsNonPositiveOrMismatchedCoefficient) {
  const Grid2D g(3);
  auto a = constant_field(g, 1.0);
  a.at(2, 2) = 0.0;
  EXPECT_THROW(assemble_darcy(g, a), EllipticityError);
  a.at(2, 2) = -1.0;
  EXPECT_THROW(assemble_darcy(g, a), EllipticityError);
  EXPECT_THROW(assemble_darcy(Grid2D(4), constant_field(g, 1.0)), DimensionError);
}

// ---------------------------------------------------------------------------
// Helmholtz

TEST(Helmholtz, ZeroWavenumberIsNegatedLaplacian) {
  const Grid2D g(2);
  const auto H = assemble_helmholtz(g, constant_field(g, 0.0));
  const auto D = assemble_darcy(g, constant_field(g, 1.0));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(H.at(i, j), -D.at(i, j));
}

TEST(Helmholtz, ConstantShiftIsDiagonal) {
  const Grid2D g(4);
  const auto H0 = assemble_helmholtz(g, constant_field(g, 0.0));
  const auto Hc = assemble_helmholtz(g, constant_field(g, 2.5));
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(Hc.at(i, j) - H0.at(i, j), i == j ? 2.5 : 0.0);
}

TEST(Helmholtz, RowSumsFromGrfWavenumber) {
  const Grid2D g(4);
  RngStream rng(5, StreamRole::SampleParams, 0);
  const auto k2 = sample_grf(g, {3.0, 2.0, 0.1, 0.0, FieldTransform::None}, rng);
  const auto A = assemble_helmholtz(g, k2);
  const auto D = testing::dense_helmholtz(4, testing::vec(k2));
  const std::vector<double> ones(16, 1.0);
  const auto got = apply_operator(A, ones);
  for (std::size_t i = 0; i < 16; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 16; ++j) s += D(i, j);
    EXPECT_NEAR(got[i], s, 1e-13 * 100.0);
  }
}

TEST(Helmholtz, MatchesBruteForceOracle) {
  std::mt19937_64 rng(13);
  for (std::size_t n : {1u, 3u, 6u}) {
    const Grid2D g(n);
    const auto k2 = testing::random_field(rng, g, -50.0, 50.0);
    expect_matches_dense(assemble_helmholtz(g, k2), testing::dense_helmholtz(n, testing::vec(k2)), 1e-14);
  }
}

TEST(HelmholtzUnitScaled, GoldenMatrices) {
  const Grid2D g(2);
  for (double k : {0.0, 1.0, -4.0}) {
    const auto A = assemble_helmholtz_paper_normalized(g, k);
    const double d = -4.0 + k;
    const double want[4][4] = {{d, 1, 1, 0}, {1, d, 0, 1}, {1, 0, d, 1}, {0, 1, 1, d}};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(A.at(i, j), want[i][j]) << "k=" << k;
  }
}

TEST(HelmholtzUnitScaled, OffDiagonalCountEqualsNeighborCount) {
  const Grid2D g(3);
  const auto A = assemble_helmholtz_paper_normalized(g, 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t row = i * 3 + j;
      const std::size_t neighbors = (i > 0) + (i < 2) + (j > 0) + (j < 2);
      std::size_t off = 0;
      for (std::size_t c = 0; c < 9; ++c)
        if (c != row && A.at(row, c) != 0.0) ++off;
      EXPECT_EQ(off, neighbors);
    }
}

TEST(HelmholtzUnitScaled, RowSumsOfOnes) {
  const auto A = assemble_helmholtz_paper_normalized(Grid2D(2), 0.0);
  EXPECT_EQ(apply_operator(A, std::vector<double>(4, 1.0)), std::vector<double>(4, -2.0));
}

// ---------------------------------------------------------------------------
// Diffusion-reaction

TEST(DiffusionReaction, UnitDiffusionNoReactionIsNegatedDarcy) {
  const Grid2D g(3);
  const auto A = assemble_diffusion_reaction(g, constant_field(g, 1.0), constant_field(g, 0.0));
  const auto D = assemble_darcy(g, constant_field(g, 1.0));
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(A.at(i, j), -D.at(i, j));
}

TEST(DiffusionReaction, ReactionIsDiagonalShift) {
  std::mt19937_64 rng(14);
  const Grid2D g(4);
  const auto k = testing::random_field(rng, g, 0.5, 2.0);
  const auto A0 = assemble_diffusion_reaction(g, k, constant_field(g, 0.0));
  const auto Ac = assemble_diffusion_reaction(g, k, constant_field(g, 0.75));
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(Ac.at(i, j) - A0.at(i, j), i == j ? 0.75 : 0.0, 1e-12);
}

TEST(DiffusionReaction, SpmvMatchesDenseOnGrfCoefficients) {
  const Grid2D g(4);
  RngStream rng(21, StreamRole::SampleParams, 3);
  const auto k = sample_grf(g, {3.0, 2.0, 1.0, std::log(10.0), FieldTransform::Exp}, rng);
  const auto q = sample_uniform(g, 0.0, 1.0, rng);
  const auto A = assemble_diffusion_reaction(g, k, q);
  const auto D = testing::dense_diffusion_reaction(4, testing::vec(k), testing::vec(q));
  std::mt19937_64 g64(15);
  for (int t = 0; t < 3; ++t) {
    const auto x = testing::random_vector(g64, 16);
    EXPECT_LE(testing::rel_diff(apply_operator(A, x), testing::dense_mul(D, x)), 1e-13);
  }
}

TEST(DiffusionReaction, RejectsNonPositiveDiffusion) {
  const Grid2D g(2);
  EXPECT_THROW(assemble_diffusion_reaction(g, constant_field(g, -1.0), constant_field(g, 0.0)), EllipticityError);
}

// ---------------------------------------------------------------------------
// Operator action properties (hand-rolled generators)

TEST(OperatorAction, SpmvMatchesDenseAndIsLinear) {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_int_distribution<int> family(0, 2);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int c = 0; c < 60; ++c) {
    const std::size_t n = size(rng);
    const Grid2D g(n);
    CsrMatrix A;
    Dense D(1);
    switch (family(rng)) {
      case 0: {
        const auto a = testing::random_field(rng, g, 0.01, 10.0);
        A = assemble_darcy(g, a);
        D = testing::dense_darcy(n, testing::vec(a));
        break;
      }
      case 1: {
        const auto k2 = testing::random_field(rng, g, -100.0, 100.0);
        A = assemble_helmholtz(g, k2);
        D = testing::dense_helmholtz(n, testing::vec(k2));
        break;
      }
      default: {
        const auto k = testing::random_field(rng, g, 0.01, 10.0);
        const auto q = testing::random_field(rng, g, 0.0, 1.0);
        A = assemble_diffusion_reaction(g, k, q);
        D = testing::dense_diffusion_reaction(n, testing::vec(k), testing::vec(q));
      }
    }
    const auto x1 = testing::random_vector(rng, n * n), x2 = testing::random_vector(rng, n * n);
    const double al = coef(rng), be = coef(rng);
    std::vector<double> mix(n * n);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = al * x1[i] + be * x2[i];
    const auto y1 = apply_operator(A, x1), y2 = apply_operator(A, x2), ym = apply_operator(A, mix);
    std::vector<double> lin(n * n);
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = al * y1[i] + be * y2[i];
    EXPECT_LE(testing::rel_diff(y1, testing::dense_mul(D, x1)), 1e-13) << "case " << c;
    EXPECT_LE(testing::rel_diff(ym, lin), 1e-13) << "case " << c;
  }
}

TEST(OperatorAction, DeterministicSummation) {
  std::mt19937_64 rng(17);
  const Grid2D g(20);
  const auto A = assemble_darcy(g, testing::random_field(rng, g, 0.1, 3.0));
  const auto x = testing::random_vector(rng, g.num_unknowns());
  EXPECT_EQ(apply_operator(A, x), apply_operator(A, x));
}

// ---------------------------------------------------------------------------
// Dense oracle

TEST(DenseSolve, IdentityAndUnitScaledHelmholtz) {
  const std::vector<double> b{3.0, -1.0, 2.0};
  EXPECT_EQ(dense_solve(csr_identity(3), b), b);
  const auto A = assemble_helmholtz_paper_normalized(Grid2D(2), 0.0);
  const auto x = dense_solve(A, std::vector<double>(4, -2.0));
  for (double v : x) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(DenseSolve, DarcyResidual) {
  std::mt19937_64 rng(18);
  const Grid2D g(3);
  const auto A = assemble_darcy(g, testing::random_field(rng, g, 0.5, 2.0));
  const auto b = testing::random_vector(rng, 9);
  const auto x = dense_solve(A, b);
  EXPECT_LE(testing::rel_diff(apply_operator(A, x), b), 1e-12);
}

TEST(DenseSolve, SingularAndOversized) {
  CsrBuilder b(2, 2);
  b.push(0, 1.0);
  b.push(1, 2.0);
  b.end_row();
  b.push(0, 2.0);
  b.push(1, 4.0);
  b.end_row();
  const auto S = std::move(b).finish();
  EXPECT_THROW(dense_solve(S, std::vector<double>{1.0, 1.0}), SingularityError);
  EXPECT_THROW(dense_solve(csr_identity(10), std::vector<double>(10, 1.0), 5), SizeError);
}

TEST(DenseSolve, CapFromEnvironment) {
  ::setenv("PDEFORGE_ORACLE_CAP", "8", 1);
  EXPECT_EQ(oracle_cap(), 8u);
  EXPECT_THROW(dense_solve(csr_identity(9), std::vector<double>(9, 1.0)), SizeError);
  ::unsetenv("PDEFORGE_ORACLE_CAP");
  EXPECT_EQ(oracle_cap(), kDefaultOracleCap);
}

}  // namespace
}  // namespace pdeforge
