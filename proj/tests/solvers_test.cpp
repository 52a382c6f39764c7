// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pdeforge/csr.hpp"
#include "pdeforge/fields.hpp"
#include "pdeforge/operators.hpp"
#include "pdeforge/rng.hpp"
#include "pdeforge/solvers/cg.hpp"
#include "pdeforge/solvers/gmres.hpp"
#include "test_support.hpp"

namespace pdeforge {
namespace {

Eigen::VectorXd lu_oracle(const CsrMatrix& A, const std::vector<double>& b) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.nrows), static_cast<Eigen::Index>(A.ncols));
  for (std::size_t i = 0; i < A.nrows; ++i)
    for (std::size_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(A.col_idx[p])) = A.values[p];
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
  return M.partialPivLu().solve(rhs);
}

double rel_to_oracle(const std::vector<double>& x, const Eigen::VectorXd& ref) {
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return (xv - ref).norm() / ref.norm();
}

CsrMatrix darcy_system(std::size_t n, std::uint64_t seed, std::vector<double>& b) {
  const Grid2D g(n);
  RngStream r(seed, StreamRole::SampleParams, 0);
  const auto a = sample_grf(g, {7.0, 2.5, 1.0, 0.0, FieldTransform::Exp}, r);
  b = sample_grf(g, {7.0, 2.5}, r).interior();
  return assemble_darcy(g, a);
}

CsrMatrix diagonal(const std::vector<double>& d) {
  CsrBuilder bld(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    bld.push(i, d[i]);
    bld.end_row();
  }
  return std::move(bld).finish();
}

SolveOptions traced(double tol, std::size_t max_iter = 1000) {
  SolveOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.record_trace = true;
  return o;
}

// ---------------------------------------------------------------------------
// GMRES

TEST(Gmres, IdentityConvergesInOneIteration) {
  const std::vector<double> b{1.0, -2.0, 3.5, 0.25};
  const auto rep = gmres(csr_identity(4), b, traced(1e-12));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(rep.x[i], b[i], 1e-15);
  const auto chk = verify_residual_bound(rep);
  EXPECT_TRUE(chk.all_passed());
  EXPECT_LE(chk.max_violation, chk.slack);
}

TEST(Gmres, UnitScaledHelmholtzTwoByTwo) {
  const auto A = assemble_helmholtz_paper_normalized(Grid2D(2), 0.0);
  const std::vector<double> b(4, -2.0);
  const auto rep = gmres(A, b, traced(1e-10));
  ASSERT_TRUE(rep.converged);
  for (double v : rep.x) EXPECT_NEAR(v, 1.0, 1e-8);
  EXPECT_LE(rel_to_oracle(rep.x, lu_oracle(A, b)), 1e-8);
  EXPECT_TRUE(verify_residual_bound(rep).all_passed());
}

TEST(Gmres, DarcyMatchesDenseOracle) {
  std::vector<double> b;
  const auto A = darcy_system(10, 1, b);
  const auto rep = gmres(A, b, traced(1e-7));
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rep.final_relative_residual, 1e-7);
  EXPECT_LE(testing::rel_diff(apply_operator(A, rep.x), b), 1e-7);
  EXPECT_LE(rel_to_oracle(rep.x, lu_oracle(A, b)), 1e-5);
  EXPECT_TRUE(verify_residual_bound(rep).all_passed());
}

TEST(Gmres, ResidualNonincreasing) {
  std::vector<double> b;
  const auto A = darcy_system(12, 2, b);
  const auto rep = gmres(A, b, traced(1e-10));
  ASSERT_TRUE(rep.trace);
  for (std::size_t j = 1; j < rep.trace->size(); ++j)
    EXPECT_LE((*rep.trace)[j].residual_norm, (*rep.trace)[j - 1].residual_norm + 1e-12);
  for (const auto& rec : *rep.trace) {
    EXPECT_GE(rec.residual_norm, 0.0);
    EXPECT_GE(rec.h_subdiag, 0.0);
  }
}

TEST(Gmres, ArnoldiBasisOrthonormal) {
  std::vector<double> b;
  const auto A = darcy_system(16, 3, b);  // 256 unknowns
  SolveOptions o = traced(1e-10);
  o.keep_basis = true;
  const auto rep = gmres(A, b, o);
  ASSERT_FALSE(rep.basis.empty());
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.basis.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double d = 0.0;
      for (std::size_t q = 0; q < b.size(); ++q) d += rep.basis[i][q] * rep.basis[j][q];
      worst = std::max(worst, std::abs(d - (i == j ? 1.0 : 0.0)));
    }
  EXPECT_LE(worst, 1e-8);
}

TEST(Gmres, HappyBreakdownInInvariantSubspace) {
  // b spans 3 eigenvectors of a diagonal matrix: Krylov space closes after 3 steps
  const auto A = diagonal({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  const std::vector<double> b{1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
  const auto rep = gmres(A, b, traced(1e-14));
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.iterations, 3u);
  EXPECT_NEAR(rep.x[2], 1.0 / 3.0, 1e-14);
}

TEST(Gmres, NonConvergenceIsReportedNotThrown) {
  std::vector<double> b;
  const auto A = darcy_system(12, 4, b);
  SolveOptions o;
  o.tol = 1e-12;
  o.max_iter = 3;
  const auto rep = gmres(A, b, o);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 3u);
  EXPECT_GT(rep.final_relative_residual, 1e-12);
}

TEST(Gmres, ZeroRhsReturnsInitialGuess) {
  const std::vector<double> b(9, 0.0);
  const auto rep = gmres(csr_identity(9, 2.0), b, SolveOptions{});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0u);
  EXPECT_EQ(rep.x, b);
}

TEST(Gmres, NonzeroInitialGuess) {
  std::vector<double> b;
  const auto A = darcy_system(6, 5, b);
  std::vector<double> x0(b.size(), 0.3);
  SolveOptions o;
  o.tol = 1e-10;
  const auto rep = gmres(A, b, x0, o);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rel_to_oracle(rep.x, lu_oracle(A, b)), 1e-7);
}

TEST(Gmres, Errors) {
  const auto A = csr_identity(3);
  EXPECT_THROW(gmres(A, std::vector<double>(4, 1.0), SolveOptions{}), DimensionError);
  SolveOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(gmres(A, std::vector<double>(3, 1.0), bad), ParameterError);
  bad.tol = 1e-5;
  bad.max_iter = 0;
  EXPECT_THROW(gmres(A, std::vector<double>(3, 1.0), bad), ParameterError);
  std::vector<double> nan_b{1.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
  EXPECT_THROW(gmres(A, nan_b, SolveOptions{}), NumericalBreakdown);
}

TEST(Gmres, BoundCheckNeedsTrace) {
  const auto rep = gmres(csr_identity(2), std::vector<double>{1.0, 1.0}, SolveOptions{});
  EXPECT_THROW(verify_residual_bound(rep), PreconditionError);
}

TEST(Gmres, RandomSystemsBoundAndOracle) {
  std::mt19937_64 pick(77);
  std::uniform_int_distribution<std::size_t> size(2, 20);
  for (int c = 0; c < 12; ++c) {
    const std::size_t n = size(pick);
    const Grid2D g(n);
    RngStream r(100 + c, StreamRole::SampleParams, 0);
    CsrMatrix A;
    if (c % 2 == 0) {
      A = assemble_darcy(g, sample_grf(g, {7.0, 2.5, 1.0, 0.0, FieldTransform::Exp}, r));
    } else {
      A = assemble_helmholtz(g, sample_grf(g, {3.0, 2.0, 0.1, 0.0, FieldTransform::None}, r));
    }
    const auto b = sample_grf(g, {3.0, 2.0}, r).interior();
    const auto rep = gmres(A, b, traced(1e-12));
    ASSERT_TRUE(rep.converged) << "case " << c;
    EXPECT_TRUE(verify_residual_bound(rep).all_passed()) << "case " << c;
    EXPECT_LE(rel_to_oracle(rep.x, lu_oracle(A, b)), 1e-6) << "case " << c;
  }
}

// ---------------------------------------------------------------------------
// CG

TEST(Cg, ScaledIdentity) {
  const std::vector<double> b{2.0, 4.0, -6.0};
  const auto rep = cg(csr_identity(3, 2.0), b, SolveOptions{});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1u);
  EXPECT_NEAR(rep.x[0], 1.0, 1e-15);
  EXPECT_NEAR(rep.x[2], -3.0, 1e-15);
}

TEST(Cg, UnitDarcyMatchesOracle) {
  const Grid2D g(3);
  const auto A = assemble_darcy(g, constant_field(g, 1.0));
  const std::vector<double> b(9, 1.0);
  SolveOptions o;
  o.tol = 1e-12;
  const auto rep = cg(A, b, o);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rel_to_oracle(rep.x, lu_oracle(A, b)), 1e-8);
}

TEST(Cg, LogNormalDarcyIterationCount) {
  std::vector<double> b;
  const auto A = darcy_system(8, 6, b);
  SolveOptions o = traced(1e-10);
  const auto rep = cg(A, b, o);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rep.iterations, 2u * 64u);
  for (const auto& rec : *rep.trace) EXPECT_EQ(rec.h_subdiag, 0.0);
}

TEST(Cg, RejectsAsymmetricAndIndefinite) {
  CsrBuilder b(2, 2);
  b.push(0, 2.0);
  b.push(1, 1.0);
  b.end_row();
  b.push(1, 2.0);
  b.end_row();
  EXPECT_THROW(cg(std::move(b).finish(), std::vector<double>{1.0, 1.0}, SolveOptions{}), PreconditionError);
  const auto H = diagonal({1.0, -1.0});
  EXPECT_THROW(cg(H, std::vector<double>{1.0, 1.0}, SolveOptions{}), NotSpdError);
}

}  // namespace
}  // namespace pdeforge
