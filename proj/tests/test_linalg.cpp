#include <gtest/gtest.h>

#include "sscls/constraint_map.hpp"
#include "sscls/linalg.hpp"
#include "test_support.hpp"

using namespace sscls;

TEST(Linalg, VecStacksColumns) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  Vector expected(6);
  expected << 1, 4, 2, 5, 3, 6;
  EXPECT_EQ(vec(m), expected);
}

TEST(Linalg, UnvecRoundTripIsBitIdentical) {
  testkit::Rng rng(1);
  const Matrix m = rng.randn(4, 3);
  EXPECT_EQ(unvec(vec(m), 4, 3), m);
  EXPECT_THROW(unvec(vec(m), 5, 3), Error);
}

TEST(Linalg, KronMatchesDefinition) {
  testkit::Rng rng(2);
  const Matrix a = rng.randn(2, 3);
  const Matrix b = rng.randn(3, 2);
  const Matrix k = kron(a, b);
  ASSERT_EQ(k.rows(), 6);
  ASSERT_EQ(k.cols(), 6);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index r = 0; r < 3; ++r)
        for (Index c = 0; c < 2; ++c) EXPECT_EQ(k(i * 3 + r, j * 2 + c), a(i, j) * b(r, c));
}

TEST(Linalg, VecKronIdentityOnRandomTriples) {
  testkit::Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const Index a = rng.uniform(1, 8), b = rng.uniform(1, 8), c = rng.uniform(1, 8),
                d = rng.uniform(1, 8);
    const Matrix M = rng.randn(a, b), N = rng.randn(b, c), O = rng.randn(c, d);
    const double scale = 1.0 + M.cwiseAbs().maxCoeff() * N.cwiseAbs().maxCoeff() *
                                   O.cwiseAbs().maxCoeff() * b * c;
    EXPECT_LE(vec_kron_identity_check(M, N, O), 1e-13 * scale);
  }
}

TEST(Linalg, VecKronIdentityExamples) {
  const Matrix I2 = Matrix::Identity(2, 2);
  EXPECT_EQ(vec_kron_identity_check(I2, I2, I2), 0.0);
  testkit::Rng rng(4);
  EXPECT_LE(vec_kron_identity_check(rng.randn(3, 2), rng.randn(2, 4), rng.randn(4, 3)), 1e-13);
  EXPECT_LE(vec_kron_identity_check(Matrix::Ones(1, 1), rng.randn(1, 5), rng.randn(5, 2)), 1e-13);
  EXPECT_THROW(vec_kron_identity_check(rng.randn(2, 3), rng.randn(2, 2), rng.randn(2, 2)), Error);
}

TEST(Linalg, NumericalRankUsesRelativeThreshold) {
  Matrix m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 1, 0, 1;
  EXPECT_EQ(numerical_rank(m), 2);
  EXPECT_EQ(numerical_rank(1e-30 * Matrix::Identity(3, 3)), 3);
  EXPECT_EQ(numerical_rank(Matrix::Zero(2, 2)), 0);
}

TEST(Linalg, SymmetrizeAveragesTranspose) {
  Matrix p(2, 2);
  p << 1, 2, 4, 3;
  symmetrize(p);
  EXPECT_EQ(p(0, 1), 3.0);
  EXPECT_EQ(p(1, 0), 3.0);
}

TEST(Linalg, MaxAbsOfEmptyIsZero) {
  EXPECT_EQ(max_abs(Matrix(0, 0)), 0.0);
  Vector v(3);
  v << 1, -5, 2;
  EXPECT_EQ(max_abs(v), 5.0);
}
