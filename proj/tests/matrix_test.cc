// Copyright 2026 The dpobs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "dpobs/matrix.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"

namespace dpobs {
namespace {

Mat RandomMat(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

Mat RandomSpd(std::mt19937_64& rng, std::size_t n) {
  const Mat a = RandomMat(rng, n, n);
  return (a.Transpose() * a + Mat::Identity(n) * 0.5).Symmetrized();
}

// Largest eigenvalue of a matrix similar to a symmetric PSD one.
double PowerIteration(const Mat& m) {
  Vec v(m.rows(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Vec w = m * v;
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] /= norm;
    Vec mw = m * w;
    double num = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) num += w[i] * mw[i];
    lambda = num;
    v = w;
  }
  return lambda;
}

TEST(MatTest, ArithmeticAndShapes) {
  const Mat a{{1, 2}, {3, 4}};
  const Mat b{{0, 1}, {1, 0}};
  const Mat ab = a * b;
  EXPECT_EQ(ab(0, 0), 2);
  EXPECT_EQ(ab(1, 1), 3);
  EXPECT_EQ((a + b)(0, 1), 3);
  EXPECT_EQ((a - b)(1, 0), 2);
  EXPECT_EQ((2.0 * a)(1, 1), 8);
  EXPECT_EQ(a.Transpose()(0, 1), 3);
  EXPECT_EQ(a.Trace(), 5);
  EXPECT_THROW(a * Mat(3, 1), DimensionError);
  EXPECT_THROW(Mat(2, 2) + Mat(2, 3), DimensionError);
}

TEST(MatTest, BlockAssembly) {
  const Mat m = BlockMatrix(Mat{{1}}, Mat{{2, 3}}, Mat{{4}, {5}},
                            Mat{{6, 7}, {8, 9}});
  ASSERT_EQ(m.rows(), 3u);
  ASSERT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(0, 2), 3);
  EXPECT_EQ(m(2, 0), 5);
  EXPECT_EQ(m(2, 2), 9);
  EXPECT_EQ(m.Block(1, 1, 2, 2)(1, 0), 8);
  EXPECT_THROW(BlockMatrix(Mat(1, 1), Mat(2, 2), Mat(1, 1), Mat(1, 1)),
               DimensionError);
}

TEST(EigenTest, TwoByTwoClosedForm) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Mat s = RandomMat(rng, 2, 2).Symmetrized();
    const double tr = s(0, 0) + s(1, 1);
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    const double disc = std::sqrt(tr * tr / 4 - det);
    const SymEig e = SymmetricEigen(s);
    EXPECT_NEAR(e.values[0], tr / 2 - disc, 1e-13);
    EXPECT_NEAR(e.values[1], tr / 2 + disc, 1e-13);
  }
}

TEST(EigenTest, ReconstructsAndIsOrthonormal) {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 3u, 6u, 10u}) {
    const Mat s = RandomMat(rng, n, n).Symmetrized();
    const SymEig e = SymmetricEigen(s);
    for (std::size_t i = 1; i < n; ++i) {
      EXPECT_LE(e.values[i - 1], e.values[i]);
    }
    const Mat rebuilt =
        e.vectors * Mat::Diagonal(e.values) * e.vectors.Transpose();
    EXPECT_LT((rebuilt - s).MaxAbs(), 1e-12);
    EXPECT_LT((e.vectors.Transpose() * e.vectors - Mat::Identity(n)).MaxAbs(),
              1e-12);
  }
}

TEST(EigenTest, RejectsNonFiniteInput) {
  Mat s = Mat::Identity(2);
  s(0, 0) = std::nan("");
  EXPECT_THROW(SymmetricEigen(s), NumericalError);
}

TEST(InducedNormTest, OneAndInfMatchBallVertexSearch) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Mat a = RandomMat(rng, 3, 3);
    // The 1-norm ball has vertices +-e_i.
    double best_one = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      Vec e(3, 0.0);
      e[j] = 1.0;
      best_one = std::max(best_one, VecNorm(a * e, NormTag::One()));
    }
    // The inf-norm ball has the 8 sign vectors as vertices.
    double best_inf = 0.0;
    for (int mask = 0; mask < 8; ++mask) {
      Vec v{mask & 1 ? 1.0 : -1.0, mask & 2 ? 1.0 : -1.0,
            mask & 4 ? 1.0 : -1.0};
      best_inf = std::max(best_inf, VecNorm(a * v, NormTag::Inf()));
    }
    EXPECT_NEAR(InducedNorm(a, NormTag::One()), best_one, 1e-14);
    EXPECT_NEAR(InducedNorm(a, NormTag::Inf()), best_inf, 1e-14);
  }
}

TEST(InducedNormTest, TwoAndWeightedMatchPowerIteration) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Mat a = RandomMat(rng, 3, 3);
    EXPECT_NEAR(InducedNorm(a, NormTag::Two()),
                std::sqrt(PowerIteration(a.Transpose() * a)), 1e-9);
    const Mat p = RandomSpd(rng, 3);
    // ||A||_P^2 is the top eigenvalue of P^{-1} A^T P A.
    const double expected =
        std::sqrt(PowerIteration(Inverse(p) * a.Transpose() * p * a));
    EXPECT_NEAR(InducedNorm(a, NormTag::Weighted(SpdMat(p))), expected, 1e-8);
  }
}

TEST(InducedNormTest, WeightedNormIsSupremumOverSamples) {
  std::mt19937_64 rng(5);
  const Mat a = RandomMat(rng, 2, 2);
  const SpdMat p(RandomSpd(rng, 2));
  const NormTag tag = NormTag::Weighted(p);
  const double norm = InducedNorm(a, tag);
  double best = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double th = 2.0 * M_PI * k / 20000.0;
    const Vec v{std::cos(th), std::sin(th)};
    best = std::max(best, VecNorm(a * v, tag) / VecNorm(v, tag));
  }
  EXPECT_LE(best, norm + 1e-12);
  EXPECT_GT(best, norm * (1.0 - 1e-6));
}

TEST(InducedNormTest, MixedNorms) {
  const Mat col{{3.0}, {-4.0}};
  EXPECT_DOUBLE_EQ(InducedNorm(col, NormTag::Two(), NormTag::One()), 5.0);
  EXPECT_DOUBLE_EQ(InducedNorm(col, NormTag::One(), NormTag::Two()), 7.0);
  const SpdMat p(Mat{{2.0, 0.0}, {0.0, 8.0}});
  EXPECT_DOUBLE_EQ(InducedNorm(col, NormTag::Weighted(p), NormTag::Inf()),
                   std::sqrt(2.0 * 9.0 + 8.0 * 16.0));
  const Mat a{{1, -2}, {3, 4}};
  // 1-norm input: the largest output norm of a column.
  EXPECT_DOUBLE_EQ(InducedNorm(a, NormTag::Two(), NormTag::One()),
                   std::sqrt(20.0));
  // Inf on both sides: the largest absolute row sum.
  EXPECT_DOUBLE_EQ(InducedNorm(a, NormTag::Inf(), NormTag::Inf()), 7.0);
  EXPECT_THROW(InducedNorm(a, NormTag::One(), NormTag::Inf()), InvalidArgument);
}

TEST(SpdTest, ConstructionChecks) {
  EXPECT_THROW(SpdMat(Mat{{1, 2}, {0, 1}}), InvalidArgument);
  EXPECT_THROW(SpdMat(Mat{{1, 0}, {0, -1}}), InvalidArgument);
  EXPECT_THROW(SpdMat(Mat{{0, 0}, {0, 1}}), InvalidArgument);
  EXPECT_NO_THROW(SpdMat(Mat{{2, 1}, {1, 2}}));
}

TEST(SpdTest, SqrtCholeskyAndInverse) {
  std::mt19937_64 rng(6);
  const Mat p = RandomSpd(rng, 4);
  const Mat d = SpdSqrt(SpdMat(p));
  EXPECT_LT((d * d - p).MaxAbs(), 1e-12);
  const auto chol = Cholesky(p);
  ASSERT_TRUE(chol.has_value());
  EXPECT_LT((*chol * chol->Transpose() - p).MaxAbs(), 1e-12);
  EXPECT_LT((SpdInverse(p) * p - Mat::Identity(4)).MaxAbs(), 1e-11);
  EXPECT_FALSE(Cholesky(Mat{{1, 2}, {2, 1}}).has_value());
  const Vec b{1, 2, 3, 4};
  const Vec x = CholeskySolve(*chol, b);
  const Vec back = p * x;
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back[i], b[i], 1e-12);
}

TEST(SolveTest, GeneralInverseAndSingular) {
  const Mat a{{0, 1}, {2, 3}};  // needs pivoting
  EXPECT_LT((Inverse(a) * a - Mat::Identity(2)).MaxAbs(), 1e-15);
  const Mat x = Solve(a, Mat{{1}, {5}});
  EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(x(1, 0), 1.0, 1e-15);
  EXPECT_THROW(Inverse(Mat{{1, 2}, {2, 4}}), NumericalError);
}

}  // namespace
}  // namespace dpobs
