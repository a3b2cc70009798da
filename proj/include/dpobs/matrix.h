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

// Dense small-matrix arithmetic. Dimensions here never exceed ~10, so
// everything is plain row-major storage and O(n^3) algorithms.

#ifndef DPOBS_MATRIX_H_
#define DPOBS_MATRIX_H_

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "dpobs/errors.h"

namespace dpobs {

// Every numerical tolerance used by the matrix routines. Functions take a
// `const Tolerances&` defaulted to `Tolerances{}` so tests can tighten or
// loosen them in one place.
struct Tolerances {
  // Relative asymmetry accepted for "symmetric" inputs.
  double symmetry = 1e-12;
  // Jacobi stops once the off-diagonal Frobenius mass falls below this
  // (relative to the matrix Frobenius norm).
  double jacobi_off_diagonal = 1e-14;
  int jacobi_max_sweeps = 100;
};

using Vec = std::vector<double>;

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  // Nested-list construction: Mat{{1, 2}, {3, 4}}.
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat Identity(std::size_t n);
  static Mat Diagonal(std::span<const double> diag);
  static Mat Column(std::span<const double> v);
  static Mat Row(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  const std::vector<double>& data() const { return data_; }

  Mat Transpose() const;
  Mat Block(std::size_t r0, std::size_t c0, std::size_t nr,
            std::size_t nc) const;
  void SetBlock(std::size_t r0, std::size_t c0, const Mat& block);
  // (A + A^T) / 2.
  Mat Symmetrized() const;

  double FrobeniusNorm() const;
  double MaxAbs() const;
  double Trace() const;
  bool AllFinite() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator-(Mat a);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Vec operator*(const Mat& a, std::span<const double> v);

// Builds [[a, b], [c, d]] from four blocks with compatible shapes.
Mat BlockMatrix(const Mat& a, const Mat& b, const Mat& c, const Mat& d);

// Symmetric positive definite matrix. Symmetry and strict positivity of
// every eigenvalue are checked on construction.
class SpdMat {
 public:
  explicit SpdMat(Mat m, const Tolerances& tol = Tolerances{});

  std::size_t dim() const { return m_.rows(); }
  const Mat& mat() const { return m_; }
  operator const Mat&() const { return m_; }  // NOLINT

 private:
  Mat m_;
};

// Vector / induced norm selector: 1, 2, infinity or |x|_P = sqrt(x^T P x).
class NormTag {
 public:
  enum class Kind { kOne, kTwo, kInf, kWeighted };

  static NormTag One() { return NormTag(Kind::kOne); }
  static NormTag Two() { return NormTag(Kind::kTwo); }
  static NormTag Inf() { return NormTag(Kind::kInf); }
  static NormTag Weighted(SpdMat p) { return NormTag(std::move(p)); }

  Kind kind() const { return kind_; }
  // Only meaningful for kWeighted.
  const SpdMat& weight() const;
  const char* name() const;

 private:
  explicit NormTag(Kind k) : kind_(k) {}
  explicit NormTag(SpdMat p) : kind_(Kind::kWeighted), weight_(std::move(p)) {}

  Kind kind_;
  std::optional<SpdMat> weight_;
};

struct SymEig {
  Vec values;  // ascending
  Mat vectors;  // columns are the matching orthonormal eigenvectors
};

double VecNorm(std::span<const double> v, const NormTag& tag);
double InducedNorm(const Mat& a, const NormTag& tag,
                   const Tolerances& tol = Tolerances{});
// Operator norm of A : (R^cols, in) -> (R^rows, out), i.e.
// sup |A v|_out / |v|_in. Exact for a single column, for a 1-norm input, for
// an infinity-norm output, and whenever both sides are 2- or P-norms; other
// pairings are NP-hard in general and throw InvalidArgument.
double InducedNorm(const Mat& a, const NormTag& out, const NormTag& in,
                   const Tolerances& tol = Tolerances{});

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymEig SymmetricEigen(const Mat& s, const Tolerances& tol = Tolerances{});
double MinEigenvalue(const Mat& s, const Tolerances& tol = Tolerances{});
double MaxEigenvalue(const Mat& s, const Tolerances& tol = Tolerances{});

// Symmetric positive definite square root D with D * D = P.
Mat SpdSqrt(const SpdMat& p, const Tolerances& tol = Tolerances{});

// Lower Cholesky factor of a symmetric matrix; nullopt when the matrix is
// not numerically positive definite.
std::optional<Mat> Cholesky(const Mat& s);
// Solves S x = b given the Cholesky factor of S.
Vec CholeskySolve(const Mat& chol, std::span<const double> b);
// Inverse of an SPD matrix via Cholesky; throws NumericalError otherwise.
Mat SpdInverse(const Mat& s);
// General inverse via Gauss-Jordan with partial pivoting.
Mat Inverse(const Mat& a);
// Solves A x = B (B may have several columns) with partial pivoting.
Mat Solve(const Mat& a, const Mat& b);

}  // namespace dpobs

#endif  // DPOBS_MATRIX_H_
