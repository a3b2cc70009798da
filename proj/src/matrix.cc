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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace dpobs {

namespace {

void RequireSameShape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

void RequireSymmetric(const Mat& s, const Tolerances& tol) {
  if (!s.square()) throw DimensionError("expected a square matrix");
  const double scale = std::max(1.0, s.MaxAbs());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = i + 1; j < s.cols(); ++j) {
      if (std::abs(s(i, j) - s(j, i)) > tol.symmetry * scale) {
        throw InvalidArgument("matrix is not symmetric");
      }
    }
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("entry count does not match rows*cols");
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionError("ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Mat Mat::Identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::Diagonal(std::span<const double> diag) {
  Mat m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Mat Mat::Column(std::span<const double> v) {
  return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Mat Mat::Row(std::span<const double> v) {
  return Mat(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Mat Mat::Transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat Mat::Block(std::size_t r0, std::size_t c0, std::size_t nr,
               std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw DimensionError("block out of range");
  }
  Mat b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Mat::SetBlock(std::size_t r0, std::size_t c0, const Mat& block) {
  if (r0 + block.rows() > rows_ || c0 + block.cols() > cols_) {
    throw DimensionError("block out of range");
  }
  for (std::size_t i = 0; i < block.rows(); ++i)
    for (std::size_t j = 0; j < block.cols(); ++j)
      (*this)(r0 + i, c0 + j) = block(i, j);
}

Mat Mat::Symmetrized() const {
  if (!square()) throw DimensionError("symmetrize needs a square matrix");
  Mat s(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
  return s;
}

double Mat::FrobeniusNorm() const {
  double acc = 0.0;
  for (double x : data_) acc += x * x;
  return std::sqrt(acc);
}

double Mat::MaxAbs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double Mat::Trace() const {
  if (!square()) throw DimensionError("trace needs a square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

bool Mat::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

Mat& Mat::operator+=(const Mat& other) {
  RequireSameShape(*this, other, "operator+");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  RequireSameShape(*this, other, "operator-");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator-(Mat a) { return a *= -1.0; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matrix product: inner dimensions differ");
  }
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vec operator*(const Mat& a, std::span<const double> v) {
  if (a.cols() != v.size()) {
    throw DimensionError("matrix-vector product: dimension mismatch");
  }
  Vec out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * v[j];
  return out;
}

Mat BlockMatrix(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
  if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() ||
      b.cols() != d.cols()) {
    throw DimensionError("incompatible blocks");
  }
  Mat m(a.rows() + c.rows(), a.cols() + b.cols());
  m.SetBlock(0, 0, a);
  m.SetBlock(0, a.cols(), b);
  m.SetBlock(a.rows(), 0, c);
  m.SetBlock(a.rows(), a.cols(), d);
  return m;
}

SpdMat::SpdMat(Mat m, const Tolerances& tol) : m_(std::move(m)) {
  if (m_.empty()) throw DimensionError("empty SPD matrix");
  if (!m_.AllFinite()) throw InvalidArgument("SPD matrix has non-finite entries");
  RequireSymmetric(m_, tol);
  if (!(MinEigenvalue(m_, tol) > 0.0)) {
    throw InvalidArgument("matrix is not positive definite");
  }
}

const SpdMat& NormTag::weight() const {
  if (!weight_) throw InvalidArgument("norm tag carries no weight matrix");
  return *weight_;
}

const char* NormTag::name() const {
  switch (kind_) {
    case Kind::kOne:
      return "one";
    case Kind::kTwo:
      return "two";
    case Kind::kInf:
      return "inf";
    case Kind::kWeighted:
      return "weighted";
  }
  return "?";
}

double VecNorm(std::span<const double> v, const NormTag& tag) {
  switch (tag.kind()) {
    case NormTag::Kind::kOne: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return s;
    }
    case NormTag::Kind::kTwo: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    }
    case NormTag::Kind::kInf: {
      double s = 0.0;
      for (double x : v) s = std::max(s, std::abs(x));
      return s;
    }
    case NormTag::Kind::kWeighted: {
      const Mat& p = tag.weight().mat();
      if (p.rows() != v.size()) {
        throw DimensionError("weighted norm: dimension mismatch");
      }
      const Vec pv = p * v;
      double q = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) q += v[i] * pv[i];
      return std::sqrt(std::max(q, 0.0));
    }
  }
  return 0.0;
}

double InducedNorm(const Mat& a, const NormTag& tag, const Tolerances& tol) {
  if (a.empty()) throw DimensionError("induced norm of an empty matrix");
  switch (tag.kind()) {
    case NormTag::Kind::kOne: {
      double best = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormTag::Kind::kInf: {
      double best = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case NormTag::Kind::kTwo: {
      const Mat ata = (a.Transpose() * a).Symmetrized();
      return std::sqrt(std::max(MaxEigenvalue(ata, tol), 0.0));
    }
    case NormTag::Kind::kWeighted: {
      const SpdMat& p = tag.weight();
      if (!a.square() || a.rows() != p.dim()) {
        throw DimensionError("weighted induced norm needs a square matrix "
                             "matching the weight");
      }
      const Mat d = SpdSqrt(p, tol);
      const Mat d_inv = SpdInverse(d);
      return InducedNorm(d * a * d_inv, NormTag::Two(), tol);
    }
  }
  return 0.0;
}

namespace {

bool IsEuclidean(const NormTag& t) {
  return t.kind() == NormTag::Kind::kTwo ||
         t.kind() == NormTag::Kind::kWeighted;
}

// D with |x|_tag = |D x|_2, for 2- and P-norms.
Mat EuclideanFactor(const NormTag& t, std::size_t n, const Tolerances& tol) {
  if (t.kind() == NormTag::Kind::kTwo) return Mat::Identity(n);
  if (t.weight().dim() != n) throw DimensionError("weight dimension mismatch");
  return SpdSqrt(t.weight(), tol);
}

// Dual norm of a row vector: 1 <-> inf, 2 <-> 2, P <-> P^{-1}.
double DualNorm(std::span<const double> v, const NormTag& t) {
  switch (t.kind()) {
    case NormTag::Kind::kOne:
      return VecNorm(v, NormTag::Inf());
    case NormTag::Kind::kInf:
      return VecNorm(v, NormTag::One());
    case NormTag::Kind::kTwo:
      return VecNorm(v, NormTag::Two());
    case NormTag::Kind::kWeighted:
      return VecNorm(v, NormTag::Weighted(SpdMat(SpdInverse(t.weight()))));
  }
  return 0.0;
}

}  // namespace

double InducedNorm(const Mat& a, const NormTag& out, const NormTag& in,
                   const Tolerances& tol) {
  if (a.empty()) throw DimensionError("induced norm of an empty matrix");
  if (a.cols() == 1) {
    const Vec col = a * Vec{1.0};
    return VecNorm(col, out) / VecNorm(Vec{1.0}, in);
  }
  if (in.kind() == NormTag::Kind::kOne) {
    double best = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      Vec col(a.rows());
      for (std::size_t i = 0; i < a.rows(); ++i) col[i] = a(i, j);
      best = std::max(best, VecNorm(col, out));
    }
    return best;
  }
  if (out.kind() == NormTag::Kind::kInf) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      Vec row(a.cols());
      for (std::size_t j = 0; j < a.cols(); ++j) row[j] = a(i, j);
      best = std::max(best, DualNorm(row, in));
    }
    return best;
  }
  if (IsEuclidean(out) && IsEuclidean(in)) {
    const Mat d_out = EuclideanFactor(out, a.rows(), tol);
    const Mat d_in_inv = SpdInverse(EuclideanFactor(in, a.cols(), tol));
    return InducedNorm(d_out * a * d_in_inv, NormTag::Two(), tol);
  }
  throw InvalidArgument(std::string("unsupported induced norm pairing ") +
                        in.name() + " -> " + out.name());
}

SymEig SymmetricEigen(const Mat& s, const Tolerances& tol) {
  RequireSymmetric(s, tol);
  if (!s.AllFinite()) throw NumericalError("eigensolver: non-finite input");
  const std::size_t n = s.rows();
  Mat a = s.Symmetrized();
  Mat v = Mat::Identity(n);
  const double fro = a.FrobeniusNorm();

  auto off_mass = [&]() {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(off);
  };

  int sweep = 0;
  while (fro > 0.0 && off_mass() > tol.jacobi_off_diagonal * fro) {
    if (sweep++ >= tol.jacobi_max_sweeps) {
      throw NumericalError("Jacobi eigensolver exceeded its sweep cap");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEig out{Vec(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double MinEigenvalue(const Mat& s, const Tolerances& tol) {
  return SymmetricEigen(s, tol).values.front();
}

double MaxEigenvalue(const Mat& s, const Tolerances& tol) {
  return SymmetricEigen(s, tol).values.back();
}

Mat SpdSqrt(const SpdMat& p, const Tolerances& tol) {
  const SymEig eig = SymmetricEigen(p.mat(), tol);
  const std::size_t n = p.dim();
  Mat d(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double root = std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d(i, j) += eig.vectors(i, k) * root * eig.vectors(j, k);
  }
  return d.Symmetrized();
}

std::optional<Mat> Cholesky(const Mat& s) {
  if (!s.square()) throw DimensionError("Cholesky needs a square matrix");
  const std::size_t n = s.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = s(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double x = s(i, j);
      for (std::size_t k = 0; k < j; ++k) x -= l(i, k) * l(j, k);
      l(i, j) = x / ljj;
    }
  }
  return l;
}

Vec CholeskySolve(const Mat& chol, std::span<const double> b) {
  const std::size_t n = chol.rows();
  if (b.size() != n) throw DimensionError("Cholesky solve: dimension mismatch");
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = b[i];
    for (std::size_t k = 0; k < i; ++k) x -= chol(i, k) * y[k];
    y[i] = x / chol(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double x = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) x -= chol(k, ii) * y[k];
    y[ii] = x / chol(ii, ii);
  }
  return y;
}

Mat SpdInverse(const Mat& s) {
  const auto chol = Cholesky(s);
  if (!chol) throw NumericalError("matrix is not positive definite");
  const std::size_t n = s.rows();
  Mat inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const Vec col = CholeskySolve(*chol, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv.Symmetrized();
}

Mat Solve(const Mat& a, const Mat& b) {
  if (!a.square() || a.rows() != b.rows()) {
    throw DimensionError("solve: incompatible shapes");
  }
  const std::size_t n = a.rows();
  Mat lhs = a;
  Mat rhs = b;
  const double scale = std::max(a.MaxAbs(), 1e-300);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(lhs(r, col)) > std::abs(lhs(pivot, col))) pivot = r;
    if (std::abs(lhs(pivot, col)) <= 1e-15 * scale) {
      throw NumericalError("solve: matrix is singular");
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lhs(col, j), lhs(pivot, j));
      for (std::size_t j = 0; j < rhs.cols(); ++j)
        std::swap(rhs(col, j), rhs(pivot, j));
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = lhs(r, col) / lhs(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) lhs(r, j) -= f * lhs(col, j);
      for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(r, j) -= f * rhs(col, j);
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(r, j) /= lhs(r, r);
  return rhs;
}

Mat Inverse(const Mat& a) { return Solve(a, Mat::Identity(a.rows())); }

}  // namespace dpobs
