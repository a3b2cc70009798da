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


#include "dpobs/synthesis.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace dpobs {

namespace {

// Layout of the decision vector: upper triangle of P (row by row), X row
// major, then g1 and g2.
struct Layout {
  std::size_t n = 0;
  std::size_t m = 0;

  std::size_t p_count() const { return n * (n + 1) / 2; }
  std::size_t x_count() const { return n * m; }
  std::size_t g1() const { return p_count() + x_count(); }
  std::size_t g2() const { return g1() + 1; }
  std::size_t size() const { return g2() + 1; }

  SynthesisPoint Unpack(std::span<const double> v) const {
    SynthesisPoint pt{Mat(n, n), Mat(n, m), 0.0, 0.0};
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j, ++k) {
        pt.P(i, j) = v[k];
        pt.P(j, i) = v[k];
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j, ++k) pt.X(i, j) = v[k];
    if (v.size() > g1()) pt.g1 = v[g1()];
    if (v.size() > g2()) pt.g2 = v[g2()];
    return pt;
  }

  Vec Pack(const SynthesisPoint& pt) const {
    Vec v;
    v.reserve(size());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) v.push_back(pt.P(i, j));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) v.push_back(pt.X(i, j));
    v.push_back(pt.g1);
    v.push_back(pt.g2);
    return v;
  }
};

// F(v) = F0 + sum_i v_i F_i with k x k symmetric blocks stored flat.
struct AffineLmi {
  std::string name;
  std::size_t k = 0;
  std::vector<double> f0;
  std::vector<double> coeffs;  // n_vars blocks of k*k

  std::size_t n_vars() const { return coeffs.size() / (k * k); }
};

using Assembler = std::function<Mat(const SynthesisPoint&)>;

// Extracts the affine representation of `assemble` by probing it at the
// origin and at every unit vector of the first `n_vars` coordinates.
AffineLmi MakeAffine(std::string name, const Layout& layout,
                     std::size_t n_vars, const Assembler& assemble) {
  Vec v(layout.size(), 0.0);
  const Mat base = assemble(layout.Unpack(v));
  AffineLmi lmi{std::move(name), base.rows(), base.data(), {}};
  lmi.coeffs.reserve(n_vars * lmi.k * lmi.k);
  for (std::size_t i = 0; i < n_vars; ++i) {
    std::fill(v.begin(), v.end(), 0.0);
    v[i] = 1.0;
    const Mat probe = assemble(layout.Unpack(v));
    for (std::size_t e = 0; e < probe.data().size(); ++e) {
      lmi.coeffs.push_back(probe.data()[e] - base.data()[e]);
    }
  }
  return lmi;
}

// Appends a variable whose coefficient is `scale` * I (or 0).
void AppendVariable(AffineLmi& lmi, double scale) {
  for (std::size_t r = 0; r < lmi.k; ++r)
    for (std::size_t c = 0; c < lmi.k; ++c)
      lmi.coeffs.push_back(r == c ? scale : 0.0);
}

// Small dense helpers on flat row-major k x k arrays.
void Evaluate(const AffineLmi& lmi, std::span<const double> v, double* out) {
  const std::size_t kk = lmi.k * lmi.k;
  std::copy(lmi.f0.begin(), lmi.f0.end(), out);
  for (std::size_t i = 0; i < lmi.n_vars(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const double* fi = lmi.coeffs.data() + i * kk;
    for (std::size_t e = 0; e < kk; ++e) out[e] += vi * fi[e];
  }
}

// In-place lower Cholesky; false if not positive definite.
bool CholeskyFlat(double* a, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) {
    double d = a[j * k + j];
    for (std::size_t p = 0; p < j; ++p) d -= a[j * k + p] * a[j * k + p];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * k + j] = ljj;
    for (std::size_t i = j + 1; i < k; ++i) {
      double x = a[i * k + j];
      for (std::size_t p = 0; p < j; ++p) x -= a[i * k + p] * a[j * k + p];
      a[i * k + j] = x / ljj;
    }
  }
  return true;
}

double LogDetFromCholesky(const double* l, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(l[i * k + i]);
  return 2.0 * s;
}

// Inverse from a lower Cholesky factor.
void InverseFromCholesky(const double* l, std::size_t k, double* inv) {
  // Solve L L^T X = I column by column.
  std::vector<double> y(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      double x = (i == c) ? 1.0 : 0.0;
      for (std::size_t p = 0; p < i; ++p) x -= l[i * k + p] * y[p];
      y[i] = x / l[i * k + i];
    }
    for (std::size_t ii = k; ii-- > 0;) {
      double x = y[ii];
      for (std::size_t p = ii + 1; p < k; ++p) x -= l[p * k + ii] * y[p];
      y[ii] = x / l[ii * k + ii];
    }
    for (std::size_t i = 0; i < k; ++i) inv[i * k + c] = y[i];
  }
}

// Smallest eigenvalue by bisection on the Cholesky test F - tau I > 0.
double MinEigenByBisection(const double* f, std::size_t k) {
  double bound = 0.0;
  for (std::size_t e = 0; e < k * k; ++e) bound += f[e] * f[e];
  bound = std::sqrt(bound) + 1e-300;
  double lo = -bound;
  double hi = bound;
  std::vector<double> work(k * k);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    std::copy(f, f + k * k, work.begin());
    for (std::size_t i = 0; i < k; ++i) work[i * k + i] -= mid;
    if (CholeskyFlat(work.data(), k)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

class Barrier {
 public:
  Barrier(std::vector<AffineLmi> lmis, std::size_t n_vars)
      : lmis_(std::move(lmis)), n_vars_(n_vars) {
    for (const auto& l : lmis_) {
      degree_ += l.k;
      max_k_ = std::max(max_k_, l.k);
    }
  }

  std::size_t degree() const { return degree_; }
  const std::vector<AffineLmi>& lmis() const { return lmis_; }

  // Per-constraint log det; false if any block is not positive definite.
  bool LogDets(std::span<const double> v, std::vector<double>& out) const {
    out.resize(lmis_.size());
    std::vector<double> f(max_k_ * max_k_);
    for (std::size_t j = 0; j < lmis_.size(); ++j) {
      const auto& lmi = lmis_[j];
      Evaluate(lmi, v, f.data());
      if (!CholeskyFlat(f.data(), lmi.k)) return false;
      out[j] = LogDetFromCholesky(f.data(), lmi.k);
    }
    return true;
  }

  // Gradient and Hessian of -sum log det F_j(v). False if infeasible.
  bool Derivatives(std::span<const double> v, Vec& grad, Vec& hess) const {
    const std::size_t d = n_vars_;
    grad.assign(d, 0.0);
    hess.assign(d * d, 0.0);
    std::vector<double> f(max_k_ * max_k_);
    std::vector<double> inv(max_k_ * max_k_);
    std::vector<double> m(d * max_k_ * max_k_);
    for (const auto& lmi : lmis_) {
      const std::size_t k = lmi.k;
      const std::size_t kk = k * k;
      Evaluate(lmi, v, f.data());
      if (!CholeskyFlat(f.data(), k)) return false;
      InverseFromCholesky(f.data(), k, inv.data());
      // M_i = F^{-1} F_i
      std::vector<bool> active(d, false);
      for (std::size_t i = 0; i < d; ++i) {
        const double* fi = lmi.coeffs.data() + i * kk;
        bool nonzero = false;
        for (std::size_t e = 0; e < kk && !nonzero; ++e) nonzero = fi[e] != 0.0;
        if (!nonzero) continue;
        active[i] = true;
        double* mi = m.data() + i * kk;
        for (std::size_t r = 0; r < k; ++r)
          for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p)
              acc += inv[r * k + p] * fi[p * k + c];
            mi[r * k + c] = acc;
          }
        double tr = 0.0;
        for (std::size_t r = 0; r < k; ++r) tr += mi[r * k + r];
        grad[i] -= tr;
      }
      for (std::size_t i = 0; i < d; ++i) {
        if (!active[i]) continue;
        const double* mi = m.data() + i * kk;
        for (std::size_t j = i; j < d; ++j) {
          if (!active[j]) continue;
          const double* mj = m.data() + j * kk;
          double acc = 0.0;
          for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < k; ++c)
              acc += mi[r * k + c] * mj[c * k + r];
          hess[i * d + j] += acc;
        }
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j) hess[i * d + j] = hess[j * d + i];
    return true;
  }

  // Smallest eigenvalue over all blocks and the index attaining it.
  std::pair<double, std::size_t> MinMargin(std::span<const double> v) const {
    std::vector<double> f(max_k_ * max_k_);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < lmis_.size(); ++j) {
      Evaluate(lmis_[j], v, f.data());
      const double e = MinEigenByBisection(f.data(), lmis_[j].k);
      if (e < best) {
        best = e;
        arg = j;
      }
    }
    return {best, arg};
  }

 private:
  std::vector<AffineLmi> lmis_;
  std::size_t n_vars_;
  std::size_t degree_ = 0;
  std::size_t max_k_ = 0;
};

struct CenteringResult {
  int steps = 0;
  bool centered = false;
  bool regularized = false;
  bool stopped_early = false;
};

// Newton's method on t * cost^T v - sum log det F_j(v), from a strictly
// feasible v. `stop` is polled after every accepted step.
CenteringResult Center(const Barrier& barrier, std::span<const double> cost,
                       double t, Vec& v, const SolverOptions& options,
                       const std::function<bool(const Vec&)>& stop) {
  const std::size_t d = v.size();
  CenteringResult out;
  Vec grad;
  Vec hess;
  std::vector<double> ld_old;
  std::vector<double> ld_new;
  barrier.LogDets(v, ld_old);
  for (int it = 0; it < options.max_newton_steps; ++it) {
    if (!barrier.Derivatives(v, grad, hess)) {
      throw NumericalError("barrier iterate lost strict feasibility");
    }
    for (std::size_t i = 0; i < d; ++i) grad[i] += t * cost[i];

    Mat h(d, d, hess);
    std::optional<Mat> chol = Cholesky(h);
    double shift = 0.0;
    double diag_max = 0.0;
    for (std::size_t i = 0; i < d; ++i) diag_max = std::max(diag_max, h(i, i));
    while (!chol) {
      shift = shift == 0.0 ? options.hessian_regularization *
                                 std::max(diag_max, 1.0)
                           : shift * 10.0;
      Mat hr = h;
      for (std::size_t i = 0; i < d; ++i) hr(i, i) += shift;
      chol = Cholesky(hr);
      out.regularized = true;
      if (shift > 1e6 * std::max(diag_max, 1.0)) {
        throw NumericalError("Newton system cannot be regularized");
      }
    }
    Vec step = CholeskySolve(*chol, grad);
    for (double& s : step) s = -s;
    double decrement = 0.0;
    for (std::size_t i = 0; i < d; ++i) decrement -= grad[i] * step[i];
    if (decrement / 2.0 <= 1e-10) {
      out.centered = true;
      return out;
    }

    double cost_dir = 0.0;
    for (std::size_t i = 0; i < d; ++i) cost_dir += cost[i] * step[i];
    double size = 1.0;
    Vec trial(d);
    bool accepted = false;
    while (size > 1e-14) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = v[i] + size * step[i];
      if (barrier.LogDets(trial, ld_new)) {
        double change = t * size * cost_dir;
        for (std::size_t j = 0; j < ld_new.size(); ++j)
          change -= ld_new[j] - ld_old[j];
        if (change <= -0.25 * size * decrement ||
            (decrement < 1e-6 && change <= 1e-12)) {
          accepted = true;
          break;
        }
      }
      size *= 0.5;
    }
    if (!accepted) {
      // No measurable progress left at this precision.
      out.centered = decrement < 1e-4;
      return out;
    }
    v = trial;
    std::swap(ld_old, ld_new);
    ++out.steps;
    if (stop && stop(v)) {
      out.stopped_early = true;
      return out;
    }
  }
  return out;
}

std::vector<AffineLmi> ContractionLmis(const SynthesisProblem& problem,
                                       const Layout& layout) {
  const double coef = LmiCoefficient(problem.beta, problem.convention);
  const std::size_t pv = layout.p_count() + layout.x_count();
  std::vector<AffineLmi> out;
  out.reserve(problem.jacobian_samples.size());
  for (std::size_t j = 0; j < problem.jacobian_samples.size(); ++j) {
    const Mat& jac = problem.jacobian_samples[j];
    out.push_back(MakeAffine(
        "contraction[" + std::to_string(j) + "]", layout, pv,
        [&](const SynthesisPoint& pt) {
          return AssembleContractionLmi(jac, pt.P, pt.X, problem.c_obs, coef);
        }));
  }
  return out;
}

double MinMarginOf(const Mat& m) {
  return MinEigenByBisection(m.data().data(), m.rows());
}

std::string DescribeConstraint(const SynthesisProblem& problem,
                               const std::string& name, std::size_t index) {
  if (index < problem.sample_points.size() &&
      name.rfind("contraction", 0) == 0) {
    std::string s = name + " at x = (";
    const Vec& x = problem.sample_points[index];
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(x[i]);
    }
    return s + ")";
  }
  return name;
}

}  // namespace

void SynthesisProblem::Validate() const {
  if (jacobian_samples.empty()) {
    throw InvalidArgument("synthesis needs at least one Jacobian sample");
  }
  const std::size_t n = state_dim();
  if (n == 0 || output_dim() == 0) {
    throw DimensionError("observation matrix must be nonempty");
  }
  for (const Mat& j : jacobian_samples) {
    if (j.rows() != n || j.cols() != n) {
      throw DimensionError("Jacobian samples must be n x n with n = cols(C)");
    }
    if (!j.AllFinite()) throw InvalidArgument("non-finite Jacobian sample");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidArgument("beta must lie in (0, 1)");
  }
  if (!(c > 0.0)) throw InvalidArgument("objective weight c must be positive");
  if (!(c_prime >= 0.0)) throw InvalidArgument("c' must be nonnegative");
}

Mat AssembleContractionLmi(const Mat& jac, const Mat& p, const Mat& x,
                           const Mat& c_obs, double coefficient) {
  const std::size_t n = p.rows();
  if (!p.square() || jac.rows() != n || jac.cols() != n ||
      c_obs.cols() != n || x.rows() != n || x.cols() != c_obs.rows()) {
    throw DimensionError("contraction LMI: inconsistent dimensions");
  }
  const Mat xc = x * c_obs;
  const Mat jt = jac.Transpose();
  const Mat top_left =
      p * coefficient - jt * p * jac + jt * xc + xc.Transpose() * jac;
  return BlockMatrix(top_left, xc.Transpose(), xc, p).Symmetrized();
}

Mat AssemblePerf1Lmi(const Mat& x, const Mat& p, double g1) {
  if (!p.square() || x.rows() != p.rows()) {
    throw DimensionError("gain-norm LMI: inconsistent dimensions");
  }
  return BlockMatrix(Mat::Identity(x.cols()) * g1, x.Transpose(), x, p)
      .Symmetrized();
}

Mat AssemblePerf2Lmi(const Mat& p, double g2) {
  if (!p.square()) throw DimensionError("covariance LMI: P must be square");
  const Mat id = Mat::Identity(p.rows());
  return BlockMatrix(id * g2, id, id, p).Symmetrized();
}

namespace {

Phase1Result Phase1Direct(const SynthesisProblem& problem,
                          const SolverOptions& options) {
  const Layout layout{problem.state_dim(), problem.output_dim()};
  const std::size_t n = layout.n;
  const std::size_t pv = layout.p_count() + layout.x_count();
  std::vector<AffineLmi> contraction = ContractionLmis(problem, layout);

  if (!(options.p_trace_bound > 2.0 * n * (problem.c_prime + 1.0))) {
    throw InvalidArgument("p_trace_bound too small for the phase 1 start");
  }

  Phase1Result report;
  auto finish_point = [&](Mat p, const Mat& x) {
    // Homogeneous contraction LMIs: scaling (P, X) up only widens margins.
    const double lam = MinMarginOf(p);
    const double scale =
        std::max(1.0, (problem.c_prime + 1.0) / std::max(lam, 1e-300));
    SynthesisPoint pt{p * scale, x * scale, 0.0, 0.0};
    const Mat p_inv = SpdInverse(pt.P);
    double g1 = MaxEigenvalue((pt.X.Transpose() * p_inv * pt.X).Symmetrized());
    double g2 = MaxEigenvalue(p_inv);
    double pad = 1.0;
    while (MinMarginOf(AssemblePerf1Lmi(pt.X, pt.P, g1 + pad)) <
           options.phase1_margin)
      pad *= 2.0;
    pt.g1 = g1 + pad;
    pad = 1.0;
    while (MinMarginOf(AssemblePerf2Lmi(pt.P, g2 + pad)) <
           options.phase1_margin)
      pad *= 2.0;
    pt.g2 = g2 + pad;
    return pt;
  };

  // Open-loop candidate P = I, X = 0.
  {
    Vec v0 = layout.Pack({Mat::Identity(n), Mat(n, layout.m), 0.0, 0.0});
    const auto [margin, arg] = Barrier(contraction, pv).MinMargin(v0);
    if (margin >= options.phase1_margin) {
      report.feasible = true;
      report.point = finish_point(Mat::Identity(n), Mat(n, layout.m));
      report.min_margin = margin;
      report.binding_constraint =
          DescribeConstraint(problem, contraction[arg].name, arg);
      report.binding_index = arg;
      return report;
    }
  }

  // minimize s  s.t.  contraction_j(P, X) + s I >= 0,  P - I >= 0,
  //                   trace(P) <= p_trace_bound.
  // P >= I fixes the scale of the homogeneous contraction LMIs.
  std::vector<AffineLmi> lmis = contraction;
  for (auto& l : lmis) AppendVariable(l, 1.0);
  {
    AffineLmi lower = MakeAffine("P - I", layout, pv, [&](const SynthesisPoint& pt) {
      return pt.P - Mat::Identity(n);
    });
    AppendVariable(lower, 0.0);
    lmis.push_back(std::move(lower));
    AffineLmi trace = MakeAffine("trace bound", layout, pv,
                                 [&](const SynthesisPoint& pt) {
                                   return Mat{{options.p_trace_bound - pt.P.Trace()}};
                                 });
    AppendVariable(trace, 0.0);
    lmis.push_back(std::move(trace));
  }
  const std::size_t s_index = pv;
  Barrier barrier(std::move(lmis), pv + 1);

  Vec v = layout.Pack({Mat::Identity(n) * 2.0, Mat(n, layout.m), 0.0, 0.0});
  v.resize(pv + 1);
  {
    Vec v_no_s = v;
    v_no_s[s_index] = 0.0;
    const double worst = Barrier(contraction, pv).MinMargin(v_no_s).first;
    v[s_index] = std::max(0.0, -worst) + 1.0;
  }
  Vec cost(pv + 1, 0.0);
  cost[s_index] = 1.0;

  auto feasible_enough = [&](const Vec& x) {
    return x[s_index] < -options.phase1_margin;
  };
  double mu = options.mu_initial;
  bool found = false;
  for (int stage = 0; stage < options.max_stages && !found; ++stage) {
    const CenteringResult c =
        Center(barrier, cost, 1.0 / mu, v, options, feasible_enough);
    report.iterations += c.steps;
    if (c.stopped_early || feasible_enough(v)) {
      found = true;
      break;
    }
    // On the central path s* >= s - degree * mu.
    if (c.centered &&
        v[s_index] - static_cast<double>(barrier.degree()) * mu > 0.0) {
      break;
    }
    mu *= options.mu_factor;
  }

  Vec v_no_s(v.begin(), v.begin() + static_cast<long>(pv));
  const SynthesisPoint raw = layout.Unpack(v_no_s);
  const auto [margin, arg] = Barrier(contraction, pv).MinMargin(v_no_s);
  report.binding_constraint =
      DescribeConstraint(problem, contraction[arg].name, arg);
  report.binding_index = arg;
  report.min_margin = margin;
  if (!found) {
    report.feasible = false;
    report.point = raw;
    return report;
  }
  report.point = finish_point(raw.P, raw.X);
  report.min_margin =
      Barrier(contraction, pv).MinMargin(layout.Pack(report.point)).first;
  report.feasible = report.point.P.Trace() < options.p_trace_bound;
  if (!report.feasible) report.binding_constraint = "trace bound";
  return report;
}

// Phase 2 from a point strictly feasible for every sample of `problem`.
SynthesisResult SolveDirect(const SynthesisProblem& problem,
                            const SynthesisPoint& start,
                            const SolverOptions& options) {
  const Layout layout{problem.state_dim(), problem.output_dim()};
  const std::size_t n = layout.n;
  const std::size_t d = layout.size();

  std::vector<AffineLmi> lmis = ContractionLmis(problem, layout);
  for (auto& l : lmis) {
    AppendVariable(l, 0.0);
    AppendVariable(l, 0.0);
  }
  lmis.push_back(MakeAffine("gain norm", layout, d,
                            [](const SynthesisPoint& pt) {
                              return AssemblePerf1Lmi(pt.X, pt.P, pt.g1);
                            }));
  lmis.push_back(MakeAffine("noise covariance", layout, d,
                            [](const SynthesisPoint& pt) {
                              return AssemblePerf2Lmi(pt.P, pt.g2);
                            }));
  lmis.push_back(MakeAffine("P - c'I", layout, d,
                            [&](const SynthesisPoint& pt) {
                              return pt.P - Mat::Identity(n) * problem.c_prime;
                            }));
  lmis.push_back(MakeAffine("trace bound", layout, d,
                            [&](const SynthesisPoint& pt) {
                              return Mat{{options.p_trace_bound - pt.P.Trace()}};
                            }));
  Barrier barrier(std::move(lmis), d);

  Vec cost(d, 0.0);
  cost[layout.g1()] = 1.0;
  cost[layout.g2()] = problem.c;
  auto objective = [&](const Vec& v) {
    return v[layout.g1()] + problem.c * v[layout.g2()];
  };

  SynthesisResult result;
  Vec v = layout.Pack(start);
  double mu = options.mu_initial;
  const double degree = static_cast<double>(barrier.degree());
  for (int stage = 0; stage < options.max_stages; ++stage) {
    const CenteringResult c = Center(barrier, cost, 1.0 / mu, v, options, {});
    result.iterations += c.steps;
    result.regularized = result.regularized || c.regularized;
    result.stages = stage + 1;
    result.objective_trace.push_back(objective(v));
    result.barrier_gap = degree * mu;
    if (c.centered &&
        result.barrier_gap < options.gap_tolerance * (1.0 + std::abs(objective(v)))) {
      result.converged = true;
      break;
    }
    mu *= options.mu_factor;
  }

  const SynthesisPoint pt = layout.Unpack(v);
  result.P = pt.P;
  result.X = pt.X;
  result.L = Solve(pt.P, pt.X);
  result.g1 = pt.g1;
  result.g2 = pt.g2;
  result.objective = objective(v);
  result.trace_bound_active = pt.P.Trace() > 0.99 * options.p_trace_bound;
  result.min_margin = barrier.MinMargin(v).first;
  return result;
}

}  // namespace

namespace {

SynthesisProblem Subset(const SynthesisProblem& problem,
                        const std::vector<std::size_t>& indices) {
  SynthesisProblem sub = problem;
  sub.jacobian_samples.clear();
  sub.sample_points.clear();
  for (std::size_t i : indices) {
    sub.jacobian_samples.push_back(problem.jacobian_samples[i]);
    if (i < problem.sample_points.size()) {
      sub.sample_points.push_back(problem.sample_points[i]);
    }
  }
  if (sub.sample_points.size() != sub.jacobian_samples.size()) {
    sub.sample_points.clear();
  }
  return sub;
}

// Contraction-block margin of every sample at (P, X), by Cholesky bisection.
Vec SampleMargins(const SynthesisProblem& problem, const Mat& p, const Mat& x) {
  const double coef = LmiCoefficient(problem.beta, problem.convention);
  Vec out;
  out.reserve(problem.jacobian_samples.size());
  for (const Mat& jac : problem.jacobian_samples) {
    out.push_back(MinMarginOf(
        AssembleContractionLmi(jac, p, x, problem.c_obs, coef)));
  }
  return out;
}

// Adds up to `count` samples outside `working` whose margin is below
// `threshold`, most violated first. Returns how many were added.
std::size_t AddCuts(const Vec& margins, double threshold, std::size_t count,
                    std::vector<std::size_t>& working) {
  std::vector<bool> in(margins.size(), false);
  for (std::size_t i : working) in[i] = true;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (!in[i] && margins[i] < threshold) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](std::size_t a, std::size_t b) { return margins[a] < margins[b]; });
  if (candidates.size() > count) candidates.resize(count);
  working.insert(working.end(), candidates.begin(), candidates.end());
  std::sort(working.begin(), working.end());
  return candidates.size();
}

std::vector<std::size_t> InitialWorkingSet(const SynthesisProblem& problem,
                                           const SolverOptions& options) {
  const std::size_t n = problem.state_dim();
  const Vec margins =
      SampleMargins(problem, Mat::Identity(n), Mat(n, problem.output_dim()));
  std::vector<std::size_t> working;
  AddCuts(margins, std::numeric_limits<double>::infinity(),
          std::max<std::size_t>(1, options.initial_working_set), working);
  return working;
}

std::vector<std::size_t> AllSamples(const SynthesisProblem& problem) {
  std::vector<std::size_t> all(problem.jacobian_samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

}  // namespace

Phase1Result SolverPhase1(const SynthesisProblem& problem,
                          const SolverOptions& options) {
  problem.Validate();
  if (!options.constraint_generation) return Phase1Direct(problem, options);
  std::vector<std::size_t> working = InitialWorkingSet(problem, options);
  int iterations = 0;
  for (;;) {
    Phase1Result r = Phase1Direct(Subset(problem, working), options);
    iterations += r.iterations;
    r.iterations = iterations;
    if (!r.feasible) {
      if (r.binding_constraint.rfind("contraction", 0) == 0) {
        r.binding_index = working[r.binding_index];
        r.binding_constraint = DescribeConstraint(
            problem, "contraction[" + std::to_string(r.binding_index) + "]",
            r.binding_index);
      }
      return r;
    }
    const Vec margins = SampleMargins(problem, r.point.P, r.point.X);
    if (AddCuts(margins, options.phase1_margin, options.cuts_per_round,
                working) == 0) {
      const auto worst = std::min_element(margins.begin(), margins.end());
      r.binding_index = static_cast<std::size_t>(worst - margins.begin());
      r.min_margin = *worst;
      r.binding_constraint = DescribeConstraint(
          problem, "contraction[" + std::to_string(r.binding_index) + "]",
          r.binding_index);
      return r;
    }
  }
}

SynthesisResult Synthesize(const SynthesisProblem& problem,
                           const SolverOptions& options) {
  const Phase1Result start = SolverPhase1(problem, options);
  if (!start.feasible) {
    throw InfeasibleError("no strictly feasible point: most violated "
                          "constraint is " + start.binding_constraint,
                          start);
  }
  std::vector<std::size_t> working = options.constraint_generation
                                         ? InitialWorkingSet(problem, options)
                                         : AllSamples(problem);
  int rounds = 0;
  int iterations = 0;
  for (;;) {
    ++rounds;
    SynthesisResult r = SolveDirect(Subset(problem, working), start.point,
                                    options);
    iterations += r.iterations;
    const Vec margins = SampleMargins(problem, r.P, r.X);
    const bool done =
        !options.constraint_generation ||
        AddCuts(margins, -options.cut_tolerance, options.cuts_per_round,
                working) == 0;
    if (done) {
      r.iterations = iterations;
      r.phase1_iterations = start.iterations;
      r.cutting_rounds = rounds;
      r.rate = NormRateFromLmi(
          LmiCoefficient(problem.beta, problem.convention));
      r.working_set_size = working.size();
      r.min_margin =
          std::min(r.min_margin, *std::min_element(margins.begin(), margins.end()));
      return r;
    }
  }
}

Reverification ReverifySynthesis(const SynthesisProblem& problem,
                                 const SynthesisResult& result,
                                 double tolerance) {
  Reverification out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  const double coef = LmiCoefficient(problem.beta, problem.convention);
  auto consider = [&](const Mat& lmi, const std::string& name) {
    const double e = MinEigenvalue(lmi);
    ++out.constraint_count;
    if (e < out.min_eigenvalue) {
      out.min_eigenvalue = e;
      out.binding_constraint = name;
    }
  };
  for (std::size_t j = 0; j < problem.jacobian_samples.size(); ++j) {
    consider(AssembleContractionLmi(problem.jacobian_samples[j], result.P,
                                    result.X, problem.c_obs, coef),
             DescribeConstraint(problem,
                                "contraction[" + std::to_string(j) + "]", j));
  }
  consider(AssemblePerf1Lmi(result.X, result.P, result.g1), "gain norm");
  consider(AssemblePerf2Lmi(result.P, result.g2), "noise covariance");
  consider((result.P - Mat::Identity(result.P.rows()) * problem.c_prime)
               .Symmetrized(),
           "P - c'I");
  const Mat p_inv = Inverse(result.P).Symmetrized();
  out.gain_norm_sq =
      MaxEigenvalue((result.X.Transpose() * p_inv * result.X).Symmetrized());
  out.inverse_p_max = MaxEigenvalue(p_inv);
  out.passed = out.min_eigenvalue >= -tolerance;
  return out;
}

}  // namespace dpobs
