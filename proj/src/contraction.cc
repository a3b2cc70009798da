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


#include "dpobs/contraction.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace dpobs {

namespace {

void CheckRate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvalidArgument("contraction rate must lie in [0, 1)");
  }
}

std::vector<int> ResolveHorizon(const JacobianField& jac,
                                const VerifyOptions& options) {
  if (!jac.eval) throw InvalidArgument("Jacobian field has no evaluator");
  if (jac.time_invariant) return {0};
  if (options.horizon.empty()) {
    throw InvalidArgument(
        "time-varying Jacobian needs a finite horizon of k values");
  }
  return options.horizon;
}

std::vector<Vec> SampleDomain(const DomainBox& domain, double step) {
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  std::vector<Vec> samples = domain.GridSamples(step);
  if (samples.empty()) throw InvalidArgument("domain is empty");
  return samples;
}

Mat EvalChecked(const JacobianField& jac, const Vec& x, int k) {
  Mat f = jac.eval(x, k);
  if (f.rows() != jac.dim || f.cols() != jac.dim) {
    throw DimensionError("Jacobian has unexpected dimensions");
  }
  if (!f.AllFinite()) {
    throw NumericalError("non-finite Jacobian entry at a domain sample");
  }
  return f;
}

}  // namespace

DomainBox::DomainBox(Vec lower, Vec upper,
                     std::vector<LinearConstraint> constraints)
    : lower_(std::move(lower)),
      upper_(std::move(upper)),
      constraints_(std::move(constraints)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw DimensionError("domain bounds must be nonempty and equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] <= upper_[i])) {
      throw InvalidArgument("domain lower bound exceeds upper bound");
    }
  }
  for (const auto& c : constraints_) {
    if (c.a.size() != lower_.size()) {
      throw DimensionError("linear constraint has the wrong dimension");
    }
  }
}

bool DomainBox::Contains(std::span<const double> x, double tol) const {
  if (x.size() != dim()) throw DimensionError("point has the wrong dimension");
  for (std::size_t i = 0; i < dim(); ++i) {
    if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
  }
  for (const auto& c : constraints_) {
    double lhs = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) lhs += c.a[i] * x[i];
    if (lhs > c.b + tol) return false;
  }
  return true;
}

Vec DomainBox::Center() const {
  Vec c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
  return c;
}

std::vector<Vec> DomainBox::GridSamples(double step) const {
  std::vector<Vec> axes(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double span = upper_[i] - lower_[i];
    const auto n = static_cast<long>(std::floor(span / step + 1e-9));
    for (long k = 0; k <= n; ++k) {
      axes[i].push_back(lower_[i] + static_cast<double>(k) * step);
    }
    const double last = axes[i].back();
    if (upper_[i] - last > 1e-9 * std::max(1.0, std::abs(upper_[i]))) {
      axes[i].push_back(upper_[i]);
    } else {
      axes[i].back() = upper_[i];
    }
  }
  std::vector<Vec> out;
  std::vector<std::size_t> idx(dim(), 0);
  Vec x(dim());
  while (true) {
    for (std::size_t i = 0; i < dim(); ++i) x[i] = axes[i][idx[i]];
    if (Contains(x)) out.push_back(x);
    std::size_t d = dim();
    while (d-- > 0) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

double LmiCoefficient(double rate, RateConvention convention) {
  return convention == RateConvention::kNormBound ? rate * rate : rate;
}

double NormRateFromLmi(double coefficient) {
  if (!(coefficient >= 0.0)) {
    throw InvalidArgument("LMI coefficient must be nonnegative");
  }
  return std::sqrt(coefficient);
}

ContractionCertificate VerifyContraction(const JacobianField& jac,
                                         const DomainBox& domain,
                                         const NormTag& norm, double rate,
                                         const VerifyOptions& options) {
  CheckRate(rate);
  if (jac.dim != domain.dim()) {
    throw DimensionError("Jacobian and domain dimensions differ");
  }
  const std::vector<int> horizon = ResolveHorizon(jac, options);
  const std::vector<Vec> samples = SampleDomain(domain, options.grid_step);

  ContractionCertificate cert;
  cert.check = ContractionCertificate::Check::kInducedNorm;
  cert.norm = norm;
  cert.rate = rate;
  cert.domain = domain;
  cert.grid_step = options.grid_step;
  if (!jac.time_invariant) cert.horizon = horizon;
  cert.worst_value = -std::numeric_limits<double>::infinity();
  for (int k : horizon) {
    for (const Vec& x : samples) {
      const double n = InducedNorm(EvalChecked(jac, x, k), norm);
      ++cert.sample_count;
      if (n > cert.worst_value) {
        cert.worst_value = n;
        cert.binding_point = x;
        cert.binding_k = k;
      }
    }
  }
  cert.margin = rate - cert.worst_value;
  cert.valid = cert.margin >= -options.margin_tolerance;
  return cert;
}

ContractionCertificate VerifyContractionLmi(const JacobianField& jac,
                                            const DomainBox& domain,
                                            const SpdMat& p, double rate,
                                            const VerifyOptions& options) {
  if (!(rate > 0.0 && rate < 1.0)) {
    throw InvalidArgument("LMI contraction rate must lie in (0, 1)");
  }
  if (jac.dim != domain.dim() || jac.dim != p.dim()) {
    throw DimensionError("Jacobian, domain and P dimensions differ");
  }
  const std::vector<int> horizon = ResolveHorizon(jac, options);
  const std::vector<Vec> samples = SampleDomain(domain, options.grid_step);
  const double coef = LmiCoefficient(rate, options.convention);
  const Mat cp = p.mat() * coef;

  ContractionCertificate cert;
  cert.check = ContractionCertificate::Check::kLmi;
  cert.norm = NormTag::Weighted(p);
  cert.rate = rate;
  cert.domain = domain;
  cert.grid_step = options.grid_step;
  cert.convention = options.convention;
  if (!jac.time_invariant) cert.horizon = horizon;
  cert.worst_value = std::numeric_limits<double>::infinity();
  for (int k : horizon) {
    for (const Vec& x : samples) {
      const Mat f = EvalChecked(jac, x, k);
      const Mat lmi = (cp - f.Transpose() * p.mat() * f).Symmetrized();
      const double e = MinEigenvalue(lmi);
      ++cert.sample_count;
      if (e < cert.worst_value) {
        cert.worst_value = e;
        cert.binding_point = x;
        cert.binding_k = k;
      }
    }
  }
  cert.margin = cert.worst_value;
  cert.valid = cert.margin >= -options.margin_tolerance;
  return cert;
}

CascadeBound CascadeRate(double alpha, double beta, double K, double rho) {
  if (!(alpha >= 0.0 && beta >= 0.0 && K >= 0.0)) {
    throw InvalidArgument("cascade rates and coupling must be nonnegative");
  }
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  CascadeBound out{alpha, beta, K, rho, std::max(alpha + K / rho, beta), false};
  out.contracting = out.gamma < 1.0;
  return out;
}

double DivergenceBound(double rho, double gamma, double alpha, int steps,
                       double initial_gap) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(alpha >= 0.0 && alpha <= gamma)) {
    throw InvalidArgument("need 0 <= alpha <= gamma");
  }
  if (steps < 0) throw InvalidArgument("steps must be nonnegative");
  if (!(initial_gap >= 0.0)) throw InvalidArgument("gap must be nonnegative");
  const double gk = std::pow(gamma, steps);
  return rho * (gk - std::pow(alpha, steps)) + gk * initial_gap;
}

double ObserverCouplingGain(std::span<const Mat> schedule,
                            const NormTag& state_norm,
                            const NormTag& output_norm, double k_adj) {
  if (schedule.empty()) throw InvalidArgument("empty gain schedule");
  if (!(k_adj >= 0.0)) throw InvalidArgument("K must be nonnegative");
  double sup = 0.0;
  for (const Mat& l : schedule) {
    if (!l.AllFinite()) throw InvalidArgument("gain has non-finite entries");
    sup = std::max(sup, InducedNorm(l, state_norm, output_norm));
  }
  return k_adj * sup;
}

}  // namespace dpobs
