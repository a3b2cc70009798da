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


#include "dpobs/privacy.h"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace dpobs {

namespace {

void RequireRate(double rate, const char* name) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvalidArgument(std::string(name) + " must lie in [0, 1)");
  }
}

void CheckCascadeInputs(double k_prime, double alpha, double beta,
                        double rho) {
  if (!(k_prime >= 0.0)) throw InvalidArgument("K' must be nonnegative");
  RequireRate(alpha, "alpha");
  RequireRate(beta, "beta");
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
}

}  // namespace

void AdjacencyParams::Validate() const {
  if (!(K > 0.0) || !std::isfinite(K)) {
    throw InvalidArgument("adjacency bound K must be positive");
  }
  RequireRate(alpha, "adjacency decay alpha");
}

void PrivacyBudget::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive");
  }
  if (!(delta >= 0.0 && delta <= 0.5)) {
    throw InvalidArgument("delta must lie in [0, 0.5]");
  }
}

NoiseCalibration::NoiseCalibration(Kind kind, double scale,
                                   std::optional<SpdMat> shape,
                                   PrivacyBudget budget,
                                   SensitivityBound sensitivity)
    : kind_(kind),
      scale_(scale),
      shape_(std::move(shape)),
      budget_(budget),
      sensitivity_(sensitivity) {
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw InvalidArgument("noise scale must be positive and finite");
  }
}

NoiseCalibration NoiseCalibration::Laplace(double b, PrivacyBudget budget,
                                           SensitivityBound sensitivity) {
  return NoiseCalibration(Kind::kLaplace, b, std::nullopt, budget,
                          sensitivity);
}

NoiseCalibration NoiseCalibration::Gaussian(double sigma, SpdMat shape,
                                            PrivacyBudget budget,
                                            SensitivityBound sensitivity) {
  return NoiseCalibration(Kind::kGaussian, sigma, std::move(shape), budget,
                          sensitivity);
}

Mat NoiseCalibration::Covariance() const {
  if (kind_ != Kind::kGaussian) {
    throw InvalidArgument("covariance is defined for Gaussian noise only");
  }
  return SpdInverse(shape_->mat()) * (scale_ * scale_);
}

double QFunction(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double QInverse(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("Q^{-1} needs delta in (0, 1)");
  }
  double lo = -10.0;
  double hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    // Q is decreasing.
    if (QFunction(mid) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double Kappa(const PrivacyBudget& budget) {
  budget.Validate();
  if (budget.delta == 0.0) {
    throw InvalidArgument(
        "kappa is undefined for delta = 0; use the Laplace mechanism");
  }
  const double q = QInverse(budget.delta);
  const double eps = budget.epsilon;
  return (q + std::sqrt(q * q + 2.0 * eps)) / (2.0 * eps);
}

SensitivityBound IdentitySensitivity(const AdjacencyParams& adj, int p) {
  adj.Validate();
  if (p == 1) {
    if (adj.input_norm.kind() != NormTag::Kind::kOne) {
      throw InvalidArgument("l1 sensitivity pairs with a 1-norm on inputs");
    }
    return {1, adj.K / (1.0 - adj.alpha)};
  }
  if (p == 2) {
    if (adj.input_norm.kind() != NormTag::Kind::kTwo) {
      throw InvalidArgument("l2 sensitivity pairs with a 2-norm on inputs");
    }
    return {2, adj.K / std::sqrt(1.0 - adj.alpha * adj.alpha)};
  }
  throw InvalidArgument("sensitivity order must be 1 or 2");
}

double CascadeGamma(double k_prime, double alpha, double beta, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  return std::max(alpha + k_prime / rho, beta);
}

double DefaultRho(double k_prime, double alpha, double beta) {
  if (!(beta > alpha)) {
    throw InvalidArgument(
        "default rho needs beta > alpha; supply rho explicitly");
  }
  return k_prime / (beta - alpha);
}

ObserverSensitivity ObserverL1Sensitivity(double k_prime, double alpha,
                                          double beta, double rho) {
  CheckCascadeInputs(k_prime, alpha, beta, rho);
  const double gamma = CascadeGamma(k_prime, alpha, beta, rho);
  if (!(gamma < 1.0)) {
    throw InvalidArgument("gamma >= 1: sensitivity bound diverges; increase "
                          "rho or reduce the gain");
  }
  const double value = rho * (1.0 / (1.0 - gamma) - 1.0 / (1.0 - alpha));
  return {{1, value}, gamma, rho};
}

double GaussianFactor(double gamma, double alpha) {
  RequireRate(gamma, "gamma");
  RequireRate(alpha, "alpha");
  const double b2 = 1.0 / (1.0 - gamma * gamma) -
                    2.0 / (1.0 - gamma * alpha) +
                    1.0 / (1.0 - alpha * alpha);
  return std::sqrt(std::max(b2, 0.0));
}

ObserverSensitivity ObserverL2Sensitivity(double k_prime, double alpha,
                                          double beta, double rho) {
  CheckCascadeInputs(k_prime, alpha, beta, rho);
  const double gamma = CascadeGamma(k_prime, alpha, beta, rho);
  if (!(gamma < 1.0)) {
    throw InvalidArgument("gamma >= 1: sensitivity bound diverges; increase "
                          "rho or reduce the gain");
  }
  return {{2, rho * GaussianFactor(gamma, alpha)}, gamma, rho};
}

double OptimizeRho(double k_prime, double alpha, double beta, int p) {
  if (!(k_prime > 0.0)) throw InvalidArgument("K' must be positive");
  if (p != 1 && p != 2) throw InvalidArgument("p must be 1 or 2");
  const double lo = k_prime / (1.0 - alpha);
  const double hi = 10.0 * DefaultRho(k_prime, alpha, beta);
  auto cost = [&](double rho) {
    return p == 1 ? ObserverL1Sensitivity(k_prime, alpha, beta, rho).bound.value
                  : ObserverL2Sensitivity(k_prime, alpha, beta, rho).bound.value;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = cost(c);
  double fd = cost(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * hi; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = cost(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = cost(d);
    }
  }
  return 0.5 * (a + b);
}

NoiseCalibration CalibrateLaplace(const SensitivityBound& delta1,
                                  const PrivacyBudget& budget) {
  budget.Validate();
  if (delta1.p != 1) throw InvalidArgument("Laplace needs an l1 sensitivity");
  if (budget.delta != 0.0) {
    throw InvalidArgument("the Laplace mechanism is calibrated for delta = 0");
  }
  if (!(delta1.value > 0.0)) {
    throw InvalidArgument(
        "zero sensitivity: refusing to publish without noise");
  }
  return NoiseCalibration::Laplace(delta1.value / budget.epsilon, budget,
                                   delta1);
}

NoiseCalibration CalibrateGaussian(const SensitivityBound& delta2,
                                   const PrivacyBudget& budget,
                                   const SpdMat& shape) {
  budget.Validate();
  if (delta2.p != 2) throw InvalidArgument("Gaussian needs an l2 sensitivity");
  if (budget.delta == 0.0) {
    throw InvalidArgument("the Gaussian mechanism needs delta > 0");
  }
  if (!(delta2.value > 0.0)) {
    throw InvalidArgument(
        "zero sensitivity: refusing to publish without noise");
  }
  return NoiseCalibration::Gaussian(Kappa(budget) * delta2.value, shape,
                                    budget, delta2);
}

NoiseSampler::NoiseSampler(const NoiseCalibration& cal, std::size_t dim,
                           std::uint64_t seed)
    : kind_(cal.kind()), scale_(cal.scale()), dim_(dim), rng_(seed) {
  if (dim == 0) throw InvalidArgument("noise dimension must be positive");
  if (kind_ == NoiseCalibration::Kind::kGaussian) {
    if (cal.shape()->dim() != dim) {
      throw DimensionError("Gaussian shape does not match noise dimension");
    }
    sqrt_inv_ = SpdInverse(SpdSqrt(*cal.shape()));
  }
}

double NoiseSampler::OpenUniform() {
  return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
}

Vec NoiseSampler::Next() {
  Vec out(dim_);
  if (kind_ == NoiseCalibration::Kind::kLaplace) {
    for (double& x : out) {
      const double u = OpenUniform();
      x = u < 0.5 ? scale_ * std::log(2.0 * u)
                  : -scale_ * std::log(2.0 * (1.0 - u));
    }
    return out;
  }
  Vec zeta(dim_);
  for (double& z : zeta) z = scale_ * normal_(rng_);
  return sqrt_inv_ * zeta;
}

std::vector<Vec> NoiseSampler::Sample(std::size_t n_steps) {
  std::vector<Vec> out;
  out.reserve(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) out.push_back(Next());
  return out;
}

std::vector<Vec> SampleNoise(const NoiseCalibration& cal, std::size_t dim,
                             std::uint64_t seed, std::size_t n_steps) {
  NoiseSampler sampler(cal, dim, seed);
  return sampler.Sample(n_steps);
}

BiasEstimate SquaringBiasDemo(double K, std::span<const double> y,
                              std::uint64_t seed, std::size_t n_trials) {
  if (!(K >= 0.0)) throw InvalidArgument("K must be nonnegative");
  if (y.empty()) throw InvalidArgument("empty input signal");
  if (n_trials == 0) throw InvalidArgument("need at least one trial");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const double yk = y[t % y.size()];
    const double noisy = yk + K * normal(rng);
    const double err = noisy * noisy - yk * yk;
    sum += err;
    sum_sq += err * err;
  }
  const double n = static_cast<double>(n_trials);
  const double mean = sum / n;
  const double var = n > 1 ? std::max(sum_sq / n - mean * mean, 0.0) * n /
                                 (n - 1)
                           : 0.0;
  return {mean, std::sqrt(var / n), n_trials};
}

}  // namespace dpobs
