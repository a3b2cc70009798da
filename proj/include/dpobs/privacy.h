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


// Adjacency relation, sensitivity bounds and Laplace / Gaussian noise
// calibration for signals whose adjacent pairs differ by a geometrically
// decaying deviation |y_k - y'_k| <= K alpha^(k - k0), k >= k0.

#ifndef DPOBS_PRIVACY_H_
#define DPOBS_PRIVACY_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dpobs/matrix.h"

namespace dpobs {

struct AdjacencyParams {
  double K = 1.0;      // initial deviation bound, units of the input signal
  double alpha = 0.0;  // geometric decay rate in [0, 1)
  NormTag input_norm = NormTag::One();

  void Validate() const;
};

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 0.0;  // in [0, 0.5]

  // Test sentinel meaning "publish without noise" (epsilon = +inf). Validate()
  // rejects it; only the simulation pipelines accept it.
  static PrivacyBudget NoiseFree() {
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  bool noise_free() const { return std::isinf(epsilon) && epsilon > 0.0; }

  void Validate() const;
};

struct SensitivityBound {
  int p = 1;  // 1 or 2
  double value = 0.0;
};

// Output-perturbation sensitivity of a contracting observer, with the cascade
// parameters it was derived from.
struct ObserverSensitivity {
  SensitivityBound bound;
  double gamma = 0.0;
  double rho = 0.0;
};

class NoiseCalibration {
 public:
  enum class Kind { kLaplace, kGaussian };

  // Independent Laplace(b) noise on every coordinate.
  static NoiseCalibration Laplace(double b, PrivacyBudget budget,
                                  SensitivityBound sensitivity);
  // Gaussian white noise with covariance sigma^2 * shape^{-1}.
  static NoiseCalibration Gaussian(double sigma, SpdMat shape,
                                   PrivacyBudget budget,
                                   SensitivityBound sensitivity);

  Kind kind() const { return kind_; }
  // b for Laplace, sigma for Gaussian.
  double scale() const { return scale_; }
  const std::optional<SpdMat>& shape() const { return shape_; }
  const PrivacyBudget& budget() const { return budget_; }
  const SensitivityBound& sensitivity() const { return sensitivity_; }
  // sigma^2 * shape^{-1}; Gaussian only.
  Mat Covariance() const;

  // Cascade parameters, present when the calibration came from an observer.
  std::optional<double> gamma;
  std::optional<double> rho;

 private:
  NoiseCalibration(Kind kind, double scale, std::optional<SpdMat> shape,
                   PrivacyBudget budget, SensitivityBound sensitivity);

  Kind kind_;
  double scale_;
  std::optional<SpdMat> shape_;
  PrivacyBudget budget_;
  SensitivityBound sensitivity_;
};

// Standard Gaussian tail probability Q(x) = P(N(0,1) > x).
double QFunction(double x);
// Inverse of QFunction on (0, 1), by bisection on [-10, 10].
double QInverse(double delta);
// Gaussian mechanism constant (Q^{-1}(d) + sqrt(Q^{-1}(d)^2 + 2 eps)) / 2eps.
// Requires delta > 0.
double Kappa(const PrivacyBudget& budget);

// l1 / l2 sensitivity of the identity map: K/(1-alpha), K/sqrt(1-alpha^2).
// The adjacency input norm must be the matching 1- or 2-norm.
SensitivityBound IdentitySensitivity(const AdjacencyParams& adj, int p);

// gamma = max(alpha + k_prime / rho, beta).
double CascadeGamma(double k_prime, double alpha, double beta, double rho);

// rho = k_prime / (beta - alpha), which makes gamma == beta. Requires
// beta > alpha.
double DefaultRho(double k_prime, double alpha, double beta);

// Sum over k of rho (gamma^k - alpha^k): rho (1/(1-gamma) - 1/(1-alpha)).
ObserverSensitivity ObserverL1Sensitivity(double k_prime, double alpha,
                                          double beta, double rho);
// rho * B with B^2 = sum_k (gamma^k - alpha^k)^2 in closed form.
ObserverSensitivity ObserverL2Sensitivity(double k_prime, double alpha,
                                          double beta, double rho);
// B = sqrt(1/(1-g^2) - 2/(1-g a) + 1/(1-a^2)).
double GaussianFactor(double gamma, double alpha);

// Golden-section search for the rho minimising the p-sensitivity over
// (k_prime/(1-alpha), 10 * DefaultRho). Off by default in the calibration
// helpers; offered for exploration.
double OptimizeRho(double k_prime, double alpha, double beta, int p);

NoiseCalibration CalibrateLaplace(const SensitivityBound& delta1,
                                  const PrivacyBudget& budget);
NoiseCalibration CalibrateGaussian(const SensitivityBound& delta2,
                                   const PrivacyBudget& budget,
                                   const SpdMat& shape);

// Seeded sampler for a calibrated noise process. Laplace coordinates come
// from the inverse CDF; Gaussian vectors are D^{-1} zeta with zeta ~
// N(0, sigma^2 I) and D the square root of the shape matrix. Not thread
// safe; use one instance per thread.
class NoiseSampler {
 public:
  NoiseSampler(const NoiseCalibration& cal, std::size_t dim,
               std::uint64_t seed);

  Vec Next();
  std::vector<Vec> Sample(std::size_t n_steps);

 private:
  double OpenUniform();

  NoiseCalibration::Kind kind_;
  double scale_;
  std::size_t dim_;
  Mat sqrt_inv_;  // D^{-1}, Gaussian only
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::vector<Vec> SampleNoise(const NoiseCalibration& cal, std::size_t dim,
                             std::uint64_t seed, std::size_t n_steps);

struct BiasEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

// Input perturbation through y -> y^2: average of (y_k + K xi)^2 - y_k^2 over
// n_trials standard Gaussian draws, cycling through y. Converges to K^2.
BiasEstimate SquaringBiasDemo(double K, std::span<const double> y,
                              std::uint64_t seed, std::size_t n_trials);

}  // namespace dpobs

#endif  // DPOBS_PRIVACY_H_
