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


// The generic Luenberger observer z_{k+1} = f_k(z_k) + L_k (y_k - g_k(z_k)),
// the dynamic stochastic blockmodel channel and the discretised SIR model,
// synthetic data, adjacent-signal construction and the end-to-end private
// estimate pipelines.

#ifndef DPOBS_MODELS_H_
#define DPOBS_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpobs/contraction.h"
#include "dpobs/matrix.h"
#include "dpobs/privacy.h"
#include "dpobs/synthesis.h"

namespace dpobs {

using StateMap = std::function<Vec(std::span<const double> x, int k)>;

struct ObserverSpec {
  StateMap dynamics;     // f_k
  StateMap observation;  // g_k
  // One entry for a constant gain, otherwise L_k = gain[k] (the last entry
  // is reused past the end).
  std::vector<Mat> gain;
  DomainBox domain;
  Vec initial_estimate;

  std::size_t state_dim() const { return domain.dim(); }
  const Mat& GainAt(int k) const;
  void Validate() const;
};

struct Simulation {
  std::vector<Vec> z;  // z_0 .. z_n
  // Steps k at which z_k was outside the domain. The state is not clamped.
  std::vector<int> domain_exits;
};

// Iterates the observer on y_0 .. y_{n-1}. Throws NumericalError naming the
// step if the estimate becomes non-finite.
Simulation Simulate(const ObserverSpec& spec, std::span<const Vec> y,
                    std::size_t n_steps);

struct Trajectory {
  std::vector<Vec> x;     // true state
  std::vector<Vec> y;     // measurement
  std::vector<Vec> z;     // estimate
  std::vector<Vec> zhat;  // published estimate z + xi
  std::uint64_t seed = 0;
  // Set when y is one half of an adjacent pair: the deviation y~ - y and the
  // step it starts at.
  std::optional<int> k0;
  std::vector<Vec> deviation;
  std::vector<int> domain_exits;

  std::size_t size() const { return x.size(); }
  // Equal lengths (for the populated signals) and finite entries.
  void Validate() const;
};

// --- adjacent signals -------------------------------------------------------

enum class DeviationShape {
  kRandom,     // random direction, magnitude uniform in [0, envelope]
  kWorstCase,  // +K alpha^(k-k0) on the first coordinate
};

struct AdjacentSignal {
  std::vector<Vec> y_tilde;
  std::vector<Vec> deviation;
  int k0 = 0;
};

// y~_k = y_k before k0 and |y~_k - y_k| <= K alpha^(k-k0) (in adj.input_norm)
// from k0 on. K = 0 is allowed and returns y unchanged.
AdjacentSignal AdjacentPair(std::span<const Vec> y, const AdjacencyParams& adj,
                            int k0, std::uint64_t seed,
                            DeviationShape shape = DeviationShape::kRandom);

// --- dynamic stochastic blockmodel -------------------------------------------

double Logistic(double x);
double Logit(double p);
// Smallest value of the logistic derivative on [-a, a].
double BLow(double a);

struct BlockmodelParams {
  double f = 0.95;
  double l = 0.3;
  double a = 2.95;  // the logit state lives in [-a, a]
  double sigma_w = 0.05;
  double sigma_v = 0.01;
  // Independent scalar channels; every channel uses the same f and l.
  std::size_t channels = 1;

  void Validate() const;
};

struct GainWindow {
  double l_min = 0.0;
  double l_max = 0.0;
};

// Gains for which z -> f z - l logistic(z) contracts at rate beta on [-a, a]:
// (f - beta) / b_low(a) <= l <= 4 (f + beta), the left side dropped when
// f <= beta.
GainWindow BlockmodelGainWindow(double f, double beta, double a);

DomainBox BlockmodelDomain(const BlockmodelParams& params);
ObserverSpec BlockmodelObserver(const BlockmodelParams& params,
                                std::optional<Vec> z0 = std::nullopt);
// Derivative of one channel of the closed-loop observer map, f - l g'(z).
JacobianField BlockmodelObserverJacobian(const BlockmodelParams& params);

struct BlockmodelCalibration {
  double beta = 0.0;  // f - b_low(a) l
  double k_prime = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  NoiseCalibration noise;
  ContractionCertificate certificate;
};

// Laplace calibration of the published blockmodel estimate. `rho` defaults
// to K' / (beta - alpha).
BlockmodelCalibration BlockmodelCalibrate(
    const BlockmodelParams& params, const AdjacencyParams& adj,
    const PrivacyBudget& budget, double grid_step = 0.01,
    std::optional<double> rho = std::nullopt);

// Elementwise logistic: the link-probability estimate from logit estimates.
Vec ThetaEstimate(std::span<const double> z);

// --- SIR -------------------------------------------------------------------

struct SirParams {
  double mu = 0.1;
  double R0 = 3.0;
  double tau = 0.1;
  double sigma_v = 0.02;
  // Defaults to 0.01 * tau when unset.
  std::optional<double> sigma_w;

  double process_noise() const { return sigma_w ? *sigma_w : 0.01 * tau; }
  // Positivity, and a probe that the grid domain is mapped into the simplex.
  void Validate() const;
};

// State (s, i); 0.01 <= i <= 0.5, 0 <= s, s + i <= 1.
DomainBox SirDomain();
Vec SirStep(const SirParams& params, std::span<const double> x);
Mat SirJacobian(const SirParams& params, std::span<const double> x);
JacobianField SirJacobianField(const SirParams& params);
// Closed-loop field J(x) - L C.
JacobianField SirObserverJacobian(const SirParams& params, const Mat& gain);
Mat SirObservationMatrix();
ObserverSpec SirObserver(const SirParams& params, const Mat& gain,
                         std::optional<Vec> z0 = std::nullopt);

SynthesisProblem SirSynthesisProblem(
    const SirParams& params, double beta, double c, double c_prime,
    double grid_step = 0.01,
    RateConvention convention = RateConvention::kNormBound);

// --- synthetic data and pipelines --------------------------------------------

Trajectory GenerateBlockmodel(const BlockmodelParams& params,
                              std::optional<Vec> x0, std::size_t n_steps,
                              std::uint64_t seed);
Trajectory GenerateSir(const SirParams& params, std::optional<Vec> x0,
                       std::size_t n_steps, std::uint64_t seed);

struct PipelineOptions {
  std::size_t n_steps = 600;
  std::uint64_t seed = 0;
  std::optional<Vec> x0;  // model default when unset
  std::optional<Vec> z0;  // domain default when unset
  bool model_noise = true;  // process and measurement noise
};

struct PipelineResult {
  Trajectory trajectory;
  double rate = 0.0;  // certified contraction rate of the observer
  double k_prime = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  SensitivityBound sensitivity;
  // Unset for PrivacyBudget::NoiseFree().
  std::optional<NoiseCalibration> noise;
  std::optional<ContractionCertificate> certificate;
};

struct ObserverCalibration {
  double rate = 0.0;
  double k_prime = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  SensitivityBound sensitivity;
  std::optional<NoiseCalibration> noise;  // unset for the noise-free budget
};

// K' = K ||L||_P, rho = K' / (rate - alpha), Delta_2 = rho B and Gaussian
// noise with covariance sigma^2 P^{-1}, sigma = kappa Delta_2.
ObserverCalibration SirCalibrate(const SynthesisResult& synth,
                                 const AdjacencyParams& adj,
                                 const PrivacyBudget& budget);

PipelineResult BlockmodelPipeline(const BlockmodelParams& params,
                                  const AdjacencyParams& adj,
                                  const PrivacyBudget& budget,
                                  const PipelineOptions& options);

// Observer with the synthesized L, published with SirCalibrate's noise.
PipelineResult SirPipeline(const SirParams& params,
                           const SynthesisResult& synth,
                           const AdjacencyParams& adj,
                           const PrivacyBudget& budget,
                           const PipelineOptions& options);

// Runs the observer on y and on an adjacent y~ from the same initial
// estimate and compares the gap |z_k - z~_k| with rho (gamma^j - alpha^j),
// j = k - k0.
struct PairComparison {
  std::vector<Vec> z;
  std::vector<Vec> z_tilde;
  AdjacentSignal adjacent;
  Vec gap;
  Vec bound;
  double max_excess = 0.0;  // max_k gap_k - bound_k
  std::size_t violations = 0;  // gap_k > bound_k + tolerance
  std::vector<int> domain_exits;  // of either run
};

PairComparison CompareAdjacentRuns(const ObserverSpec& spec,
                                   std::span<const Vec> y,
                                   const AdjacencyParams& adj, int k0,
                                   std::uint64_t seed, DeviationShape shape,
                                   const NormTag& gap_norm, double rho,
                                   double gamma, double tolerance = 1e-9);

}  // namespace dpobs

#endif  // DPOBS_MODELS_H_
