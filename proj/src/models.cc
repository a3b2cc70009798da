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


#include "dpobs/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

namespace dpobs {

namespace {

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// SplitMix64 finaliser; gives independent-looking streams from one seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double LogisticSlope(double z) {
  const double s = Logistic(z);
  return s * (1.0 - s);
}

void RequirePositive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be positive");
  }
}

void RequireNonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be nonnegative");
  }
}

DomainBox ScalarBlockmodelDomain(double a) { return DomainBox({-a}, {a}); }

void AddNoise(const NoiseCalibration& cal, std::uint64_t seed,
              Trajectory& traj) {
  const std::size_t dim = traj.z.empty() ? 0 : traj.z.front().size();
  NoiseSampler sampler(cal, dim, seed);
  traj.zhat.clear();
  traj.zhat.reserve(traj.z.size());
  for (const Vec& z : traj.z) {
    Vec xi = sampler.Next();
    for (std::size_t i = 0; i < dim; ++i) xi[i] += z[i];
    traj.zhat.push_back(std::move(xi));
  }
}

}  // namespace

// --- observer -----------------------------------------------------------------

const Mat& ObserverSpec::GainAt(int k) const {
  if (gain.empty()) throw InvalidArgument("observer has no gain");
  const std::size_t idx =
      std::min(static_cast<std::size_t>(std::max(k, 0)), gain.size() - 1);
  return gain[idx];
}

void ObserverSpec::Validate() const {
  if (!dynamics || !observation) {
    throw InvalidArgument("observer needs dynamics and observation maps");
  }
  if (gain.empty()) throw InvalidArgument("observer has no gain");
  const std::size_t n = state_dim();
  if (initial_estimate.size() != n) {
    throw DimensionError("initial estimate does not match the domain");
  }
  if (!domain.Contains(initial_estimate)) {
    throw InvalidArgument("initial estimate lies outside the domain");
  }
  const std::size_t m = gain.front().cols();
  for (const Mat& l : gain) {
    if (l.rows() != n || l.cols() != m) {
      throw DimensionError("every gain must be n x m");
    }
  }
  if (observation(initial_estimate, 0).size() != m) {
    throw DimensionError("observation map output does not match the gain");
  }
}

Simulation Simulate(const ObserverSpec& spec, std::span<const Vec> y,
                    std::size_t n_steps) {
  spec.Validate();
  if (y.size() < n_steps) {
    throw InvalidArgument("measurement signal shorter than n_steps");
  }
  const std::size_t n = spec.state_dim();
  Simulation out;
  out.z.reserve(n_steps + 1);
  out.z.push_back(spec.initial_estimate);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const int step = static_cast<int>(k);
    const Vec& z = out.z.back();
    if (!spec.domain.Contains(z)) out.domain_exits.push_back(step);
    const Vec predicted = spec.observation(z, step);
    if (predicted.size() != y[k].size()) {
      throw DimensionError("measurement " + std::to_string(k) +
                           " has the wrong dimension");
    }
    Vec innovation(predicted.size());
    for (std::size_t i = 0; i < innovation.size(); ++i) {
      innovation[i] = y[k][i] - predicted[i];
    }
    Vec next = spec.dynamics(z, step);
    const Vec correction = spec.GainAt(step) * innovation;
    for (std::size_t i = 0; i < n; ++i) next[i] += correction[i];
    if (!AllFinite(next)) {
      throw NumericalError("observer state became non-finite at step " +
                           std::to_string(k + 1));
    }
    out.z.push_back(std::move(next));
  }
  if (!spec.domain.Contains(out.z.back())) {
    out.domain_exits.push_back(static_cast<int>(n_steps));
  }
  return out;
}

void Trajectory::Validate() const {
  const std::size_t n = x.size();
  auto check = [&](const std::vector<Vec>& s, const char* name) {
    if (s.empty()) return;
    if (s.size() != n) {
      throw DimensionError(std::string("trajectory signal ") + name +
                           " has the wrong length");
    }
    for (const Vec& v : s) {
      if (!AllFinite(v)) {
        throw NumericalError(std::string("trajectory signal ") + name +
                             " has non-finite entries");
      }
    }
  };
  check(y, "y");
  check(z, "z");
  check(zhat, "zhat");
  check(deviation, "deviation");
}

// --- adjacent signals -----------------------------------------------------------

AdjacentSignal AdjacentPair(std::span<const Vec> y, const AdjacencyParams& adj,
                            int k0, std::uint64_t seed, DeviationShape shape) {
  RequireNonnegative(adj.K, "adjacency bound K");
  if (!(adj.alpha >= 0.0 && adj.alpha < 1.0)) {
    throw InvalidArgument("adjacency decay alpha must lie in [0, 1)");
  }
  if (k0 < 0 || static_cast<std::size_t>(k0) >= y.size()) {
    throw InvalidArgument("k0 must index into the signal");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  AdjacentSignal out;
  out.k0 = k0;
  out.y_tilde.assign(y.begin(), y.end());
  out.deviation.reserve(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    Vec delta(y[k].size(), 0.0);
    if (static_cast<int>(k) >= k0 && adj.K > 0.0 && !delta.empty()) {
      const double envelope =
          adj.K * std::pow(adj.alpha, static_cast<double>(k - k0));
      if (shape == DeviationShape::kWorstCase) {
        delta[0] = 1.0;
        const double scale = envelope / VecNorm(delta, adj.input_norm);
        delta[0] = scale;
      } else {
        double norm = 0.0;
        while (!(norm > 0.0)) {
          for (double& d : delta) d = normal(rng);
          norm = VecNorm(delta, adj.input_norm);
        }
        const double magnitude = uniform(rng) * envelope;
        for (double& d : delta) d = d / norm * magnitude;
      }
      for (std::size_t i = 0; i < delta.size(); ++i) {
        out.y_tilde[k][i] += delta[i];
      }
    }
    out.deviation.push_back(std::move(delta));
  }
  return out;
}

// --- blockmodel -----------------------------------------------------------------

double Logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double Logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidArgument("logit needs a probability in (0, 1)");
  }
  return std::log(p) - std::log1p(-p);
}

double BLow(double a) {
  RequirePositive(a, "logit half-range a");
  const double e = std::exp(-a);
  return e / ((1.0 + e) * (1.0 + e));
}

void BlockmodelParams::Validate() const {
  RequirePositive(f, "dynamics coefficient f");
  RequirePositive(a, "logit half-range a");
  RequireNonnegative(l, "observer gain l");
  RequireNonnegative(sigma_w, "process noise");
  RequireNonnegative(sigma_v, "measurement noise");
  if (channels == 0) throw InvalidArgument("need at least one channel");
}

GainWindow BlockmodelGainWindow(double f, double beta, double a) {
  RequirePositive(f, "f");
  RequirePositive(beta, "beta");
  const double b_low = BLow(a);
  return {f > beta ? (f - beta) / b_low : 0.0, 4.0 * (f + beta)};
}

DomainBox BlockmodelDomain(const BlockmodelParams& params) {
  params.Validate();
  return DomainBox(Vec(params.channels, -params.a),
                   Vec(params.channels, params.a));
}

ObserverSpec BlockmodelObserver(const BlockmodelParams& params,
                                std::optional<Vec> z0) {
  params.Validate();
  const double f = params.f;
  const std::size_t c = params.channels;
  ObserverSpec spec{
      [f](std::span<const double> z, int) {
        Vec out(z.begin(), z.end());
        for (double& v : out) v *= f;
        return out;
      },
      [](std::span<const double> z, int) {
        Vec out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = Logistic(z[i]);
        return out;
      },
      {Mat::Identity(c) * params.l},
      BlockmodelDomain(params),
      z0 ? *z0 : Vec(c, 0.0)};
  spec.Validate();
  return spec;
}

JacobianField BlockmodelObserverJacobian(const BlockmodelParams& params) {
  params.Validate();
  const double f = params.f;
  const double l = params.l;
  return {1, true, [f, l](std::span<const double> z, int) {
            return Mat{{f - l * LogisticSlope(z[0])}};
          }};
}

BlockmodelCalibration BlockmodelCalibrate(const BlockmodelParams& params,
                                          const AdjacencyParams& adj,
                                          const PrivacyBudget& budget,
                                          double grid_step,
                                          std::optional<double> rho) {
  params.Validate();
  adj.Validate();
  budget.Validate();
  if (!(params.l > 0.0)) {
    throw InvalidArgument(
        "observer gain l = 0 gives zero sensitivity; nothing to calibrate");
  }
  const double beta = params.f - BLow(params.a) * params.l;
  if (!(beta > 0.0)) {
    throw InvalidArgument("f - b_low(a) l must be positive");
  }
  const GainWindow window = BlockmodelGainWindow(params.f, beta, params.a);
  if (params.l > window.l_max) {
    throw InvalidArgument("gain l exceeds the window upper end 4 (f + beta)");
  }
  const double k_prime = adj.K * params.l;
  const double r = rho ? *rho : DefaultRho(k_prime, adj.alpha, beta);
  const ObserverSensitivity sens =
      ObserverL1Sensitivity(k_prime, adj.alpha, beta, r);
  NoiseCalibration noise = CalibrateLaplace(sens.bound, budget);
  noise.gamma = sens.gamma;
  noise.rho = sens.rho;

  VerifyOptions opts;
  opts.grid_step = grid_step;
  ContractionCertificate cert =
      VerifyContraction(BlockmodelObserverJacobian(params),
                        ScalarBlockmodelDomain(params.a), NormTag::Two(), beta,
                        opts);
  return {beta, k_prime, sens.rho, sens.gamma, std::move(noise),
          std::move(cert)};
}

Vec ThetaEstimate(std::span<const double> z) {
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) throw InvalidArgument("non-finite logit");
    out[i] = Logistic(z[i]);
  }
  return out;
}

// --- SIR --------------------------------------------------------------------

void SirParams::Validate() const {
  RequirePositive(mu, "recovery rate mu");
  RequirePositive(R0, "reproduction number R0");
  RequirePositive(tau, "sampling period tau");
  RequireNonnegative(sigma_v, "measurement noise");
  RequireNonnegative(process_noise(), "process noise");
  const double k = tau * mu * R0;
  // s' >= 0 needs k i <= 1 and i' >= 0 needs 1 + tau mu (R0 s - 1) >= 0; the
  // worst grid points are i = 0.5 and s = 0. s' + i' <= s + i always.
  const DomainBox box = SirDomain();
  if (k * box.upper()[1] > 1.0 || 1.0 - tau * mu < 0.0) {
    throw InvalidArgument(
        "tau * mu * R0 too large: the SIR step leaves the simplex on the "
        "domain");
  }
}

DomainBox SirDomain() {
  return DomainBox({0.0, 0.01}, {1.0, 0.5}, {LinearConstraint{{1.0, 1.0}, 1.0}});
}

Vec SirStep(const SirParams& params, std::span<const double> x) {
  const double s = x[0];
  const double i = x[1];
  const double tm = params.tau * params.mu;
  return {s - tm * params.R0 * i * s, i + tm * i * (params.R0 * s - 1.0)};
}

Mat SirJacobian(const SirParams& params, std::span<const double> x) {
  const double s = x[0];
  const double i = x[1];
  const double k = params.tau * params.mu * params.R0;
  return Mat{{1.0 - k * i, -k * s}, {k * i, 1.0 + k * (s - 1.0 / params.R0)}};
}

JacobianField SirJacobianField(const SirParams& params) {
  return {2, true, [params](std::span<const double> x, int) {
            return SirJacobian(params, x);
          }};
}

JacobianField SirObserverJacobian(const SirParams& params, const Mat& gain) {
  if (gain.rows() != 2 || gain.cols() != 1) {
    throw DimensionError("SIR gain must be 2 x 1");
  }
  const Mat lc = gain * SirObservationMatrix();
  return {2, true, [params, lc](std::span<const double> x, int) {
            return SirJacobian(params, x) - lc;
          }};
}

Mat SirObservationMatrix() { return Mat{{0.0, 1.0}}; }

ObserverSpec SirObserver(const SirParams& params, const Mat& gain,
                         std::optional<Vec> z0) {
  params.Validate();
  if (gain.rows() != 2 || gain.cols() != 1) {
    throw DimensionError("SIR gain must be 2 x 1");
  }
  ObserverSpec spec{
      [params](std::span<const double> z, int) { return SirStep(params, z); },
      [](std::span<const double> z, int) { return Vec{z[1]}; },
      {gain},
      SirDomain(),
      z0 ? *z0 : Vec{0.5, 0.25}};
  spec.Validate();
  return spec;
}

SynthesisProblem SirSynthesisProblem(const SirParams& params, double beta,
                                     double c, double c_prime,
                                     double grid_step,
                                     RateConvention convention) {
  params.Validate();
  SynthesisProblem problem;
  problem.sample_points = SirDomain().GridSamples(grid_step);
  problem.jacobian_samples.reserve(problem.sample_points.size());
  for (const Vec& x : problem.sample_points) {
    problem.jacobian_samples.push_back(SirJacobian(params, x));
  }
  problem.c_obs = SirObservationMatrix();
  problem.beta = beta;
  problem.c = c;
  problem.c_prime = c_prime;
  problem.convention = convention;
  problem.Validate();
  return problem;
}

// --- synthetic data -------------------------------------------------------------

Trajectory GenerateBlockmodel(const BlockmodelParams& params,
                              std::optional<Vec> x0, std::size_t n_steps,
                              std::uint64_t seed) {
  const DomainBox domain = BlockmodelDomain(params);
  Vec x = x0 ? *x0 : Vec(params.channels, 0.0);
  if (x.size() != params.channels) {
    throw DimensionError("x0 must have one entry per channel");
  }
  if (!domain.Contains(x)) throw InvalidArgument("x0 outside [-a, a]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Trajectory traj;
  traj.seed = seed;
  traj.x.reserve(n_steps);
  traj.y.reserve(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = Logistic(x[i]) + params.sigma_v * normal(rng);
    }
    traj.x.push_back(x);
    traj.y.push_back(std::move(y));
    for (double& v : x) v = params.f * v + params.sigma_w * normal(rng);
  }
  return traj;
}

Trajectory GenerateSir(const SirParams& params, std::optional<Vec> x0,
                       std::size_t n_steps, std::uint64_t seed) {
  params.Validate();
  Vec x = x0 ? *x0 : Vec{0.9, 0.05};
  if (x.size() != 2) throw DimensionError("SIR state is (s, i)");
  if (!SirDomain().Contains(x)) {
    throw InvalidArgument("x0 outside the SIR domain");
  }
  const double sw = params.process_noise();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Trajectory traj;
  traj.seed = seed;
  traj.x.reserve(n_steps);
  traj.y.reserve(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    traj.y.push_back({x[1] + params.sigma_v * normal(rng)});
    traj.x.push_back(x);
    Vec next = SirStep(params, x);
    for (double& v : next) v += sw * normal(rng);
    x = std::move(next);
  }
  return traj;
}

// --- pipelines ------------------------------------------------------------------

PipelineResult BlockmodelPipeline(const BlockmodelParams& params,
                                  const AdjacencyParams& adj,
                                  const PrivacyBudget& budget,
                                  const PipelineOptions& options) {
  BlockmodelParams model = params;
  if (!options.model_noise) {
    model.sigma_w = 0.0;
    model.sigma_v = 0.0;
  }
  PipelineResult out;
  out.trajectory = GenerateBlockmodel(model, options.x0, options.n_steps,
                                      DeriveSeed(options.seed, 0));
  out.trajectory.seed = options.seed;
  const ObserverSpec spec = BlockmodelObserver(model, options.z0);
  Simulation sim = Simulate(spec, out.trajectory.y, options.n_steps);
  sim.z.pop_back();
  out.trajectory.z = std::move(sim.z);
  out.trajectory.domain_exits = std::move(sim.domain_exits);

  if (budget.noise_free()) {
    adj.Validate();
    out.rate = model.f - BLow(model.a) * model.l;
    out.k_prime = adj.K * model.l;
    const ObserverSensitivity sens = ObserverL1Sensitivity(
        out.k_prime, adj.alpha, out.rate,
        DefaultRho(out.k_prime, adj.alpha, out.rate));
    out.rho = sens.rho;
    out.gamma = sens.gamma;
    out.sensitivity = sens.bound;
    out.trajectory.zhat = out.trajectory.z;
    return out;
  }
  BlockmodelCalibration cal = BlockmodelCalibrate(model, adj, budget);
  out.rate = cal.beta;
  out.k_prime = cal.k_prime;
  out.rho = cal.rho;
  out.gamma = cal.gamma;
  out.sensitivity = cal.noise.sensitivity();
  AddNoise(cal.noise, DeriveSeed(options.seed, 1), out.trajectory);
  out.noise = std::move(cal.noise);
  out.certificate = std::move(cal.certificate);
  return out;
}

ObserverCalibration SirCalibrate(const SynthesisResult& synth,
                                 const AdjacencyParams& adj,
                                 const PrivacyBudget& budget) {
  adj.Validate();
  if (synth.L.rows() != 2 || synth.L.cols() != 1) {
    throw DimensionError("SIR gain must be 2 x 1");
  }
  const SpdMat p(synth.P.Symmetrized());
  ObserverCalibration out;
  out.rate = synth.rate;
  out.k_prime =
      adj.K * InducedNorm(synth.L, NormTag::Weighted(p), NormTag::Two());
  const ObserverSensitivity sens = ObserverL2Sensitivity(
      out.k_prime, adj.alpha, out.rate,
      DefaultRho(out.k_prime, adj.alpha, out.rate));
  out.rho = sens.rho;
  out.gamma = sens.gamma;
  out.sensitivity = sens.bound;
  if (budget.noise_free()) return out;
  NoiseCalibration cal = CalibrateGaussian(sens.bound, budget, p);
  cal.gamma = sens.gamma;
  cal.rho = sens.rho;
  out.noise = std::move(cal);
  return out;
}

PipelineResult SirPipeline(const SirParams& params,
                           const SynthesisResult& synth,
                           const AdjacencyParams& adj,
                           const PrivacyBudget& budget,
                           const PipelineOptions& options) {
  if (!synth.converged) {
    throw InvalidArgument("SIR pipeline needs a converged synthesis");
  }
  SirParams model = params;
  if (!options.model_noise) {
    model.sigma_v = 0.0;
    model.sigma_w = 0.0;
  }
  PipelineResult out;
  out.trajectory = GenerateSir(model, options.x0, options.n_steps,
                               DeriveSeed(options.seed, 0));
  out.trajectory.seed = options.seed;
  const ObserverSpec spec = SirObserver(model, synth.L, options.z0);
  Simulation sim = Simulate(spec, out.trajectory.y, options.n_steps);
  sim.z.pop_back();
  out.trajectory.z = std::move(sim.z);
  out.trajectory.domain_exits = std::move(sim.domain_exits);

  ObserverCalibration cal = SirCalibrate(synth, adj, budget);
  out.rate = cal.rate;
  out.k_prime = cal.k_prime;
  out.rho = cal.rho;
  out.gamma = cal.gamma;
  out.sensitivity = cal.sensitivity;
  if (!cal.noise) {
    out.trajectory.zhat = out.trajectory.z;
    return out;
  }
  AddNoise(*cal.noise, DeriveSeed(options.seed, 1), out.trajectory);
  out.noise = std::move(cal.noise);
  return out;
}

PairComparison CompareAdjacentRuns(const ObserverSpec& spec,
                                   std::span<const Vec> y,
                                   const AdjacencyParams& adj, int k0,
                                   std::uint64_t seed, DeviationShape shape,
                                   const NormTag& gap_norm, double rho,
                                   double gamma, double tolerance) {
  PairComparison out;
  out.adjacent = AdjacentPair(y, adj, k0, seed, shape);
  Simulation base = Simulate(spec, y, y.size());
  Simulation other = Simulate(spec, out.adjacent.y_tilde, y.size());
  out.domain_exits = base.domain_exits;
  out.domain_exits.insert(out.domain_exits.end(), other.domain_exits.begin(),
                          other.domain_exits.end());
  std::sort(out.domain_exits.begin(), out.domain_exits.end());
  out.domain_exits.erase(
      std::unique(out.domain_exits.begin(), out.domain_exits.end()),
      out.domain_exits.end());
  out.z = std::move(base.z);
  out.z_tilde = std::move(other.z);
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.z.size(); ++k) {
    Vec diff(out.z[k].size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] = out.z[k][i] - out.z_tilde[k][i];
    }
    const double gap = VecNorm(diff, gap_norm);
    const int j = static_cast<int>(k) - k0;
    const double bound =
        j <= 0 ? 0.0 : DivergenceBound(rho, gamma, adj.alpha, j, 0.0);
    out.gap.push_back(gap);
    out.bound.push_back(bound);
    out.max_excess = std::max(out.max_excess, gap - bound);
    if (gap > bound + tolerance) ++out.violations;
  }
  return out;
}

}  // namespace dpobs
