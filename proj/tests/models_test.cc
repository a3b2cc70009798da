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
#include <random>

#include "gtest/gtest.h"

namespace dpobs {
namespace {

// Derivative of the logistic function, written out independently.
double Slope(double z) {
  const double e = std::exp(-z);
  return e / ((1.0 + e) * (1.0 + e));
}

double PNorm(const Mat& p, double a, double b) {
  return std::sqrt(p(0, 0) * a * a + 2.0 * p(0, 1) * a * b + p(1, 1) * b * b);
}

// Shared SIR synthesis at the default parameters; solved once.
const SynthesisResult& SirSynthesis() {
  static const SynthesisResult r =
      Synthesize(SirSynthesisProblem(SirParams{}, 1.0 - 1e-5, 1.0, 0.0, 0.01));
  return r;
}

TEST(SimulateTest, OpenLoopFollowsDynamics) {
  ObserverSpec spec{
      [](std::span<const double> z, int) { return Vec{0.5 * z[0] + 1.0}; },
      [](std::span<const double> z, int) { return Vec{z[0]}; },
      {Mat(1, 1)},
      DomainBox({-10.0}, {10.0}),
      {0.0}};
  const std::vector<Vec> y(5, Vec{3.0});
  const Simulation sim = Simulate(spec, y, 5);
  ASSERT_EQ(sim.z.size(), 6u);
  double z = 0.0;
  for (std::size_t k = 0; k <= 5; ++k) {
    EXPECT_DOUBLE_EQ(sim.z[k][0], z);
    z = 0.5 * z + 1.0;
  }
  EXPECT_TRUE(sim.domain_exits.empty());
}

TEST(SimulateTest, TimeVaryingGainAndExits) {
  ObserverSpec spec{
      [](std::span<const double> z, int) { return Vec{z[0]}; },
      [](std::span<const double> z, int) { return Vec{z[0]}; },
      {Mat{{0.0}}, Mat{{1.0}}},
      DomainBox({-1.0}, {1.0}),
      {0.0}};
  const std::vector<Vec> y(3, Vec{5.0});
  const Simulation sim = Simulate(spec, y, 3);
  EXPECT_EQ(sim.z[1][0], 0.0);  // L_0 = 0
  EXPECT_EQ(sim.z[2][0], 5.0);  // L_1 = 1 copies y
  EXPECT_EQ(sim.z[3][0], 5.0);  // last gain reused
  EXPECT_EQ(sim.domain_exits, (std::vector<int>{2, 3}));
}

TEST(SimulateTest, NonFiniteEstimateThrows) {
  ObserverSpec spec{
      [](std::span<const double> z, int) { return Vec{z[0] * 1e200}; },
      [](std::span<const double> z, int) { return Vec{z[0]}; },
      {Mat(1, 1)},
      DomainBox({-10.0}, {10.0}),
      {1.0}};
  const std::vector<Vec> y(5, Vec{0.0});
  EXPECT_THROW(Simulate(spec, y, 5), NumericalError);
}

TEST(AdjacentPairTest, ZeroBoundLeavesSignalUnchanged) {
  const std::vector<Vec> y{{1.0}, {2.0}, {3.0}};
  const AdjacentSignal a = AdjacentPair(y, {0.0, 0.5}, 0, 1);
  EXPECT_EQ(a.y_tilde, y);
}

TEST(AdjacentPairTest, RespectsEnvelope) {
  std::vector<Vec> y(50, Vec{0.2, -0.1, 0.4});
  AdjacencyParams adj{2.0, 0.7, NormTag::Two()};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AdjacentSignal a = AdjacentPair(y, adj, 10, seed);
    for (int k = 0; k < 50; ++k) {
      Vec d(3);
      for (int i = 0; i < 3; ++i) d[i] = a.y_tilde[k][i] - y[k][i];
      const double n = VecNorm(d, NormTag::Two());
      if (k < 10) {
        EXPECT_EQ(n, 0.0);
      } else {
        EXPECT_LE(n, 2.0 * std::pow(0.7, k - 10) * (1.0 + 1e-12));
      }
    }
  }
}

TEST(AdjacentPairTest, WorstCaseSitsOnEnvelope) {
  std::vector<Vec> y(8, Vec{0.0});
  const AdjacentSignal a =
      AdjacentPair(y, {0.5, 0.5}, 3, 0, DeviationShape::kWorstCase);
  for (int k = 3; k < 8; ++k) {
    EXPECT_DOUBLE_EQ(a.deviation[k][0], 0.5 * std::pow(0.5, k - 3));
  }
  EXPECT_THROW(AdjacentPair(y, {0.5, 0.5}, 8, 0), InvalidArgument);
  EXPECT_THROW(AdjacentPair(y, {0.5, 1.0}, 0, 0), InvalidArgument);
}

// --- blockmodel ---------------------------------------------------------------

TEST(BlockmodelTest, LogisticSlopeMinimumOnInterval) {
  for (double a : {0.5, 1.0, 2.95, 5.0}) {
    // Grid search for the minimum slope on [-a, a].
    double lo = 1.0;
    for (int i = 0; i <= 2000; ++i) lo = std::min(lo, Slope(-a + a * i / 1000.0));
    EXPECT_NEAR(BLow(a), lo, 1e-15);
  }
  EXPECT_NEAR(BLow(2.95), 0.0475, 3e-4);
  for (double p : {1e-6, 0.1, 0.5, 0.93}) {
    EXPECT_NEAR(Logistic(Logit(p)), p, 1e-12);
  }
  EXPECT_THROW(Logit(0.0), InvalidArgument);
}

TEST(BlockmodelTest, GainWindowEndpoints) {
  const double beta = 0.95 - BLow(2.95) * 0.3;
  const GainWindow w = BlockmodelGainWindow(0.95, beta, 2.95);
  EXPECT_NEAR(w.l_min, 0.3, 1e-12);
  EXPECT_NEAR(w.l_max, 4.0 * (0.95 + beta), 1e-12);
  EXPECT_EQ(BlockmodelGainWindow(0.9, 0.95, 2.95).l_min, 0.0);
  // Inside the window the closed-loop slope f - l g' stays within +-beta.
  for (double l : {w.l_min, 0.5 * (w.l_min + w.l_max), w.l_max}) {
    double worst = 0.0;
    for (int i = 0; i <= 5900; ++i) {
      const double z = -2.95 + i * 1e-3;
      worst = std::max(worst, std::abs(0.95 - l * Slope(z)));
    }
    EXPECT_LE(worst, beta + 1e-12) << l;
  }
}

TEST(BlockmodelTest, CalibrationValue) {
  BlockmodelParams params;
  const AdjacencyParams adj{1e-3, 0.25};
  const BlockmodelCalibration cal = BlockmodelCalibrate(params, adj, {1.0, 0.0});
  // Sensitivity as an explicit sum over the divergence envelope.
  const double kp = 1e-3 * 0.3;
  const double beta = 0.95 - Slope(2.95) * 0.3;
  const double rho = kp / (beta - 0.25);
  double delta1 = 0.0;
  for (int j = 1; j < 200000; ++j) {
    delta1 += rho * (std::pow(beta, j) - std::pow(0.25, j));
  }
  EXPECT_NEAR(cal.beta, beta, 1e-15);
  EXPECT_NEAR(cal.noise.scale(), delta1, 1e-9 * delta1);
  EXPECT_NEAR(cal.noise.scale(), 6.23e-3, 6.23e-5);
  EXPECT_TRUE(cal.certificate.valid);
  EXPECT_GE(cal.certificate.margin, -1e-9);

  const BlockmodelCalibration cal2 =
      BlockmodelCalibrate(params, adj, {2.0, 0.0});
  EXPECT_NEAR(cal2.noise.scale(), cal.noise.scale() / 2.0, 1e-18);
}

TEST(BlockmodelTest, CalibrationRejectsDegenerateGains) {
  BlockmodelParams params;
  params.l = 0.0;
  EXPECT_THROW(BlockmodelCalibrate(params, {1e-3, 0.25}, {}), InvalidArgument);
  params.l = 19.0;  // f - b_low l < 0
  EXPECT_THROW(BlockmodelCalibrate(params, {1e-3, 0.25}, {}), InvalidArgument);
}

TEST(BlockmodelTest, ObserverContractsToFixedPoint) {
  // y = 1/2 is the image of the logit state 0, which is then a fixed point.
  BlockmodelParams params;
  const double beta = 0.95 - BLow(2.95) * 0.3;
  const ObserverSpec spec = BlockmodelObserver(params, Vec{2.0});
  const std::vector<Vec> y(200, Vec{0.5});
  const Simulation sim = Simulate(spec, y, 200);
  for (std::size_t k = 1; k < sim.z.size(); ++k) {
    EXPECT_LE(std::abs(sim.z[k][0]), beta * std::abs(sim.z[k - 1][0]) + 1e-300);
  }
  EXPECT_LT(std::abs(sim.z.back()[0]), 1e-5);
}

TEST(BlockmodelTest, PublishedNoiseMatchesCalibration) {
  PipelineOptions opts;
  opts.n_steps = 20000;
  opts.seed = 7;
  const PipelineResult r =
      BlockmodelPipeline(BlockmodelParams{}, {1e-3, 0.25}, {1.0, 0.0}, opts);
  ASSERT_TRUE(r.noise.has_value());
  double sq = 0.0;
  for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
    const double d = r.trajectory.zhat[k][0] - r.trajectory.z[k][0];
    sq += d * d;
  }
  const double std_dev = std::sqrt(sq / r.trajectory.size());
  EXPECT_NEAR(std_dev, std::sqrt(2.0) * r.noise->scale(),
              0.05 * std::sqrt(2.0) * r.noise->scale());
}

TEST(BlockmodelTest, EstimateTracksState) {
  PipelineOptions opts;
  opts.seed = 3;
  opts.n_steps = 600;
  const PipelineResult r = BlockmodelPipeline(
      BlockmodelParams{}, {1e-3, 0.25}, PrivacyBudget::NoiseFree(), opts);
  EXPECT_EQ(r.trajectory.zhat, r.trajectory.z);
  double err = 0.0;
  for (std::size_t k = 300; k < 600; ++k) {
    err += std::abs(Logistic(r.trajectory.z[k][0]) -
                    Logistic(r.trajectory.x[k][0]));
  }
  EXPECT_LT(err / 300.0, 0.05);
  r.trajectory.Validate();
}

TEST(BlockmodelTest, MultiChannelAndBadStart) {
  BlockmodelParams params;
  params.channels = 3;
  const Trajectory t = GenerateBlockmodel(params, std::nullopt, 10, 1);
  EXPECT_EQ(t.x[0].size(), 3u);
  EXPECT_THROW(GenerateBlockmodel(params, Vec{0.0, 3.0, 0.0}, 10, 1),
               InvalidArgument);
  const Vec theta = ThetaEstimate(Vec{-1.0, 0.0, 4.0});
  EXPECT_DOUBLE_EQ(theta[1], 0.5);
  EXPECT_LT(theta[0], 0.5);
  EXPECT_GT(theta[2], 0.98);
}

// --- SIR ------------------------------------------------------------------------

TEST(SirTest, JacobianMatchesFiniteDifferences) {
  SirParams params;
  for (const Vec& x : std::vector<Vec>{{0.9, 0.05}, {0.3, 0.4}, {0.0, 0.2}}) {
    const Mat j = SirJacobian(params, x);
    for (int c = 0; c < 2; ++c) {
      Vec hi = x, lo = x;
      hi[c] += 1e-6;
      lo[c] -= 1e-6;
      const Vec fh = SirStep(params, hi), fl = SirStep(params, lo);
      for (int r = 0; r < 2; ++r) {
        EXPECT_NEAR(j(r, c), (fh[r] - fl[r]) / 2e-6, 1e-8);
      }
    }
  }
}

TEST(SirTest, NoiselessEpidemicShape) {
  SirParams params;
  params.sigma_w = 0.0;
  params.sigma_v = 0.0;
  const Trajectory t = GenerateSir(params, std::nullopt, 2000, 1);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    EXPECT_LE(t.x[k][0], t.x[k - 1][0]);
    if (t.x[k][1] > t.x[peak][1]) peak = k;
  }
  EXPECT_GT(peak, 0u);
  EXPECT_LT(peak, t.size() - 1);
  for (std::size_t k = peak + 1; k < t.size(); ++k) {
    EXPECT_LE(t.x[k][1], t.x[k - 1][1]);
  }
}

TEST(SirTest, EulerStepConvergesToOde) {
  // At small tau the discrete map approaches the continuous model; compare
  // with a fine RK4 integration over one unit of time.
  SirParams params;
  params.tau = 1e-3;
  Vec x{0.9, 0.05};
  for (int k = 0; k < 1000; ++k) x = SirStep(params, x);
  auto rhs = [](const Vec& v) {
    return Vec{-0.3 * v[0] * v[1], 0.3 * v[0] * v[1] - 0.1 * v[1]};
  };
  Vec r{0.9, 0.05};
  const double h = 1e-4;
  for (int k = 0; k < 10000; ++k) {
    const Vec k1 = rhs(r);
    const Vec k2 = rhs({r[0] + h / 2 * k1[0], r[1] + h / 2 * k1[1]});
    const Vec k3 = rhs({r[0] + h / 2 * k2[0], r[1] + h / 2 * k2[1]});
    const Vec k4 = rhs({r[0] + h * k3[0], r[1] + h * k3[1]});
    for (int i = 0; i < 2; ++i) {
      r[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
  }
  EXPECT_NEAR(x[0], r[0], 1e-4);
  EXPECT_NEAR(x[1], r[1], 1e-4);
}

TEST(SirTest, RejectsStartOutsideDomain) {
  EXPECT_THROW(GenerateSir(SirParams{}, Vec{0.9, 0.2}, 10, 1), InvalidArgument);
  EXPECT_THROW(GenerateSir(SirParams{}, Vec{0.5, 0.001}, 10, 1),
               InvalidArgument);
  SirParams bad;
  bad.tau = -1.0;
  EXPECT_THROW(bad.Validate(), InvalidArgument);
}

TEST(SirTest, CertifiedObserverErrorNeverGrows) {
  const SynthesisResult& synth = SirSynthesis();
  ASSERT_TRUE(synth.converged);
  PipelineOptions opts;
  opts.model_noise = false;
  opts.n_steps = 400;
  const PipelineResult r = SirPipeline(SirParams{}, synth, {5e-4, 0.25},
                                       PrivacyBudget::NoiseFree(), opts);
  EXPECT_EQ(r.trajectory.zhat, r.trajectory.z);
  const DomainBox domain = SirDomain();
  const Trajectory& t = r.trajectory;
  std::size_t checked = 0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (!domain.Contains(t.x[k]) || !domain.Contains(t.z[k])) break;
    const double now = PNorm(synth.P, t.x[k][0] - t.z[k][0], t.x[k][1] - t.z[k][1]);
    const double next =
        PNorm(synth.P, t.x[k + 1][0] - t.z[k + 1][0], t.x[k + 1][1] - t.z[k + 1][1]);
    EXPECT_LE(next, synth.rate * now * (1.0 + 1e-9) + 1e-15) << k;
    ++checked;
  }
  EXPECT_GT(checked, 100u);
}

TEST(SirTest, PublishedCovarianceScale) {
  const SynthesisResult& synth = SirSynthesis();
  const ObserverCalibration cal = SirCalibrate(synth, {5e-4, 0.25}, {2.0, 0.05});
  ASSERT_TRUE(cal.noise.has_value());
  const Mat cov = cal.noise->Covariance();
  for (double v : cov.data()) {
    EXPECT_GE(std::abs(v), 1e-5);
    EXPECT_LE(std::abs(v), 1e-3);
  }
  // sigma^2 P^{-1} with sigma = kappa rho B.
  const double b = GaussianFactor(cal.gamma, 0.25);
  const double sigma = Kappa({2.0, 0.05}) * cal.rho * b;
  const Mat expect = Inverse(synth.P) * (sigma * sigma);
  EXPECT_LT((cov - expect).MaxAbs(), 1e-12 * expect.MaxAbs() + 1e-18);
  const double l_norm = std::sqrt(
      (synth.L.Transpose() * synth.P * synth.L)(0, 0));
  EXPECT_NEAR(cal.k_prime, 5e-4 * l_norm, 1e-15);
}

// --- adjacency bound dominance ---------------------------------------------------

TEST(DivergenceTest, BlockmodelPairsStayUnderBound) {
  BlockmodelParams params;
  const AdjacencyParams adj{1e-3, 0.25};
  const BlockmodelCalibration cal = BlockmodelCalibrate(params, adj, {});
  std::mt19937_64 rng(11);
  std::size_t violations = 0;
  for (int t = 0; t < 100; ++t) {
    const Trajectory data = GenerateBlockmodel(params, std::nullopt, 300, rng());
    const ObserverSpec spec = BlockmodelObserver(params);
    const int k0 = static_cast<int>(rng() % 200);
    const PairComparison cmp = CompareAdjacentRuns(
        spec, data.y, adj, k0, rng(),
        t % 2 ? DeviationShape::kWorstCase : DeviationShape::kRandom,
        NormTag::One(), cal.rho, cal.gamma);
    ASSERT_TRUE(cmp.domain_exits.empty());
    violations += cmp.violations;
  }
  EXPECT_EQ(violations, 0u);
}

TEST(DivergenceTest, SirPairsStayUnderBound) {
  const SynthesisResult& synth = SirSynthesis();
  const AdjacencyParams adj{5e-4, 0.25, NormTag::Two()};
  const ObserverCalibration cal =
      SirCalibrate(synth, adj, PrivacyBudget::NoiseFree());
  const NormTag p_norm = NormTag::Weighted(SpdMat(synth.P.Symmetrized()));
  std::mt19937_64 rng(12);
  std::size_t violations = 0;
  for (int t = 0; t < 100; ++t) {
    const Trajectory data = GenerateSir(SirParams{}, std::nullopt, 200, rng());
    const ObserverSpec spec = SirObserver(SirParams{}, synth.L);
    const int k0 = static_cast<int>(rng() % 100);
    const PairComparison cmp = CompareAdjacentRuns(
        spec, data.y, adj, k0, rng(),
        t % 2 ? DeviationShape::kWorstCase : DeviationShape::kRandom, p_norm,
        cal.rho, cal.gamma);
    ASSERT_TRUE(cmp.domain_exits.empty()) << t;
    violations += cmp.violations;
  }
  EXPECT_EQ(violations, 0u);
}

TEST(DivergenceTest, WorstCaseGapIsNearlyTight) {
  // For a linear scalar observer the gap follows the bound's recursion
  // exactly when the contraction rate is attained everywhere.
  const double beta = 0.8, l = 0.5;
  ObserverSpec spec{
      [](std::span<const double> z, int) { return Vec{1.3 * z[0]}; },
      [](std::span<const double> z, int) { return Vec{z[0]}; },
      {Mat{{l}}},
      DomainBox({-1e6}, {1e6}),
      {0.0}};
  const AdjacencyParams adj{1.0, 0.3};
  const double rho = DefaultRho(l, 0.3, beta);
  const std::vector<Vec> y(60, Vec{0.0});
  const PairComparison cmp = CompareAdjacentRuns(
      spec, y, adj, 5, 0, DeviationShape::kWorstCase, NormTag::One(), rho,
      CascadeGamma(l, 0.3, beta, rho));
  EXPECT_EQ(cmp.violations, 0u);
  EXPECT_NEAR(cmp.max_excess, 0.0, 1e-12);
}

}  // namespace
}  // namespace dpobs
