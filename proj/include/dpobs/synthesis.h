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


// Observer gain design by semidefinite programming.
//
// Decision variables are P = P^T (n x n), X (n x m), g1 and g2. For every
// sampled Jacobian J the closed loop J - L C with L = P^{-1} X must contract
// in the P-norm, which after the change of variables X = P L and a Schur
// complement is the LMI
//
//   [ c P - J^T P J + J^T X C + C^T X^T J   C^T X^T ]
//   [ X C                                    P       ]  >= 0,
//
// with c the LMI coefficient of the rate (see RateConvention). g1 bounds
// ||L||_P^2 = X^T P^{-1} X and g2 bounds lambda_max(P^{-1}); the solver
// minimises g1 + c_weight * g2 with a log-det barrier interior-point method.

#ifndef DPOBS_SYNTHESIS_H_
#define DPOBS_SYNTHESIS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpobs/contraction.h"
#include "dpobs/matrix.h"

namespace dpobs {

struct SynthesisProblem {
  std::vector<Mat> jacobian_samples;
  // Grid point each Jacobian was taken at; optional, used in reports.
  std::vector<Vec> sample_points;
  Mat c_obs;  // m x n observation matrix
  double beta = 0.99;
  double c = 1.0;
  double c_prime = 0.0;  // enforce P >= c_prime I when positive
  RateConvention convention = RateConvention::kNormBound;

  std::size_t state_dim() const { return c_obs.cols(); }
  std::size_t output_dim() const { return c_obs.rows(); }
  void Validate() const;
};

struct SolverOptions {
  double mu_initial = 1.0;
  double mu_factor = 0.2;
  int max_stages = 40;
  int max_newton_steps = 200;
  // Converged once (barrier degree) * mu < gap_tolerance * (1 + |objective|).
  double gap_tolerance = 1e-8;
  // Phase 1 returns a point with every LMI eigenvalue >= this.
  double phase1_margin = 1e-6;
  // Relative Tikhonov shift added to a singular Newton system.
  double hessian_regularization = 1e-10;
  // trace(P) <= p_trace_bound keeps the feasible set bounded; without it the
  // barrier can decrease forever along P -> infinity and the central path
  // does not exist. Must sit well above the optimal trace.
  double p_trace_bound = 1e5;
  // Cutting-plane handling of large sample sets: solve on a working set,
  // check every sample, add the most violated ones and repeat. The answer
  // is feasible for all samples and optimal for a relaxation, hence optimal
  // for the full problem. With thousands of samples in one barrier the
  // central path is pinned against the trace bound and Newton stalls.
  bool constraint_generation = true;
  std::size_t initial_working_set = 4;
  std::size_t cuts_per_round = 8;
  // A sample outside the working set counts as satisfied when its smallest
  // LMI eigenvalue is at least -cut_tolerance.
  double cut_tolerance = 1e-10;
};

// The n x n and scalar unknowns at one point of the search.
struct SynthesisPoint {
  Mat P;
  Mat X;
  double g1 = 0.0;
  double g2 = 0.0;
};

struct Phase1Result {
  bool feasible = false;
  SynthesisPoint point;
  // Smallest eigenvalue over all LMIs at `point`.
  double min_margin = 0.0;
  // Most violated (or tightest) constraint at `point`.
  std::string binding_constraint;
  std::size_t binding_index = 0;
  int iterations = 0;
};

struct SynthesisResult {
  Mat P;
  Mat X;
  Mat L;
  double g1 = 0.0;
  double g2 = 0.0;
  double objective = 0.0;
  // P-norm contraction rate certified for J - L C at every sample: beta under
  // kNormBound, sqrt(beta) under kLiteral.
  double rate = 0.0;
  // Smallest LMI eigenvalue across all constraints, from the solver's own
  // bookkeeping (see ReverifySynthesis for the independent check).
  double min_margin = 0.0;
  int iterations = 0;  // Newton steps, phase 2
  int phase1_iterations = 0;
  int stages = 0;
  double barrier_gap = 0.0;
  bool converged = false;
  bool regularized = false;  // a Newton system needed the Tikhonov shift
  // trace(P) ended within 1% of SolverOptions::p_trace_bound, so the bound
  // may be distorting the optimum.
  bool trace_bound_active = false;
  int cutting_rounds = 1;
  std::size_t working_set_size = 0;
  // g1 + c g2 after each barrier stage of the final round.
  std::vector<double> objective_trace;
};

// Thrown by Synthesize when phase 1 finds no strictly feasible point.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, Phase1Result report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const Phase1Result& report() const { return report_; }

 private:
  Phase1Result report_;
};

// The contraction block exactly as written above, with `coefficient`
// multiplying P in the top-left block.
Mat AssembleContractionLmi(const Mat& jac, const Mat& p, const Mat& x,
                           const Mat& c_obs, double coefficient);
// [g1 I_m, X^T; X, P].
Mat AssemblePerf1Lmi(const Mat& x, const Mat& p, double g1);
// [g2 I, I; I, P].
Mat AssemblePerf2Lmi(const Mat& p, double g2);

Phase1Result SolverPhase1(const SynthesisProblem& problem,
                          const SolverOptions& options = {});

SynthesisResult Synthesize(const SynthesisProblem& problem,
                           const SolverOptions& options = {});

struct Reverification {
  double min_eigenvalue = 0.0;
  std::string binding_constraint;
  std::size_t constraint_count = 0;
  // max_m lambda_max(X^T P^{-1} X) vs g1, lambda_max(P^{-1}) vs g2.
  double gain_norm_sq = 0.0;
  double inverse_p_max = 0.0;
  bool passed = false;
};

// Re-assembles every LMI at the returned point and checks it with the Jacobi
// eigensolver; shares no code with the solver's Cholesky-based bookkeeping.
Reverification ReverifySynthesis(const SynthesisProblem& problem,
                                 const SynthesisResult& result,
                                 double tolerance = 1e-9);

}  // namespace dpobs

#endif  // DPOBS_SYNTHESIS_H_
