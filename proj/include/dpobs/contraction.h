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


// Sampled contraction certificates for discrete-time maps, cascade rates and
// the divergence bound for geometrically decaying perturbations.
//
// Certificates are grid-sampled, not exhaustive: the Jacobian is evaluated on
// a regular grid (always including the box faces) and the worst sample is
// reported. Forward invariance of the domain is the caller's claim; the
// simulators in models.h flag trajectories that leave it.

#ifndef DPOBS_CONTRACTION_H_
#define DPOBS_CONTRACTION_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dpobs/matrix.h"

namespace dpobs {

// a . x <= b
struct LinearConstraint {
  Vec a;
  double b = 0.0;
};

class DomainBox {
 public:
  DomainBox(Vec lower, Vec upper,
            std::vector<LinearConstraint> constraints = {});

  std::size_t dim() const { return lower_.size(); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<LinearConstraint>& constraints() const {
    return constraints_;
  }

  bool Contains(std::span<const double> x, double tol = 1e-9) const;
  Vec Center() const;
  // Points lower + k * step per coordinate, plus the upper face, kept when
  // they satisfy the linear constraints. Indices are integers so grids like
  // multiples of 0.01 are reproduced without drift.
  std::vector<Vec> GridSamples(double step) const;

 private:
  Vec lower_;
  Vec upper_;
  std::vector<LinearConstraint> constraints_;
};

// x -> d f_k / d x (x). `dim` is the state dimension; the matrix is
// dim x dim.
struct JacobianField {
  std::size_t dim = 0;
  bool time_invariant = true;
  std::function<Mat(std::span<const double> x, int k)> eval;
};

// How a rate r enters the LMI F^T P F <= c P. kNormBound uses c = r^2, which
// is exactly ||F||_P <= r. kLiteral uses c = r, i.e. ||F||_P <= sqrt(r).
enum class RateConvention { kNormBound, kLiteral };

double LmiCoefficient(double rate, RateConvention convention);
// The P-norm contraction rate sqrt(c) implied by F^T P F <= c P.
double NormRateFromLmi(double coefficient);

struct VerifyOptions {
  double grid_step = 0.01;
  // Time indices checked for time-varying fields. Ignored (k = 0) for
  // time-invariant ones.
  std::vector<int> horizon;
  // Certificates with margin >= -margin_tolerance are valid.
  double margin_tolerance = 1e-9;
  RateConvention convention = RateConvention::kNormBound;
};

struct ContractionCertificate {
  enum class Check { kInducedNorm, kLmi };

  Check check = Check::kInducedNorm;
  NormTag norm = NormTag::Two();
  double rate = 0.0;
  std::optional<DomainBox> domain;
  double grid_step = 0.0;
  std::vector<int> horizon;
  RateConvention convention = RateConvention::kNormBound;
  // Induced-norm check: rate - max sampled norm.
  // LMI check: min over samples of lambda_min(c P - F^T P F).
  double margin = 0.0;
  // Largest sampled induced norm (induced-norm check) or the smallest LMI
  // eigenvalue (LMI check), attained at `binding_point`.
  double worst_value = 0.0;
  Vec binding_point;
  int binding_k = 0;
  std::size_t sample_count = 0;
  bool valid = false;
  // Always true: the domain was sampled, not exhausted.
  bool sampled = true;
};

ContractionCertificate VerifyContraction(const JacobianField& jac,
                                         const DomainBox& domain,
                                         const NormTag& norm, double rate,
                                         const VerifyOptions& options = {});

ContractionCertificate VerifyContractionLmi(const JacobianField& jac,
                                            const DomainBox& domain,
                                            const SpdMat& p, double rate,
                                            const VerifyOptions& options = {});

struct CascadeBound {
  double alpha = 0.0;
  double beta = 0.0;
  double K = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  bool contracting = false;  // gamma < 1
};

// gamma = max(alpha + K / rho, beta) for a contracting system driving another.
CascadeBound CascadeRate(double alpha, double beta, double K, double rho);

// rho (gamma^j - alpha^j) + gamma^j * initial_gap, j = k - k0.
double DivergenceBound(double rho, double gamma, double alpha, int steps,
                       double initial_gap);

// K' = K * sup_k ||L_k|| with L_k : (Y, output_norm) -> (X, state_norm).
double ObserverCouplingGain(std::span<const Mat> schedule,
                            const NormTag& state_norm,
                            const NormTag& output_norm, double k_adj);

}  // namespace dpobs

#endif  // DPOBS_CONTRACTION_H_
