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


// Python bindings. Structured results cross the boundary as the same JSON
// documents the CLI writes, decoded into plain dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "dpobs/contraction.h"
#include "dpobs/io.h"
#include "dpobs/models.h"
#include "dpobs/privacy.h"
#include "dpobs/synthesis.h"

namespace py = pybind11;

namespace dpobs {
namespace {

py::object ToPy(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Json FromPy(const py::object& o) {
  return Json::parse(
      py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Mat MatFromRows(const std::vector<std::vector<double>>& rows) {
  return MatFromJson(Json(rows));
}

py::dict TrajectoryDict(const Trajectory& t) {
  py::dict d;
  d["x"] = t.x;
  d["y"] = t.y;
  d["z"] = t.z;
  d["zhat"] = t.zhat;
  d["domain_exits"] = t.domain_exits;
  d["seed"] = t.seed;
  return d;
}

py::dict PipelineDict(const PipelineResult& r) {
  py::dict d = TrajectoryDict(r.trajectory);
  d["rate"] = r.rate;
  d["k_prime"] = r.k_prime;
  d["rho"] = r.rho;
  d["gamma"] = r.gamma;
  d["noise"] = r.noise ? ToPy(ToJson(*r.noise)) : py::none();
  return d;
}

PrivacyBudget Budget(std::optional<double> eps, double delta) {
  return eps ? PrivacyBudget{*eps, delta} : PrivacyBudget::NoiseFree();
}

PipelineOptions Options(std::size_t n_steps, std::uint64_t seed,
                        std::optional<Vec> x0, std::optional<Vec> z0,
                        bool model_noise) {
  PipelineOptions o;
  o.n_steps = n_steps;
  o.seed = seed;
  o.x0 = std::move(x0);
  o.z0 = std::move(z0);
  o.model_noise = model_noise;
  return o;
}

SirParams Sir(double mu, double r0, double tau, double sigma_v,
              std::optional<double> sigma_w) {
  SirParams p;
  p.mu = mu;
  p.R0 = r0;
  p.tau = tau;
  p.sigma_v = sigma_v;
  p.sigma_w = sigma_w;
  return p;
}

}  // namespace
}  // namespace dpobs

PYBIND11_MODULE(_core, m) {
  using namespace dpobs;
  using namespace pybind11::literals;
  m.doc() = "Differentially private contracting observers.";

  static py::exception<InfeasibleError> infeasible(m, "InfeasibleError",
                                                   PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InfeasibleError& e) {
      py::set_error(infeasible, e.what());
    } catch (const InvalidArgument& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("q_function", &QFunction, "x"_a);
  m.def("q_inverse", &QInverse, "delta"_a);
  m.def(
      "kappa", [](double eps, double delta) { return Kappa({eps, delta}); },
      "epsilon"_a, "delta"_a);
  m.def("gaussian_factor", &GaussianFactor, "gamma"_a, "alpha"_a);

  m.def(
      "observer_sensitivity",
      [](double k_prime, double alpha, double beta, std::optional<double> rho,
         int p) {
        const double r = rho ? *rho : DefaultRho(k_prime, alpha, beta);
        const ObserverSensitivity s =
            p == 1 ? ObserverL1Sensitivity(k_prime, alpha, beta, r)
                   : ObserverL2Sensitivity(k_prime, alpha, beta, r);
        return py::dict("value"_a = s.bound.value, "p"_a = s.bound.p,
                        "gamma"_a = s.gamma, "rho"_a = s.rho);
      },
      "k_prime"_a, "alpha"_a, "beta"_a, "rho"_a = py::none(), "p"_a = 1);

  m.def(
      "calibrate_laplace",
      [](double delta1, double eps) {
        return ToPy(ToJson(CalibrateLaplace({1, delta1}, {eps, 0.0})));
      },
      "sensitivity"_a, "epsilon"_a);
  m.def(
      "calibrate_gaussian",
      [](double delta2, double eps, double delta,
         std::vector<std::vector<double>> shape) {
        return ToPy(ToJson(CalibrateGaussian(
            {2, delta2}, {eps, delta}, SpdMat(MatFromRows(shape)))));
      },
      "sensitivity"_a, "epsilon"_a, "delta"_a, "shape"_a);

  m.def(
      "blockmodel_calibrate",
      [](double f, double l, double a, double K, double alpha, double eps,
         double grid_step) {
        BlockmodelParams p;
        p.f = f;
        p.l = l;
        p.a = a;
        const BlockmodelCalibration c =
            BlockmodelCalibrate(p, {K, alpha}, {eps, 0.0}, grid_step);
        return py::dict("beta"_a = c.beta, "k_prime"_a = c.k_prime,
                        "rho"_a = c.rho, "gamma"_a = c.gamma,
                        "noise"_a = ToPy(ToJson(c.noise)),
                        "certificate"_a = ToPy(ToJson(c.certificate)));
      },
      "f"_a = 0.95, "l"_a = 0.3, "a"_a = 2.95, "K"_a = 1e-3, "alpha"_a = 0.25,
      "epsilon"_a = 1.0, "grid_step"_a = 0.01);

  m.def(
      "synthesize",
      [](const py::object& problem) {
        const SynthesisProblem pb = SynthesisProblemFromJson(FromPy(problem));
        const SynthesisResult r = Synthesize(pb);
        Json out;
        out["result"] = ToJson(r);
        out["reverification"] = ToJson(ReverifySynthesis(pb, r));
        return ToPy(out);
      },
      "problem"_a,
      "Solve the observer gain problem given as a dict with keys beta, c, "
      "c_prime, convention, c_obs and jacobian_samples.");

  m.def(
      "sir_problem",
      [](double mu, double r0, double tau, double beta, double c,
         double c_prime, double grid_step, const std::string& convention) {
        SynthesisProblem pb = SirSynthesisProblem(
            Sir(mu, r0, tau, 0.02, std::nullopt), beta, c, c_prime, grid_step,
            convention == "literal" ? RateConvention::kLiteral
                                    : RateConvention::kNormBound);
        return ToPy(ToJson(pb));
      },
      "mu"_a = 0.1, "R0"_a = 3.0, "tau"_a = 0.1, "beta"_a = 1.0 - 1e-5,
      "c"_a = 1.0, "c_prime"_a = 0.0, "grid_step"_a = 0.01,
      "convention"_a = "norm-bound");

  m.def(
      "simulate_blockmodel",
      [](std::size_t n_steps, std::uint64_t seed, double f, double l,
         double a, double K, double alpha, std::optional<double> eps,
         bool model_noise) {
        BlockmodelParams p;
        p.f = f;
        p.l = l;
        p.a = a;
        return PipelineDict(BlockmodelPipeline(
            p, {K, alpha}, Budget(eps, 0.0),
            Options(n_steps, seed, std::nullopt, std::nullopt, model_noise)));
      },
      "n_steps"_a = 600, "seed"_a = 1, "f"_a = 0.95, "l"_a = 0.3,
      "a"_a = 2.95, "K"_a = 1e-3, "alpha"_a = 0.25, "epsilon"_a = 1.0,
      "model_noise"_a = true,
      "Blockmodel pipeline; epsilon=None publishes the raw estimate.");

  m.def(
      "simulate_sir",
      [](std::size_t n_steps, std::uint64_t seed, double mu, double r0,
         double tau, double beta, double grid_step, double K, double alpha,
         std::optional<double> eps, double delta, std::optional<Vec> x0,
         std::optional<Vec> z0, bool model_noise) {
        const SirParams p = Sir(mu, r0, tau, 0.02, std::nullopt);
        const SynthesisResult synth =
            Synthesize(SirSynthesisProblem(p, beta, 1.0, 0.0, grid_step));
        py::dict d = PipelineDict(SirPipeline(
            p, synth, {K, alpha, NormTag::Two()}, Budget(eps, delta),
            Options(n_steps, seed, std::move(x0), std::move(z0),
                    model_noise)));
        d["L"] = ToPy(ToJson(synth.L));
        d["P"] = ToPy(ToJson(synth.P));
        return d;
      },
      "n_steps"_a = 600, "seed"_a = 1, "mu"_a = 0.1, "R0"_a = 3.0,
      "tau"_a = 0.1, "beta"_a = 1.0 - 1e-5, "grid_step"_a = 0.01,
      "K"_a = 5e-4, "alpha"_a = 0.25, "epsilon"_a = 2.0, "delta"_a = 0.05,
      "x0"_a = py::none(), "z0"_a = py::none(), "model_noise"_a = true,
      "Synthesizes the SIR gain, then runs the private observer.");
}
