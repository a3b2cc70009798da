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


// dpobs: calibrate, certify, synthesize and simulate private observers.
//
// Every parameter resolves as built-in default < --config file < flag. The
// config file is a JSON object of parameter keys (flag names with '_' for
// '-'), optionally with a nested object per subcommand that wins over the
// top level. Artifacts go to --out-dir, else $DPOBS_OUT_DIR, else ".".

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpobs/contraction.h"
#include "dpobs/io.h"
#include "dpobs/models.h"
#include "dpobs/privacy.h"
#include "dpobs/synthesis.h"

namespace dpobs {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

constexpr char kOutDirEnv[] = "DPOBS_OUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string FlagName(const std::string& key) {
  std::string flag = "--" + key;
  for (char& ch : flag) {
    if (ch == '_') ch = '-';
  }
  return flag;
}

Vec ParseList(const std::string& raw, const std::string& key) {
  Vec out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw UsageError(FlagName(key) + ": '" + raw +
                       "' is not a comma-separated list of numbers");
    }
  }
  return out;
}

// One subcommand's parameters: registered as flags, merged with defaults and
// the config file after parsing.
class ParamSet {
 public:
  // `parent` names an enclosing config section whose keys apply to every
  // child, e.g. {"simulate": {"n_steps": 300, "sir": {"tau": 0.2}}}.
  ParamSet(CLI::App* app, std::string section, std::string parent = "")
      : app_(app), section_(std::move(section)), parent_(std::move(parent)) {}

  // `kind` fixes the parse rule: "number", "integer", "string", "flag" or
  // "list". A null default means "decided later from other parameters".
  void Add(const std::string& key, const std::string& kind, Json def,
           const std::string& help) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->kind = kind;
    e->def = std::move(def);
    if (kind == "flag") {
      e->opt = app_->add_flag(FlagName(key), e->flag, help);
    } else {
      e->opt = app_->add_option(FlagName(key), e->raw, help);
    }
    entries_.push_back(std::move(e));
  }

  Json Resolve(const Json& file) const {
    Json out = Json::object();
    for (const auto& e : entries_) out[e->key] = e->def;
    auto merge = [&](const Json& layer, bool strict) {
      if (!layer.is_object()) return;
      for (auto it = layer.begin(); it != layer.end(); ++it) {
        const Entry* e = Find(it.key());
        if (e == nullptr) {
          if (strict) {
            throw UsageError("config: unknown key '" + it.key() + "' for " +
                             section_);
          }
          continue;
        }
        out[e->key] = Checked(*e, it.value());
      }
    };
    merge(file, false);
    const Json* scope = &file;
    if (!parent_.empty() && file.is_object() && file.contains(parent_)) {
      scope = &file.at(parent_);
      merge(*scope, false);
    } else if (!parent_.empty()) {
      scope = nullptr;
    }
    if (scope != nullptr && scope->is_object() && scope->contains(section_)) {
      merge(scope->at(section_), true);
    }
    for (const auto& e : entries_) {
      if (e->opt->count() == 0) continue;
      out[e->key] = FromFlag(*e);
    }
    return out;
  }

 private:
  struct Entry {
    std::string key;
    std::string kind;
    Json def;
    std::string raw;
    bool flag = false;
    CLI::Option* opt = nullptr;
  };

  const Entry* Find(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e->key == key) return e.get();
    }
    return nullptr;
  }

  static Json Checked(const Entry& e, const Json& v) {
    const bool ok = (e.kind == "number" && (v.is_number() || v.is_null())) ||
                    (e.kind == "integer" && v.is_number_integer()) ||
                    (e.kind == "string" && v.is_string()) ||
                    (e.kind == "flag" && v.is_boolean()) ||
                    (e.kind == "list" && (v.is_array() || v.is_null()));
    if (!ok) {
      throw UsageError("config: '" + e.key + "' must be of type " + e.kind);
    }
    return v;
  }

  static Json FromFlag(const Entry& e) {
    if (e.kind == "flag") return true;
    if (e.kind == "string") return e.raw;
    if (e.kind == "list") return ParseList(e.raw, e.key);
    std::size_t used = 0;
    try {
      if (e.kind == "integer") {
        const long long v = std::stoll(e.raw, &used);
        if (used == e.raw.size()) return v;
      } else {
        const double v = std::stod(e.raw, &used);
        if (used == e.raw.size()) return v;
      }
    } catch (const std::exception&) {
    }
    throw UsageError(FlagName(e.key) + ": '" + e.raw + "' is not a valid " +
                     e.kind);
  }

  CLI::App* app_;
  std::string section_;
  std::string parent_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

std::string Short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double Num(const Json& cfg, const char* key) { return cfg.at(key).get<double>(); }

std::optional<Vec> OptList(const Json& cfg, const char* key) {
  if (cfg.at(key).is_null()) return std::nullopt;
  return cfg.at(key).get<Vec>();
}

// Fills a null entry with a model-dependent default so the echoed config
// shows what actually ran.
void Default(Json& cfg, const char* key, double value) {
  if (cfg.at(key).is_null()) cfg[key] = value;
}

struct Context {
  std::filesystem::path out_dir;
};

void Emit(const Context& ctx, const std::string& name, const Json& doc) {
  WriteFileAtomic(ctx.out_dir / name, doc.dump(2) + "\n");
}

void EchoConfig(const std::string& command, const Json& cfg) {
  std::cout << command << " config: " << cfg.dump() << "\n";
}

RateConvention ParseConvention(const std::string& name) {
  if (name == "norm-bound") return RateConvention::kNormBound;
  if (name == "literal") return RateConvention::kLiteral;
  throw UsageError("--convention must be 'norm-bound' or 'literal'");
}

SirParams SirFromConfig(const Json& cfg) {
  SirParams p;
  p.mu = Num(cfg, "mu");
  p.R0 = Num(cfg, "R0");
  p.tau = Num(cfg, "tau");
  if (cfg.contains("sigma_v")) p.sigma_v = Num(cfg, "sigma_v");
  if (cfg.contains("sigma_w") && !cfg.at("sigma_w").is_null()) {
    p.sigma_w = Num(cfg, "sigma_w");
  }
  return p;
}

BlockmodelParams BlockmodelFromConfig(const Json& cfg) {
  BlockmodelParams p;
  p.f = Num(cfg, "f");
  p.l = Num(cfg, "l");
  p.a = Num(cfg, "a");
  if (cfg.contains("sigma_w")) p.sigma_w = Num(cfg, "sigma_w");
  if (cfg.contains("sigma_v")) p.sigma_v = Num(cfg, "sigma_v");
  if (cfg.contains("channels")) {
    const long long c = cfg.at("channels").get<long long>();
    if (c < 1) throw UsageError("--channels must be at least 1");
    p.channels = static_cast<std::size_t>(c);
  }
  return p;
}

SynthesisProblem SirProblemFromConfig(const Json& cfg) {
  return SirSynthesisProblem(SirFromConfig(cfg), Num(cfg, "beta"),
                             Num(cfg, "c"), Num(cfg, "c_prime"),
                             Num(cfg, "grid_step"),
                             ParseConvention(cfg.at("convention")));
}

void AddSirParams(ParamSet& ps, bool with_beta = true) {
  ps.Add("mu", "number", 0.1, "SIR recovery rate");
  ps.Add("R0", "number", 3.0, "SIR basic reproduction number");
  ps.Add("tau", "number", 0.1, "SIR sampling period");
  if (with_beta) {
    ps.Add("beta", "number", 1.0 - 1e-5, "target contraction rate");
  }
  ps.Add("c", "number", 1.0, "objective weight on g2");
  ps.Add("c_prime", "number", 0.0, "enforce P >= c_prime I");
  ps.Add("grid_step", "number", 0.01, "grid step over the SIR domain");
  ps.Add("convention", "string", "norm-bound",
         "rate convention in the LMI: norm-bound (beta^2 P) or literal "
         "(beta P)");
}

void AddBlockmodelParams(ParamSet& ps) {
  ps.Add("f", "number", 0.95, "blockmodel dynamics coefficient");
  ps.Add("l", "number", 0.3, "blockmodel observer gain");
  ps.Add("a", "number", 2.95, "logit half-range of the domain");
}

Json CalibrationTableJson(double gamma, double rho, const SensitivityBound& s) {
  Json j;
  j["gamma"] = gamma;
  j["rho"] = rho;
  j["p"] = s.p;
  j["sensitivity"] = s.value;
  return j;
}

void PrintTable(double gamma, double rho, const SensitivityBound& s) {
  std::cout << "gamma                   rho                     Delta_" << s.p
            << "\n"
            << FormatDouble(gamma) << "  " << FormatDouble(rho) << "  "
            << FormatDouble(s.value) << "\n";
}

// --- calibrate ------------------------------------------------------------------

int RunCalibrate(const Context& ctx, Json cfg) {
  const bool identity = cfg.at("identity").get<bool>();
  const std::string model = cfg.at("model").get<std::string>();
  if (!identity && model != "blockmodel" && model != "sir") {
    throw UsageError("--model must be 'blockmodel' or 'sir'");
  }
  const std::string which = identity ? "identity" : model;
  Default(cfg, "K", which == "sir" ? 5e-4 : which == "identity" ? 1.0 : 1e-3);
  Default(cfg, "alpha", which == "identity" ? 0.0 : 0.25);
  Default(cfg, "eps", which == "sir" ? 2.0 : 1.0);
  Default(cfg, "delta", which == "sir" ? 0.05 : 0.0);
  EchoConfig("calibrate", cfg);

  AdjacencyParams adj{Num(cfg, "K"), Num(cfg, "alpha")};
  const PrivacyBudget budget{Num(cfg, "eps"), Num(cfg, "delta")};
  Json doc;
  doc["config"] = cfg;
  doc["mechanism"] = which;

  if (identity) {
    const long long p = cfg.at("p").get<long long>();
    if (p != 1 && p != 2) throw UsageError("--p must be 1 or 2");
    adj.input_norm = p == 1 ? NormTag::One() : NormTag::Two();
    const SensitivityBound s = IdentitySensitivity(adj, static_cast<int>(p));
    const NoiseCalibration cal =
        p == 1 ? CalibrateLaplace(s, budget)
               : CalibrateGaussian(s, budget, SpdMat(Mat::Identity(1)));
    doc["calibration"] = ToJson(cal);
    std::cout << "Delta_" << p << " = " << FormatDouble(s.value) << "\n";
  } else if (model == "blockmodel") {
    const BlockmodelParams params = BlockmodelFromConfig(cfg);
    std::optional<double> rho;
    if (!cfg.at("rho").is_null()) rho = Num(cfg, "rho");
    const BlockmodelCalibration cal = BlockmodelCalibrate(
        params, adj, budget, Num(cfg, "grid_step"), rho);
    doc["calibration"] = ToJson(cal.noise);
    doc["beta"] = cal.beta;
    doc["k_prime"] = cal.k_prime;
    doc["table"] = CalibrationTableJson(cal.gamma, cal.rho,
                                        cal.noise.sensitivity());
    doc["certificate"] = ToJson(cal.certificate);
    PrintTable(cal.gamma, cal.rho, cal.noise.sensitivity());
  } else {
    const SynthesisProblem problem = SirProblemFromConfig(cfg);
    const SynthesisResult synth = Synthesize(problem);
    const ObserverCalibration cal = SirCalibrate(synth, adj, budget);
    doc["calibration"] = ToJson(*cal.noise);
    doc["rate"] = cal.rate;
    doc["k_prime"] = cal.k_prime;
    doc["table"] = CalibrationTableJson(cal.gamma, cal.rho, cal.sensitivity);
    doc["L"] = ToJson(synth.L);
    doc["P"] = ToJson(synth.P);
    PrintTable(cal.gamma, cal.rho, cal.sensitivity);
  }
  Emit(ctx, "calibration.json", doc);
  return kExitOk;
}

// --- verify-contraction -----------------------------------------------------------

int RunVerify(const Context& ctx, Json cfg) {
  const std::string model = cfg.at("model").get<std::string>();
  const double step = Num(cfg, "grid_step");
  Json doc;
  ContractionCertificate cert;
  ContractionCertificate refined;
  VerifyOptions opts;
  opts.grid_step = step;
  VerifyOptions fine = opts;
  fine.grid_step = step / 2.0;

  if (model == "blockmodel") {
    const BlockmodelParams params = BlockmodelFromConfig(cfg);
    Default(cfg, "beta", params.f - BLow(params.a) * params.l);
    EchoConfig("verify-contraction", cfg);
    const double beta = Num(cfg, "beta");
    const JacobianField jac = BlockmodelObserverJacobian(params);
    const DomainBox domain({-params.a}, {params.a});
    cert = VerifyContraction(jac, domain, NormTag::Two(), beta, opts);
    refined = VerifyContraction(jac, domain, NormTag::Two(), beta, fine);
    const GainWindow w = BlockmodelGainWindow(params.f, beta, params.a);
    doc["config"] = cfg;
    doc["gain_window"] = {{"l_min", w.l_min}, {"l_max", w.l_max}};
  } else if (model == "sir") {
    Default(cfg, "beta", 1.0 - 1e-5);
    EchoConfig("verify-contraction", cfg);
    const SirParams params = SirFromConfig(cfg);
    const SynthesisResult synth = Synthesize(SirProblemFromConfig(cfg));
    const JacobianField jac = SirObserverJacobian(params, synth.L);
    const SpdMat p(synth.P.Symmetrized());
    cert = VerifyContractionLmi(jac, SirDomain(), p, synth.rate, opts);
    refined = VerifyContractionLmi(jac, SirDomain(), p, synth.rate, fine);
    doc["config"] = cfg;
    doc["L"] = ToJson(synth.L);
  } else {
    throw UsageError("--model must be 'blockmodel' or 'sir'");
  }
  doc["certificate"] = ToJson(cert);
  doc["refinement"] = {{"grid_step", fine.grid_step},
                       {"margin", refined.margin},
                       {"margin_change", refined.margin - cert.margin},
                       {"valid", refined.valid}};
  Emit(ctx, "certificate.json", doc);
  std::cout << "margin " << Short(cert.margin) << " at grid step "
            << Short(step) << "; margin change at step "
            << Short(fine.grid_step) << ": "
            << Short(refined.margin - cert.margin) << "\n"
            << (cert.valid ? "certificate valid" : "certificate INVALID")
            << "\n";
  if (!cert.valid) {
    std::cout << "witness: " << Json(cert.binding_point).dump() << "\n";
  }
  return cert.valid ? kExitOk : kExitInvalid;
}

// --- synthesize-gain --------------------------------------------------------------

int RunSynthesize(const Context& ctx, const Json& cfg) {
  EchoConfig("synthesize-gain", cfg);
  const SynthesisProblem problem = SirProblemFromConfig(cfg);
  Json doc;
  doc["config"] = cfg;
  SynthesisResult result;
  try {
    result = Synthesize(problem);
  } catch (const InfeasibleError& e) {
    doc["infeasible"] = ToJson(e.report());
    Emit(ctx, "synthesis.json", doc);
    std::cout << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  }
  const Reverification check = ReverifySynthesis(problem, result);
  doc["result"] = ToJson(result);
  doc["reverification"] = ToJson(check);
  Emit(ctx, "synthesis.json", doc);
  std::cout << "objective " << FormatDouble(result.objective) << " (g1 "
            << FormatDouble(result.g1) << ", g2 " << FormatDouble(result.g2)
            << ")\nL = " << ToJson(result.L).dump() << "\nre-verification "
            << (check.passed ? "passed" : "FAILED") << ", min eigenvalue "
            << FormatDouble(check.min_eigenvalue) << "\n";
  if (!result.converged) std::cout << "warning: barrier did not converge\n";
  return check.passed && result.converged ? kExitOk : kExitInvalid;
}

// --- simulate -----------------------------------------------------------------------

void AddSimulateParams(ParamSet& ps, std::uint64_t seed, long long n_steps) {
  ps.Add("seed", "integer", seed, "random seed");
  ps.Add("n_steps", "integer", n_steps, "number of steps");
  ps.Add("x0", "list", nullptr, "initial true state, comma separated");
  ps.Add("z0", "list", nullptr, "initial estimate, comma separated");
  ps.Add("no_noise", "flag", false, "disable process and measurement noise");
  ps.Add("no_privacy", "flag", false, "publish the estimate without noise");
  ps.Add("adjacent", "flag", false,
         "also run an adjacent measurement signal and compare the gap with "
         "the divergence bound");
  ps.Add("k0", "integer", 100, "first step of the adjacent deviation");
  ps.Add("worst_case", "flag", false,
         "adjacent deviation on the full envelope instead of random");
  ps.Add("name", "string", "", "artifact base name (default: the model)");
}

Trajectory AdjacentTrajectory(const Trajectory& base,
                              const PairComparison& pair) {
  Trajectory t;
  t.seed = base.seed;
  t.x = base.x;
  t.y = pair.adjacent.y_tilde;
  t.z.assign(pair.z_tilde.begin(),
             pair.z_tilde.begin() + static_cast<long>(base.size()));
  t.zhat = t.z;
  // Same noise realisation as the base run: xi = zhat - z.
  for (std::size_t k = 0; k < t.z.size(); ++k) {
    for (std::size_t i = 0; i < t.z[k].size(); ++i) {
      t.zhat[k][i] += base.zhat[k][i] - base.z[k][i];
    }
  }
  t.k0 = pair.adjacent.k0;
  t.deviation = pair.adjacent.deviation;
  return t;
}

std::string GapCsv(const PairComparison& pair) {
  std::string out = "k,gap,bound\n";
  for (std::size_t k = 0; k < pair.gap.size(); ++k) {
    out += std::to_string(k) + "," + FormatDouble(pair.gap[k]) + "," +
           FormatDouble(pair.bound[k]) + "\n";
  }
  return out;
}

int RunSimulate(const Context& ctx, const std::string& model, Json cfg) {
  const bool sir = model == "sir";
  Default(cfg, "K", sir ? 5e-4 : 1e-3);
  Default(cfg, "eps", sir ? 2.0 : 1.0);
  Default(cfg, "delta", sir ? 0.05 : 0.0);
  EchoConfig("simulate " + model, cfg);

  const long long n_steps = cfg.at("n_steps").get<long long>();
  const long long seed = cfg.at("seed").get<long long>();
  if (n_steps < 1) throw UsageError("--n-steps must be positive");
  if (seed < 0) throw UsageError("--seed must be nonnegative");
  PipelineOptions opts;
  opts.n_steps = static_cast<std::size_t>(n_steps);
  opts.seed = static_cast<std::uint64_t>(seed);
  opts.x0 = OptList(cfg, "x0");
  opts.z0 = OptList(cfg, "z0");
  opts.model_noise = !cfg.at("no_noise").get<bool>();
  AdjacencyParams adj{Num(cfg, "K"), Num(cfg, "alpha")};
  const PrivacyBudget budget = cfg.at("no_privacy").get<bool>()
                                   ? PrivacyBudget::NoiseFree()
                                   : PrivacyBudget{Num(cfg, "eps"),
                                                   Num(cfg, "delta")};

  PipelineResult run;
  std::optional<ObserverSpec> spec;
  std::optional<NormTag> gap_norm;
  Json doc;
  doc["config"] = cfg;
  doc["model"] = model;
  if (sir) {
    const SirParams params = SirFromConfig(cfg);
    SirParams model_params = params;
    if (!opts.model_noise) {
      model_params.sigma_v = 0.0;
      model_params.sigma_w = 0.0;
    }
    const SynthesisProblem problem = SirProblemFromConfig(cfg);
    const SynthesisResult synth = Synthesize(problem);
    run = SirPipeline(params, synth, adj, budget, opts);
    spec = SirObserver(model_params, synth.L, opts.z0);
    gap_norm = NormTag::Weighted(SpdMat(synth.P.Symmetrized()));
    doc["synthesis"] = {{"objective", synth.objective},
                        {"L", ToJson(synth.L)},
                        {"P", ToJson(synth.P)},
                        {"converged", synth.converged},
                        {"reverification",
                         ToJson(ReverifySynthesis(problem, synth))}};
  } else {
    BlockmodelParams params = BlockmodelFromConfig(cfg);
    run = BlockmodelPipeline(params, adj, budget, opts);
    if (!opts.model_noise) {
      params.sigma_v = 0.0;
      params.sigma_w = 0.0;
    }
    spec = BlockmodelObserver(params, opts.z0);
    gap_norm = NormTag::One();
  }
  doc["seed"] = opts.seed;
  doc["n_steps"] = opts.n_steps;
  doc["rate"] = run.rate;
  doc["k_prime"] = run.k_prime;
  doc["rho"] = run.rho;
  doc["gamma"] = run.gamma;
  doc["sensitivity"] = {{"p", run.sensitivity.p},
                        {"value", run.sensitivity.value}};
  doc["calibration"] = run.noise ? ToJson(*run.noise) : Json(nullptr);
  doc["certificate"] =
      run.certificate ? ToJson(*run.certificate) : Json(nullptr);
  doc["domain_exits"] = run.trajectory.domain_exits;
  if (!run.trajectory.domain_exits.empty()) {
    std::cerr << "warning: estimate left the certified domain at "
              << run.trajectory.domain_exits.size() << " step(s), first k = "
              << run.trajectory.domain_exits.front() << "\n";
  }

  std::string base = cfg.at("name").get<std::string>();
  if (base.empty()) base = model;
  Json files;
  files["trajectory"] = base + ".csv";
  WriteFileAtomic(ctx.out_dir / (base + ".csv"),
                  TrajectoryCsv(run.trajectory));
  if (cfg.at("adjacent").get<bool>()) {
    const long long k0 = cfg.at("k0").get<long long>();
    if (k0 < 0 || k0 >= n_steps) {
      throw UsageError("--k0 must lie in [0, n_steps)");
    }
    const PairComparison pair = CompareAdjacentRuns(
        *spec, run.trajectory.y, adj, static_cast<int>(k0),
        opts.seed + 0x5EEDULL,
        cfg.at("worst_case").get<bool>() ? DeviationShape::kWorstCase
                                         : DeviationShape::kRandom,
        *gap_norm, run.rho, run.gamma);
    files["adjacent_trajectory"] = base + "_adjacent.csv";
    files["gap"] = base + "_gap.csv";
    WriteFileAtomic(ctx.out_dir / (base + "_adjacent.csv"),
                    TrajectoryCsv(AdjacentTrajectory(run.trajectory, pair)));
    WriteFileAtomic(ctx.out_dir / (base + "_gap.csv"), GapCsv(pair));
    doc["adjacent"] = {{"k0", k0},
                       {"violations", pair.violations},
                       {"max_excess", pair.max_excess},
                       {"domain_exits", pair.domain_exits}};
    std::cout << "adjacent run: " << pair.violations
              << " bound violations, max gap - bound = "
              << FormatDouble(pair.max_excess) << "\n";
  }
  doc["files"] = files;
  Emit(ctx, base + ".json", doc);
  std::cout << "wrote " << (ctx.out_dir / (base + ".csv")).string() << "\n";
  return kExitOk;
}

Json LoadConfig(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file '" + path + "'");
  try {
    Json j = Json::parse(f);
    if (!j.is_object()) throw UsageError("config file must hold an object");
    return j;
  } catch (const Json::parse_error& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
}

int Main(int argc, char** argv) {
  CLI::App app{"Differentially private contracting observers"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out-dir", out_dir,
                 std::string("output directory (default $") + kOutDirEnv +
                     " or .)");

  CLI::App* cal = app.add_subcommand("calibrate", "noise calibration");
  ParamSet cal_ps(cal, "calibrate");
  cal_ps.Add("model", "string", "blockmodel", "blockmodel or sir");
  cal_ps.Add("identity", "flag", false, "calibrate the identity map");
  cal_ps.Add("p", "integer", 1, "identity sensitivity norm (1 or 2)");
  AddBlockmodelParams(cal_ps);
  AddSirParams(cal_ps);
  cal_ps.Add("K", "number", nullptr, "adjacency bound K (M for SIR)");
  cal_ps.Add("alpha", "number", nullptr, "adjacency decay rate");
  cal_ps.Add("eps", "number", nullptr, "privacy epsilon");
  cal_ps.Add("delta", "number", nullptr, "privacy delta");
  cal_ps.Add("rho", "number", nullptr,
             "cascade parameter rho (default K'/(beta - alpha))");

  CLI::App* ver = app.add_subcommand("verify-contraction",
                                     "sampled contraction certificate");
  ParamSet ver_ps(ver, "verify-contraction");
  ver_ps.Add("model", "string", "blockmodel", "blockmodel or sir");
  AddBlockmodelParams(ver_ps);
  AddSirParams(ver_ps, false);
  // The blockmodel default rate depends on f, l and a.
  ver_ps.Add("beta", "number", nullptr, "contraction rate to certify");

  CLI::App* syn = app.add_subcommand("synthesize-gain", "SIR gain synthesis");
  ParamSet syn_ps(syn, "synthesize-gain");
  AddSirParams(syn_ps);

  CLI::App* sim = app.add_subcommand("simulate", "trajectory simulation");
  sim->require_subcommand(1);
  CLI::App* sim_bm = sim->add_subcommand("blockmodel", "blockmodel channel");
  ParamSet bm_ps(sim_bm, "blockmodel", "simulate");
  AddBlockmodelParams(bm_ps);
  bm_ps.Add("sigma_w", "number", 0.05, "process noise std-dev");
  bm_ps.Add("sigma_v", "number", 0.01, "measurement noise std-dev");
  bm_ps.Add("channels", "integer", 1, "independent channels");
  bm_ps.Add("K", "number", nullptr, "adjacency bound K");
  bm_ps.Add("alpha", "number", 0.25, "adjacency decay rate");
  bm_ps.Add("eps", "number", nullptr, "privacy epsilon");
  bm_ps.Add("delta", "number", nullptr, "privacy delta");
  AddSimulateParams(bm_ps, 1, 600);
  CLI::App* sim_sir = sim->add_subcommand("sir", "SIR epidemic");
  ParamSet sir_ps(sim_sir, "sir", "simulate");
  AddSirParams(sir_ps);
  sir_ps.Add("sigma_v", "number", 0.02, "measurement noise std-dev");
  sir_ps.Add("sigma_w", "number", nullptr,
             "process noise std-dev (default 0.01 tau)");
  sir_ps.Add("K", "number", nullptr, "adjacency bound M");
  sir_ps.Add("alpha", "number", 0.25, "adjacency decay rate");
  sir_ps.Add("eps", "number", nullptr, "privacy epsilon");
  sir_ps.Add("delta", "number", nullptr, "privacy delta");
  AddSimulateParams(sir_ps, 1, 600);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const Json file = LoadConfig(config_path);
    Context ctx;
    if (!out_dir.empty()) {
      ctx.out_dir = out_dir;
    } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = ".";
    }
    if (*cal) return RunCalibrate(ctx, cal_ps.Resolve(file));
    if (*ver) return RunVerify(ctx, ver_ps.Resolve(file));
    if (*syn) return RunSynthesize(ctx, syn_ps.Resolve(file));
    if (*sim_bm) return RunSimulate(ctx, "blockmodel", bm_ps.Resolve(file));
    if (*sim_sir) return RunSimulate(ctx, "sir", sir_ps.Resolve(file));
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace dpobs

int main(int argc, char** argv) { return dpobs::Main(argc, argv); }
