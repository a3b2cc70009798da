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


#include "dpobs/io.h"

#include <cstdio>
#include <fstream>
#include <system_error>

namespace dpobs {

namespace {

const char* ConventionName(RateConvention c) {
  return c == RateConvention::kNormBound ? "norm-bound" : "literal";
}

RateConvention ConventionFromName(const std::string& name) {
  if (name == "norm-bound") return RateConvention::kNormBound;
  if (name == "literal") return RateConvention::kLiteral;
  throw InvalidArgument("unknown rate convention '" + name + "'");
}

Json VecJson(const Vec& v) { return Json(v); }

}  // namespace

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json ToJson(const Mat& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat MatFromJson(const Json& j) {
  if (!j.is_array() || j.empty()) {
    throw InvalidArgument("matrix must be a nonempty array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw DimensionError("matrix rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json ToJson(const NormTag& norm) {
  if (norm.kind() != NormTag::Kind::kWeighted) return norm.name();
  Json j;
  j["kind"] = "weighted";
  j["P"] = ToJson(norm.weight().mat());
  return j;
}

Json ToJson(const DomainBox& box) {
  Json j;
  j["lower"] = VecJson(box.lower());
  j["upper"] = VecJson(box.upper());
  Json cons = Json::array();
  for (const auto& c : box.constraints()) {
    Json cj;
    cj["a"] = VecJson(c.a);
    cj["b"] = c.b;
    cons.push_back(std::move(cj));
  }
  j["constraints"] = std::move(cons);
  return j;
}

Json ToJson(const NoiseCalibration& cal) {
  Json j;
  const bool laplace = cal.kind() == NoiseCalibration::Kind::kLaplace;
  j["kind"] = laplace ? "laplace" : "gaussian";
  j[laplace ? "b" : "sigma"] = cal.scale();
  j["shape"] = cal.shape() ? ToJson(cal.shape()->mat()) : Json(nullptr);
  if (!laplace) j["covariance"] = ToJson(cal.Covariance());
  j["epsilon"] = cal.budget().epsilon;
  j["delta"] = cal.budget().delta;
  j["gamma"] = cal.gamma ? Json(*cal.gamma) : Json(nullptr);
  j["rho"] = cal.rho ? Json(*cal.rho) : Json(nullptr);
  Json s;
  s["p"] = cal.sensitivity().p;
  s["value"] = cal.sensitivity().value;
  j["sensitivity"] = std::move(s);
  return j;
}

Json ToJson(const ContractionCertificate& cert) {
  Json j;
  j["check"] = cert.check == ContractionCertificate::Check::kLmi
                   ? "lmi"
                   : "induced-norm";
  j["norm"] = ToJson(cert.norm);
  j["rate"] = cert.rate;
  j["convention"] = ConventionName(cert.convention);
  j["domain"] = cert.domain ? ToJson(*cert.domain) : Json(nullptr);
  j["grid_step"] = cert.grid_step;
  j["margin"] = cert.margin;
  j["worst_value"] = cert.worst_value;
  j["binding_point"] = VecJson(cert.binding_point);
  j["sample_count"] = cert.sample_count;
  j["sampled"] = cert.sampled;
  j["valid"] = cert.valid;
  if (!cert.valid) {
    Json w;
    w["point"] = VecJson(cert.binding_point);
    w["k"] = cert.binding_k;
    w["value"] = cert.worst_value;
    j["witness"] = std::move(w);
  }
  return j;
}

Json ToJson(const SynthesisProblem& problem) {
  Json j;
  j["beta"] = problem.beta;
  j["c"] = problem.c;
  j["c_prime"] = problem.c_prime;
  j["convention"] = ConventionName(problem.convention);
  j["c_obs"] = ToJson(problem.c_obs);
  Json samples = Json::array();
  for (const Mat& m : problem.jacobian_samples) samples.push_back(ToJson(m));
  j["jacobian_samples"] = std::move(samples);
  Json points = Json::array();
  for (const Vec& p : problem.sample_points) points.push_back(VecJson(p));
  j["sample_points"] = std::move(points);
  return j;
}

SynthesisProblem SynthesisProblemFromJson(const Json& j) {
  SynthesisProblem p;
  p.beta = j.at("beta").get<double>();
  p.c = j.value("c", 1.0);
  p.c_prime = j.value("c_prime", 0.0);
  p.convention = ConventionFromName(j.value("convention", "norm-bound"));
  p.c_obs = MatFromJson(j.at("c_obs"));
  for (const auto& m : j.at("jacobian_samples")) {
    p.jacobian_samples.push_back(MatFromJson(m));
  }
  if (j.contains("sample_points")) {
    for (const auto& v : j.at("sample_points")) {
      p.sample_points.push_back(v.get<Vec>());
    }
  }
  p.Validate();
  return p;
}

Json ToJson(const SynthesisResult& r) {
  Json j;
  j["converged"] = r.converged;
  j["objective"] = r.objective;
  j["g1"] = r.g1;
  j["g2"] = r.g2;
  j["rate"] = r.rate;
  j["P"] = ToJson(r.P);
  j["X"] = ToJson(r.X);
  j["L"] = ToJson(r.L);
  j["min_margin"] = r.min_margin;
  j["barrier_gap"] = r.barrier_gap;
  j["stages"] = r.stages;
  j["iterations"] = r.iterations;
  j["phase1_iterations"] = r.phase1_iterations;
  j["cutting_rounds"] = r.cutting_rounds;
  j["working_set_size"] = r.working_set_size;
  j["regularized"] = r.regularized;
  j["trace_bound_active"] = r.trace_bound_active;
  j["objective_trace"] = VecJson(r.objective_trace);
  return j;
}

Json ToJson(const Phase1Result& report) {
  Json j;
  j["feasible"] = report.feasible;
  j["min_margin"] = report.min_margin;
  j["binding_constraint"] = report.binding_constraint;
  j["binding_index"] = report.binding_index;
  j["iterations"] = report.iterations;
  return j;
}

Json ToJson(const Reverification& check) {
  Json j;
  j["passed"] = check.passed;
  j["min_eigenvalue"] = check.min_eigenvalue;
  j["binding_constraint"] = check.binding_constraint;
  j["constraint_count"] = check.constraint_count;
  j["gain_norm_sq"] = check.gain_norm_sq;
  j["inverse_p_max"] = check.inverse_p_max;
  return j;
}

std::string TrajectoryCsv(const Trajectory& traj) {
  traj.Validate();
  auto width = [](const std::vector<Vec>& s) {
    return s.empty() ? std::size_t{0} : s.front().size();
  };
  std::string out = "k";
  auto header = [&](const char* prefix, std::size_t n) {
    for (std::size_t i = 1; i <= n; ++i) {
      out += ",";
      out += prefix;
      out += std::to_string(i);
    }
  };
  header("x_", width(traj.x));
  header("y_", width(traj.y));
  header("z_", width(traj.z));
  header("zhat_", width(traj.zhat));
  out += "\n";
  auto cells = [&](const std::vector<Vec>& s, std::size_t k) {
    if (s.empty()) return;
    for (double v : s[k]) {
      out += ",";
      out += FormatDouble(v);
    }
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += std::to_string(k);
    cells(traj.x, k);
    cells(traj.y, k);
    cells(traj.z, k);
    cells(traj.zhat, k);
    out += "\n";
  }
  return out;
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    f.flush();
    if (!f) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " +
                             ec.message());
  }
}

}  // namespace dpobs
