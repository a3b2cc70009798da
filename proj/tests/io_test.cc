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

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "gtest/gtest.h"

namespace dpobs {
namespace {

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string ReadAll(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(FormatDoubleTest, RoundTripsExactly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::strtod(FormatDouble(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(FormatDouble(0.1), "0.10000000000000001");
}

TEST(CalibrationJsonTest, LaplaceKeys) {
  const NoiseCalibration cal =
      CalibrateLaplace(SensitivityBound{1, 0.5}, PrivacyBudget{2.0, 0.0});
  const Json j = ToJson(cal);
  EXPECT_EQ(j.at("kind"), "laplace");
  EXPECT_DOUBLE_EQ(j.at("b").get<double>(), 0.25);
  EXPECT_TRUE(j.at("shape").is_null());
  for (const char* key : {"epsilon", "delta", "gamma", "rho", "sensitivity"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_FALSE(j.contains("sigma"));
}

TEST(CalibrationJsonTest, GaussianKeys) {
  const SpdMat shape(Mat{{2.0, 0.5}, {0.5, 1.0}});
  const NoiseCalibration cal = CalibrateGaussian(
      SensitivityBound{2, 0.1}, PrivacyBudget{1.0, 0.05}, shape);
  const Json j = ToJson(cal);
  EXPECT_EQ(j.at("kind"), "gaussian");
  EXPECT_TRUE(j.contains("sigma"));
  EXPECT_EQ(MatFromJson(j.at("shape")).data(), shape.mat().data());
  EXPECT_EQ(j.at("sensitivity").at("p"), 2);
}

TEST(CertificateJsonTest, WitnessOnlyWhenInvalid) {
  const JacobianField field{1, true, [](std::span<const double> x, int) {
                              return Mat{{0.5 * x[0]}};
                            }};
  const DomainBox box({0.0}, {1.0});
  VerifyOptions opts;
  opts.grid_step = 0.1;
  const Json ok = ToJson(VerifyContraction(field, box, NormTag::Two(), 0.6, opts));
  EXPECT_TRUE(ok.at("valid").get<bool>());
  EXPECT_FALSE(ok.contains("witness"));
  for (const char* key : {"norm", "rate", "domain", "grid_step", "margin",
                          "sample_count", "valid"}) {
    EXPECT_TRUE(ok.contains(key)) << key;
  }
  const Json bad = ToJson(VerifyContraction(field, box, NormTag::Two(), 0.3, opts));
  EXPECT_FALSE(bad.at("valid").get<bool>());
  EXPECT_DOUBLE_EQ(bad.at("witness").at("point")[0].get<double>(), 1.0);
}

TEST(SynthesisJsonTest, ProblemRoundTrip) {
  SynthesisProblem p;
  p.jacobian_samples = {Mat{{0.9, 0.1}, {0.0, 0.8}}, Mat{{1.0, 0.0}, {0.3, 0.7}}};
  p.sample_points = {{0.0}, {1.0}};
  p.c_obs = Mat{{1.0, 0.0}};
  p.beta = 0.95;
  p.c = 3.0;
  p.convention = RateConvention::kLiteral;
  const SynthesisProblem q = SynthesisProblemFromJson(Json::parse(ToJson(p).dump()));
  EXPECT_EQ(q.beta, p.beta);
  EXPECT_EQ(q.c, p.c);
  EXPECT_EQ(q.convention, p.convention);
  ASSERT_EQ(q.jacobian_samples.size(), 2u);
  EXPECT_EQ(q.jacobian_samples[1].data(), p.jacobian_samples[1].data());
  EXPECT_EQ(q.sample_points, p.sample_points);
  EXPECT_THROW(SynthesisProblemFromJson(Json::parse(R"({"c_obs": [[1]]})")),
               std::exception);
}

TEST(TrajectoryCsvTest, HeaderAndExactValues) {
  Trajectory t;
  t.x = {{0.1, 0.2}, {1.0 / 3.0, 2e-300}};
  t.y = {{0.5}, {0.25}};
  t.z = {{0.0, 0.0}, {0.1, 0.7}};
  t.zhat = {{1e-17, -3.0}, {0.123456789012345678, 4.0}};
  const std::string csv = TrajectoryCsv(t);
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "k,x_1,x_2,y_1,z_1,z_2,zhat_1,zhat_2");
  for (std::size_t k = 0; k < 2; ++k) {
    ASSERT_TRUE(std::getline(ss, line));
    const auto cells = Split(line);
    ASSERT_EQ(cells.size(), 8u);
    EXPECT_EQ(cells[0], std::to_string(k));
    std::vector<double> expect;
    for (const auto* s : {&t.x, &t.y, &t.z, &t.zhat}) {
      expect.insert(expect.end(), (*s)[k].begin(), (*s)[k].end());
    }
    for (std::size_t i = 0; i < expect.size(); ++i) {
      EXPECT_EQ(std::strtod(cells[i + 1].c_str(), nullptr), expect[i]);
    }
  }
  EXPECT_FALSE(std::getline(ss, line));
}

TEST(TrajectoryCsvTest, RejectsRaggedTrajectory) {
  Trajectory t;
  t.x = {{0.1}, {0.2}};
  t.y = {{0.5}};
  EXPECT_THROW(TrajectoryCsv(t), std::exception);
}

TEST(WriteFileAtomicTest, CreatesAndReplaces) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dpobs_io_test_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "out.json";
  WriteFileAtomic(path, "first");
  EXPECT_EQ(ReadAll(path), "first");
  WriteFileAtomic(path, "second");
  EXPECT_EQ(ReadAll(path), "second");
  std::size_t entries = 0;
  for (const auto& e : std::filesystem::directory_iterator(path.parent_path())) {
    (void)e;
    ++entries;
  }
  EXPECT_EQ(entries, 1u);  // no temporary left behind
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dpobs
