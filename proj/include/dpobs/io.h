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


// JSON and CSV artifacts. JSON objects keep insertion order so repeated runs
// are byte-identical; CSV floats carry 17 significant digits.

#ifndef DPOBS_IO_H_
#define DPOBS_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "dpobs/contraction.h"
#include "dpobs/matrix.h"
#include "dpobs/models.h"
#include "dpobs/privacy.h"
#include "dpobs/synthesis.h"
#include "json.hpp"

namespace dpobs {

using Json = nlohmann::ordered_json;

std::string FormatDouble(double v);

Json ToJson(const Mat& m);
Mat MatFromJson(const Json& j);
Json ToJson(const NormTag& norm);
Json ToJson(const DomainBox& box);
Json ToJson(const NoiseCalibration& cal);
Json ToJson(const ContractionCertificate& cert);
Json ToJson(const SynthesisProblem& problem);
SynthesisProblem SynthesisProblemFromJson(const Json& j);
Json ToJson(const SynthesisResult& result);
Json ToJson(const Phase1Result& report);
Json ToJson(const Reverification& check);

// Header k, x_1.., y_1.., z_1.., zhat_1.. and one row per step.
std::string TrajectoryCsv(const Trajectory& traj);

// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

}  // namespace dpobs

#endif  // DPOBS_IO_H_
