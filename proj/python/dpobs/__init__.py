# Copyright 2026 The dpobs Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Differentially private contracting observers."""

from dpobs._core import (
    InfeasibleError,
    blockmodel_calibrate,
    calibrate_gaussian,
    calibrate_laplace,
    gaussian_factor,
    kappa,
    observer_sensitivity,
    q_function,
    q_inverse,
    simulate_blockmodel,
    simulate_sir,
    sir_problem,
    synthesize,
)

__all__ = [
    "InfeasibleError",
    "blockmodel_calibrate",
    "calibrate_gaussian",
    "calibrate_laplace",
    "gaussian_factor",
    "kappa",
    "observer_sensitivity",
    "q_function",
    "q_inverse",
    "simulate_blockmodel",
    "simulate_sir",
    "sir_problem",
    "synthesize",
]
