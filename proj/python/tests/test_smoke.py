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


import math

import numpy as np
import pytest

import dpobs


def test_kappa_half_delta():
    for eps in (0.5, 1.0, 2.0):
        assert dpobs.kappa(eps, 0.5) == pytest.approx(1 / math.sqrt(2 * eps), abs=1e-12)


def test_q_inverse_round_trip():
    for d in (1e-6, 0.05, 0.3):
        assert dpobs.q_function(dpobs.q_inverse(d)) == pytest.approx(d, rel=1e-9)


def test_gaussian_factor_partial_sum():
    g, a = 0.9, 0.25
    k = np.arange(5000)
    oracle = math.sqrt(np.sum((g**k - a**k) ** 2))
    assert dpobs.gaussian_factor(g, a) == pytest.approx(oracle, rel=1e-12)


def test_blockmodel_calibration():
    cal = dpobs.blockmodel_calibrate()
    assert cal["noise"]["kind"] == "laplace"
    assert cal["noise"]["b"] == pytest.approx(6.23e-3, rel=1e-2)
    assert cal["certificate"]["valid"]
    half = dpobs.blockmodel_calibrate(epsilon=2.0)
    assert half["noise"]["b"] == pytest.approx(cal["noise"]["b"] / 2)


def test_calibrate_gaussian_covariance():
    cal = dpobs.calibrate_gaussian(0.1, 1.0, 0.05, [[2.0, 0.0], [0.0, 4.0]])
    sigma = cal["sigma"]
    assert sigma == pytest.approx(dpobs.kappa(1.0, 0.05) * 0.1)
    np.testing.assert_allclose(cal["covariance"], [[sigma**2 / 2, 0], [0, sigma**2 / 4]])


def test_invalid_argument_maps_to_value_error():
    with pytest.raises(ValueError):
        dpobs.calibrate_laplace(1.0, -1.0)


def test_synthesize_small_problem():
    problem = {
        "beta": 0.95,
        "c_obs": [[1.0, 0.0]],
        "jacobian_samples": [[[1.0, 0.1], [0.0, 1.0]], [[1.0, 0.0], [0.2, 0.9]]],
    }
    out = dpobs.synthesize(problem)
    assert out["result"]["converged"]
    assert out["reverification"]["passed"]
    P = np.array(out["result"]["P"])
    L = np.array(out["result"]["L"])
    C = np.array(problem["c_obs"])
    for J in problem["jacobian_samples"]:
        F = np.array(J) - L @ C
        # |F|_P <= beta  <=>  F^T P F <= beta^2 P
        gap = np.linalg.eigvalsh(0.95**2 * P - F.T @ P @ F)
        assert gap.min() >= -1e-8


def test_synthesize_infeasible():
    problem = {"beta": 0.9, "c_obs": [[0.0, 1.0]],
               "jacobian_samples": [[[1.2, 0.0], [0.0, 0.5]]]}
    with pytest.raises(dpobs.InfeasibleError):
        dpobs.synthesize(problem)


def test_simulations_are_seeded():
    a = dpobs.simulate_blockmodel(n_steps=50, seed=3)
    b = dpobs.simulate_blockmodel(n_steps=50, seed=3)
    assert a["zhat"] == b["zhat"]
    assert len(a["x"]) == 50
    sir = dpobs.simulate_sir(n_steps=40, seed=2, grid_step=0.05)
    L = np.array(sir["L"]).ravel()
    assert L[0] < 0 < L[1]
    assert np.shape(sir["zhat"]) == (40, 2)
    quiet = dpobs.simulate_sir(n_steps=40, seed=2, grid_step=0.05, epsilon=None)
    assert quiet["zhat"] == quiet["z"]
    assert quiet["noise"] is None
