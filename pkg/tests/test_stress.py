"""Implicit stress step against a dense monolithic projected-gradient solve."""

import numpy as np
import pytest

from helpers import dense_stress_oracle
from vepflow.errors import StressNonConvergence
from vepflow.grid import Grid
from vepflow.materials import PlasticParams
from vepflow.matrices import OperatorMatrices
from vepflow.operators import random_divfree_velocity, tensor_inner
from vepflow.stress import solve_stress


@pytest.fixture
def small():
    g = Grid((8, 8), (1.0, 1.0))
    return g, OperatorMatrices(g)


PLASTIC = PlasticParams(a1=0.6, a2=0.1, b1=0.25, b2=0.05, sigma1=1.5, sigma2=np.inf)


def _case(g, seed, amp):
    rng = np.random.default_rng(seed)
    v = random_divfree_velocity(g, rng, amplitude=amp)
    eta = 0.5 + rng.random(g.n)
    G = rng.random(g.n)
    S_old = tuple(0.4 * rng.standard_normal(g.n) for _ in range(2))
    return v, eta, G, S_old


@pytest.mark.parametrize("gamma,h,amp", [(0.02, 0.01, 0.25), (0.0, 0.01, 0.25), (0.05, 0.005, 0.4)])
def test_matches_dense_monolithic_solve(small, gamma, h, amp):
    g, mats = small
    v, eta, G, S_old = _case(g, 12, amp)
    res = solve_stress(mats, PLASTIC, eta, G, S_old, v, h, gamma=gamma, tol=1e-13)
    S_or, iters, tau = dense_stress_oracle(g, PLASTIC, eta, G, S_old, v, h, gamma)
    gap = max(float(np.max(np.abs(a - b))) for a, b in zip(res.comps, S_or))
    assert gap <= 1e-7, f"gap {gap:.3e} after fb iters {iters} (tau {tau:.3g})"


def test_xi_satisfies_variational_inequality(small):
    g, mats = small
    v, eta, G, S_old = _case(g, 9, 0.3)
    res = solve_stress(mats, PLASTIC, eta, G, S_old, v, 0.01, gamma=0.02, tol=1e-13)
    gap = PLASTIC.subgradient_gap(G, res.comps, res.xi, 2)
    assert float(np.max(gap)) <= 1e-10


def test_respects_yield_cap(small):
    g, mats = small
    capped = PlasticParams(a1=0.2, a2=0.2, b1=0.1, b2=0.1, sigma1=0.7, sigma2=0.7)
    v, eta, G, S_old = _case(g, 15, 0.25)
    S_old = tuple(3.0 * c for c in S_old)  # start well outside the ball
    res = solve_stress(mats, capped, eta, G, S_old, v, 0.01, gamma=0.01, tol=1e-12)
    norm = np.sqrt(np.maximum(tensor_inner(2, res.comps, res.comps), 0.0))
    assert float(norm.max()) <= 0.7 * (1.0 + 1e-12)


def test_warm_start_agrees_with_cold(small):
    g, mats = small
    v, eta, G, S_old = _case(g, 21, 0.25)
    cold = solve_stress(mats, PLASTIC, eta, G, S_old, v, 0.01, gamma=0.02, tol=1e-13)
    warm = solve_stress(mats, PLASTIC, eta, G, S_old, v, 0.01, gamma=0.02, tol=1e-13,
                        warm=cold.comps)
    gap = max(float(np.max(np.abs(a - b))) for a, b in zip(cold.comps, warm.comps))
    assert gap <= 1e-11
    assert warm.iterations <= cold.iterations


def test_rest_state_decays_toward_zero(small):
    g, mats = small
    rng = np.random.default_rng(2)
    S_old = tuple(0.5 * rng.standard_normal(g.n) for _ in range(2))
    eta = np.ones(g.n)
    G = 0.5 * np.ones(g.n)
    res = solve_stress(mats, PLASTIC, eta, G, S_old, None, 0.05, gamma=0.0, tol=1e-13)
    n_old = np.sqrt(np.maximum(tensor_inner(2, S_old, S_old), 0.0))
    n_new = np.sqrt(np.maximum(tensor_inner(2, res.comps, res.comps), 0.0))
    assert np.all(n_new <= n_old + 1e-14)


def test_nonconvergence_raises(small):
    g, mats = small
    v, eta, G, S_old = _case(g, 4, 8.0)  # velocity far outside the contraction range
    with pytest.raises(StressNonConvergence):
        solve_stress(mats, PLASTIC, eta, G, S_old, v, 2.0, gamma=0.5, tol=1e-14, max_iter=50)
