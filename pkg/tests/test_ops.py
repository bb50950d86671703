"""Discrete-calculus identities and operator convergence."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vepflow import checks, operators as ops
from vepflow.grid import Grid


def _divfree(grid, seed, amplitude=1.0):
    return ops.random_divfree_velocity(grid, np.random.default_rng(seed), amplitude=amplitude)


@pytest.mark.parametrize("dim", [2, 3])
def test_identity_battery(dim):
    for r in checks.identity_checks(dim=dim):
        assert r.passed, r.line()


def test_grad_div_adjoint_direct():
    g = Grid((13, 9), (1.1, 0.8))
    rng = np.random.default_rng(4)
    f = rng.normal(size=g.n)
    u = _divfree(g, 5)
    lhs = ops.inner_faces(g, ops.gradient(g, f), u)
    rhs = -ops.inner_cells(g, f, ops.divergence(g, u))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


def test_advection_antisymmetry_direct():
    g = Grid((12, 12), (1.0, 1.0))
    u = _divfree(g, 8)
    rng = np.random.default_rng(9)
    f = rng.normal(size=g.n)
    q = rng.normal(size=g.n)
    lhs = ops.inner_cells(g, ops.advect_scalar(g, u, f), q)
    rhs = -ops.inner_cells(g, f, ops.advect_scalar(g, u, q))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)
    # and exactly zero pairing against itself
    self_pair = ops.inner_cells(g, ops.advect_scalar(g, u, f), f)
    assert abs(self_pair) <= 1e-12 * float(np.abs(f).max() ** 2)


def test_laplacian_is_div_grad():
    g = Grid((10, 14), (1.0, 1.3))
    rng = np.random.default_rng(2)
    f = rng.normal(size=g.n)
    q = rng.normal(size=g.n)
    # quadratic form of the Neumann Laplacian equals minus the gradient form
    lhs = ops.inner_cells(g, ops.laplacian_neumann(g, f), q)
    rhs = -ops.inner_grad_faces(g, f, q)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


@pytest.mark.parametrize("dim", [2, 3])
def test_two_sym_grad_identity(dim):
    r = checks.strain_identity_check(dim=dim, samples=20)
    assert r.passed, r.line()


@pytest.mark.parametrize("dim", [2, 3])
def test_korn_constant_sqrt2(dim):
    r = checks.korn_check(dim=dim, samples=200)
    assert r.passed, r.line()
    # the bound 2 is attained, so the discrete constant is exactly sqrt(2)
    assert r.value <= 2.0 * (1.0 + 1e-10)


def test_stream_velocity_divfree_noslip():
    g = Grid((24, 18), (1.0, 1.0))
    Xn, Yn = g.mesh((True, True))
    psi = np.sin(np.pi * Xn) ** 2 * np.sin(np.pi * Yn) ** 2
    psi[0, :] = psi[-1, :] = psi[:, 0] = psi[:, -1] = 0.0
    u = ops.stream_velocity(g, psi)
    assert float(np.abs(ops.divergence(g, u)).max()) <= 1e-13
    assert float(np.abs(u[0][0, :]).max()) == 0.0
    assert float(np.abs(u[0][-1, :]).max()) == 0.0
    assert float(np.abs(u[1][:, 0]).max()) == 0.0
    assert float(np.abs(u[1][:, -1]).max()) == 0.0


def test_richardson_ratios_32_to_64():
    for r in checks.richardson_checks(n_coarse=32):
        assert r.passed, r.line()
        assert 3.2 <= r.value <= 4.8, r.line()


@given(nx=st.integers(6, 14), ny=st.integers(6, 14), seed=st.integers(0, 10 ** 6))
def test_advection_skew_property(nx, ny, seed):
    g = Grid((nx, ny), (1.0, 1.0))
    u = _divfree(g, seed)
    rng = np.random.default_rng(seed + 1)
    f = rng.normal(size=g.n)
    pair = ops.inner_cells(g, ops.advect_scalar(g, u, f), f)
    scale = max(1.0, float(np.abs(f).max()) ** 2 * float(max(np.abs(c).max() for c in u)))
    assert abs(pair) <= 1e-11 * scale


@given(seed=st.integers(0, 10 ** 6))
def test_jaumann_pointwise_neutral_property(seed):
    rng = np.random.default_rng(seed)
    S = tuple(rng.normal(size=(7, 7)) for _ in range(2))
    W = (rng.normal(size=(7, 7)),)
    jc = ops.jaumann_commutator(2, S, W)
    # the commutator is orthogonal to S cell by cell
    dot = sum(j * s for j, s in zip(jc, S))
    assert float(np.abs(dot).max()) <= 1e-12 * max(
        1.0, float(max(np.abs(c).max() for c in S)) ** 2
    )
