"""Saddle-point velocity solve: form agreement, projection, Stokes MMS."""

import numpy as np
import pytest

from vepflow import operators as ops
from vepflow.grid import Grid
from vepflow.matrices import OperatorMatrices
from vepflow.momentum import assemble_momentum_operator, project_divfree, solve_saddle


@pytest.mark.parametrize("dim,n", [(2, (9, 7)), (3, (5, 4, 6))])
def test_viscous_form_matches_quadrature(dim, n):
    g = Grid(n, tuple(1.0 + 0.1 * a for a in range(dim)))
    mats = OperatorMatrices(g)
    rng = np.random.default_rng(3)
    u = ops.random_divfree_velocity(g, rng)
    nu = 0.5 + rng.random(g.n)
    udof = mats.pack(u)
    quad = float(udof @ (mats.visc_matrix(nu) @ udof))
    V = g.cell_volume
    arr = V * sum(float(np.sum(2.0 * nu * e * e)) for e in ops.strain_diag(g, u))
    for a, b in ops.axis_pairs(dim):
        e = ops.strain_offdiag(g, u, a, b, "noslip")
        w = ops.stag_weights(g, (a, b))
        nu_up = ops.avg_cell_to_stagpair(nu, (a, b))
        arr += 4.0 * float(np.sum(w * nu_up * e * e))
    assert abs(quad - arr) <= 1e-11 * abs(arr)


@pytest.mark.parametrize("dim,n", [(2, (9, 7)), (3, (5, 4, 6))])
def test_convection_matrix_skew(dim, n):
    g = Grid(n, (1.0,) * dim)
    mats = OperatorMatrices(g)
    rng = np.random.default_rng(5)
    u = ops.random_divfree_velocity(g, rng)
    m = ops.random_divfree_velocity(g, rng)
    udof = mats.pack(u)
    form = float(udof @ (mats.convection_matrix(m) @ udof))
    scale = max(1.0, float(udof @ udof))
    assert abs(form) <= 1e-12 * scale


def test_pack_unpack_roundtrip():
    g = Grid((8, 6), (1.0, 1.0))
    mats = OperatorMatrices(g)
    u = ops.random_divfree_velocity(g, np.random.default_rng(1))
    u2 = mats.unpack(mats.pack(u))
    # interior faces come back bit-for-bit; wall faces are dofs pinned to zero
    assert np.array_equal(u2[0][1:-1, :], u[0][1:-1, :])
    assert np.array_equal(u2[1][:, 1:-1], u[1][:, 1:-1])
    assert float(np.abs(u2[0][0, :]).max()) == 0.0
    assert float(np.abs(u2[1][:, 0]).max()) == 0.0


def test_projection_fixes_divfree_and_kills_divergence():
    g = Grid((16, 16), (1.0, 1.0))
    mats = OperatorMatrices(g)
    rng = np.random.default_rng(7)
    u = ops.random_divfree_velocity(g, rng)
    up = project_divfree(mats, u)
    assert max(float(np.abs(up[a] - u[a]).max()) for a in range(2)) <= 1e-10
    # perturb with a gradient; projection must remove it
    f = rng.normal(size=g.n)
    gr = ops.gradient(g, f)
    w = [u[a] + gr[a] for a in range(2)]
    # zero the wall-normal boundary faces so the field is admissible
    w[0][0, :] = w[0][-1, :] = 0.0
    w[1][:, 0] = w[1][:, -1] = 0.0
    wp = project_divfree(mats, w)
    assert float(np.abs(ops.divergence(g, wp)).max()) <= 1e-10


def _stokes_mms_error(m):
    def tfun(s):
        return s * (1.0 - s)

    def X(s):
        return tfun(s) ** 3

    def X1(s):
        return 3.0 * tfun(s) ** 2 * (1.0 - 2.0 * s)

    def X2(s):
        t, tp = tfun(s), 1.0 - 2.0 * s
        return 6.0 * t * tp * tp - 6.0 * t * t

    def X3(s):
        t, tp = tfun(s), 1.0 - 2.0 * s
        return 6.0 * tp ** 3 - 36.0 * t * tp

    def fx(x, y):
        return -(X2(x) * X1(y) + X(x) * X3(y)) + np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)

    def fy(x, y):
        return (X3(x) * X(y) + X1(x) * X2(y)) + np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)

    g = Grid((m, m), (1.0, 1.0))
    mats = OperatorMatrices(g)
    Xu, Yu = g.face_mesh(0)
    Xv, Yv = g.face_mesh(1)
    rhs = g.cell_volume * mats.pack([fx(Xu, Yu), fy(Xv, Yv)])
    A = assemble_momentum_operator(mats, np.ones(g.n))
    u, p, res = solve_saddle(mats, A, rhs)
    assert res <= 1e-10
    err = [u[0] - X(Xu) * X1(Yu), u[1] + X1(Xv) * X(Yv)]
    return ops.norm_faces(g, err)


def test_stokes_mms_second_order():
    errs = [_stokes_mms_error(m) for m in (16, 32, 64)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    for r in ratios:
        assert 3.2 <= r <= 4.8, (errs, ratios)


def test_saddle_velocity_divfree():
    g = Grid((20, 20), (1.0, 1.0))
    mats = OperatorMatrices(g)
    rng = np.random.default_rng(11)
    rhs = g.cell_volume * mats.pack([rng.normal(size=g.face_shape(0)),
                                     rng.normal(size=g.face_shape(1))])
    A = assemble_momentum_operator(mats, 0.5 + np.zeros(g.n))
    u, p, res = solve_saddle(mats, A, rhs)
    assert float(np.abs(ops.divergence(g, u)).max()) <= 1e-9
