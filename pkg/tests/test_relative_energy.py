"""Relative-energy verifier: Taylor-gap properties, residual-pairing
linearity, nonnegativity of the quadratic budget, and the Gronwall-weighted
trajectory inequality."""

import numpy as np
import pytest

from helpers import sample_state
from vepflow.cahn_hilliard import equilibrium_mu
from vepflow.energetics import certify_step
from vepflow.errors import ConfigError
from vepflow.grid import Grid, VectorField
from vepflow.materials import MaterialParams, PlasticParams
from vepflow.matrices import OperatorMatrices
from vepflow.operators import inner_faces, random_divfree_velocity
from vepflow.relative_energy import (
    DEFAULT_TOL_C,
    KORN_CONSTANT,
    RegWeightConfig,
    _TripleOnGrid,
    build_trial,
    default_reg_config,
    dissipative_inequality_check,
    regularity_weight,
    relative_dissipation,
    relative_energy,
    relative_energy_states,
    system_operator_apply,
    verifier_tolerance,
)
from vepflow.state import State
from vepflow.testtriple import make_test_triple
from vepflow.timestepper import advance

PARAMS = MaterialParams(rho1=1.0, rho2=2.0, nu1=0.4, nu2=0.9,
                        eta1=0.8, eta2=0.5, lam=1.0, eps=1.0)
BOX = ((0.15, 0.85), (0.2, 0.9))


@pytest.fixture(scope="module")
def triple():
    return make_test_triple("bump-cos", amplitude={"v": 0.5, "S": 0.3, "phi": 0.5},
                            support_box=BOX, frequency=1.0, params=PARAMS, t_final=1.0)


@pytest.fixture(scope="module")
def trajectory():
    # short certified run shared by the inequality tests
    grid = Grid((16, 16), (1.0, 1.0))
    mats = OperatorMatrices(grid)
    plastic = PlasticParams(a1=0.0, a2=0.0, b1=0.0, b2=0.0)
    rng = np.random.default_rng(11)
    st = State.zeros(grid)
    X, Y = grid.cell_mesh()
    modes = np.zeros(grid.n)
    for kx in range(1, 4):
        for ky in range(1, 4):
            modes += rng.normal() * np.cos(np.pi * kx * X) * np.cos(np.pi * ky * Y)
    st.phi.data[...] = 0.1 * modes / np.max(np.abs(modes))
    st.phi.data -= st.phi.data.mean()
    st.mu.data[...] = equilibrium_mu(PARAMS, grid, st.phi.data)
    states = [st.copy()]
    cur = st
    for _ in range(10):
        new, info = advance(mats, PARAMS, plastic, cur, 2e-3, gamma=1e-3)
        cert = certify_step(mats, PARAMS, plastic, cur, new, info.h, gamma=1e-3)
        assert cert.passed
        cur = new
        states.append(cur.copy())
    return states, plastic


def _random_state(grid, rng, t=0.2):
    st = State.zeros(grid)
    st.v = VectorField(grid, tuple(random_divfree_velocity(grid, rng)))
    for c in st.S.comps:
        c[...] = 0.1 * rng.standard_normal(grid.n)
    st.phi.data[...] = 0.3 * np.tanh(rng.standard_normal(grid.n))
    st.mu.data[...] = rng.standard_normal(grid.n)
    st.t = t
    return st


# ---------------------------------------------------------------------------
# the relative energy itself
# ---------------------------------------------------------------------------

def test_rel_energy_vanishes_on_sampled_triple(triple):
    # sampling the reference onto the solver's own point sets reproduces it
    # bit for bit, so the Taylor gap is exactly zero, not merely small
    for n in (16, 24):
        grid = Grid((n, n), (1.0, 1.0))
        st = sample_state(grid, triple, 0.2)
        R = relative_energy(PARAMS, st, triple)
        assert R.kinetic == 0.0
        assert R.elastic == 0.0
        assert R.phase == 0.0
        assert R.total == 0.0


def test_rel_energy_positive_on_perturbed_state(triple):
    grid = Grid((16, 16), (1.0, 1.0))
    st = sample_state(grid, triple, 0.2)
    rng = np.random.default_rng(3)
    for a in range(2):
        st.v.comps[a][...] += 0.05 * rng.standard_normal(st.v.comps[a].shape)
    for c in st.S.comps:
        c[...] += 0.05 * rng.standard_normal(grid.n)
    X, Y = grid.cell_mesh()
    st.phi.data += 0.05 * np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y)
    R = relative_energy(PARAMS, st, triple)
    assert R.kinetic > 0.0
    assert R.elastic > 0.0
    assert R.phase > 0.0
    assert R.total == pytest.approx(R.kinetic + R.elastic + R.phase, rel=1e-14)


def test_rel_energy_between_states_needs_one_grid():
    a = State.zeros(Grid((8, 8), (1.0, 1.0)))
    b = State.zeros(Grid((12, 12), (1.0, 1.0)))
    with pytest.raises(ConfigError) as err:
        relative_energy_states(PARAMS, a, b)
    assert err.value.code == "releng-grid-mismatch"


def test_unit_interface_guard(triple):
    narrow = MaterialParams(rho1=1.0, rho2=2.0, nu1=0.4, nu2=0.9,
                            eta1=0.8, eta2=0.5, lam=1.0, eps=0.5)
    grid = Grid((8, 8), (1.0, 1.0))
    st = State.zeros(grid)
    st.t = 0.1
    with pytest.raises(ConfigError) as err:
        relative_energy(narrow, st, triple)
    assert err.value.code == "releng-unit-interface"
    with pytest.raises(ConfigError) as err:
        dissipative_inequality_check(narrow, [st, st], triple, 0.0)
    assert err.value.code == "releng-unit-interface"


# ---------------------------------------------------------------------------
# regularity weight
# ---------------------------------------------------------------------------

def test_regularity_weight_formula(triple):
    cfg = RegWeightConfig(korn_constant=KORN_CONSTANT, nu1=0.4)
    sup = triple.stress_sup(0.2)
    assert sup > 0.0
    expect = KORN_CONSTANT ** 2 / 0.4 * sup * sup
    assert regularity_weight(triple, 0.2, cfg) == pytest.approx(expect, rel=1e-14)
    assert regularity_weight(make_test_triple("zero"), 0.2, cfg) == 0.0
    assert default_reg_config(PARAMS).nu1 == PARAMS.nu_min


@pytest.mark.parametrize("kwargs, code", [
    (dict(korn_constant=0.0), "regweight-korn-positive"),
    (dict(nu1=0.0), "regweight-nu-positive"),
])
def test_regweight_validation(kwargs, code):
    with pytest.raises(ConfigError) as err:
        RegWeightConfig(**kwargs)
    assert err.value.code == code


# ---------------------------------------------------------------------------
# residual pairing
# ---------------------------------------------------------------------------

def test_pairing_linear_in_trial(triple):
    grid = Grid((16, 16), (1.0, 1.0))
    rng = np.random.default_rng(0)
    ref = _TripleOnGrid(grid, PARAMS, triple, 0.2)
    X = build_trial(PARAMS, _random_state(grid, rng), ref)
    Y = build_trial(PARAMS, _random_state(grid, rng), ref)
    aX = system_operator_apply(PARAMS, grid, triple, 0.2, X, 1e-3)
    aY = system_operator_apply(PARAMS, grid, triple, 0.2, Y, 1e-3)
    comb = ([2.0 * x + 0.5 * y for x, y in zip(X[0], Y[0])],
            tuple(2.0 * x + 0.5 * y for x, y in zip(X[1], Y[1])),
            2.0 * X[2] + 0.5 * Y[2])
    aC = system_operator_apply(PARAMS, grid, triple, 0.2, comb, 1e-3)
    scale = max(1.0, abs(aX) + abs(aY))
    assert abs(aC - 2.0 * aX - 0.5 * aY) <= 1e-11 * scale


def test_zero_triple_pairing_vanishes():
    grid = Grid((16, 16), (1.0, 1.0))
    rng = np.random.default_rng(1)
    z = make_test_triple("zero", params=PARAMS)
    ref = _TripleOnGrid(grid, PARAMS, z, 0.2)
    trial = build_trial(PARAMS, _random_state(grid, rng), ref)
    assert system_operator_apply(PARAMS, grid, z, 0.2, trial, 1e-3) == 0.0


def test_forcing_enters_pairing_with_minus_sign(triple):
    grid = Grid((16, 16), (1.0, 1.0))
    rng = np.random.default_rng(2)
    ref = _TripleOnGrid(grid, PARAMS, triple, 0.2)
    st = _random_state(grid, rng)
    trial = build_trial(PARAMS, st, ref)
    f = [0.3 * rng.standard_normal(st.v.comps[a].shape) for a in range(2)]
    a0 = system_operator_apply(PARAMS, grid, triple, 0.2, trial, 1e-3)
    af = system_operator_apply(PARAMS, grid, triple, 0.2, trial, 1e-3, forcing=f)
    assert af == pytest.approx(a0 - inner_faces(grid, f, trial[0]), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# relative dissipation
# ---------------------------------------------------------------------------

def test_quadratic_budget_nonnegative(triple):
    grid = Grid((12, 12), (1.0, 1.0))
    rng = np.random.default_rng(7)
    cfg = default_reg_config(PARAMS)
    worst = np.inf
    for _ in range(100):
        st = State.zeros(grid)
        st.v = VectorField(grid, tuple(random_divfree_velocity(grid, rng, amplitude=2.0)))
        for c in st.S.comps:
            c[...] = rng.standard_normal(grid.n) * rng.uniform(0.1, 2.0)
        st.phi.data[...] = rng.uniform(0.2, 0.9) * np.tanh(rng.standard_normal(grid.n))
        st.mu.data[...] = rng.standard_normal(grid.n) * rng.uniform(0.1, 3.0)
        st.t = rng.uniform(0.0, 0.9)
        d = relative_dissipation(PARAMS, st, st.mu.data, triple, gamma=0.0, cfg=cfg)
        worst = min(worst, d.quadratic / max(1.0, abs(d.quadratic)))
    assert worst >= -1e-10


def test_sampled_state_dissipation_collapses(triple):
    # state == reference samples: every difference term carries a zero
    # factor, and the paired quadratures subtract identical floats
    grid = Grid((32, 32), (1.0, 1.0))
    st = sample_state(grid, triple, 0.2)
    d = relative_dissipation(PARAMS, st, st.mu.data, triple, gamma=1e-3)
    assert d.quadratic > 0.0
    assert d.total == 0.0
    assert d.stress_diffusion == 0.0
    assert d.rel_energy.total == 0.0
    assert d.weight == pytest.approx(
        regularity_weight(triple, 0.2, default_reg_config(PARAMS)), rel=1e-14)


# ---------------------------------------------------------------------------
# the trajectory inequality
# ---------------------------------------------------------------------------

def test_zero_triple_inequality_on_certified_run(trajectory):
    states, plastic = trajectory
    z = make_test_triple("zero", params=PARAMS)
    rep = dissipative_inequality_check(PARAMS, states, z, 1e-3, plastic=plastic)
    assert rep.passed
    assert rep.max_defect <= rep.tol
    # the zero triple carries no regularity weight, so the right side stays
    # at the initial relative energy
    assert np.all(rep.weights == 0.0)
    assert np.all(rep.rhs == rep.rhs[0])
    assert rep.rhs[0] > 0.0
    assert rep.defect[0] == 0.0


def test_report_csv_layout(trajectory):
    states, plastic = trajectory
    z = make_test_triple("zero", params=PARAMS)
    rep = dissipative_inequality_check(PARAMS, states, z, 1e-3, plastic=plastic)
    lines = rep.csv_lines()
    assert lines[0] == "time,lhs,rhs,defect,K_value"
    assert len(lines) == len(states) + 2
    assert lines[-1].startswith("# max_defect=")
    for line in lines[1:-1]:
        cols = line.split(",")
        assert len(cols) == 5
        [float(c) for c in cols]
    # row values roundtrip exactly at .17g
    assert float(lines[1].split(",")[1]) == rep.lhs[0]


def test_doubled_korn_weight_keeps_passing(trajectory):
    states, plastic = trajectory
    small = make_test_triple("bump", amplitude={"v": 0.05, "S": 0.05, "phi": 0.1},
                             support_box=BOX, frequency=1.0, params=PARAMS, t_final=1.0)
    base = dissipative_inequality_check(PARAMS, states, small, 1e-3, plastic=plastic)
    doubled = dissipative_inequality_check(
        PARAMS, states, small, 1e-3, plastic=plastic,
        cfg=RegWeightConfig(KORN_CONSTANT * np.sqrt(2.0), PARAMS.nu_min))
    assert base.passed
    assert doubled.passed
    assert doubled.weights[0] == pytest.approx(2.0 * base.weights[0], rel=1e-14)


def test_tol_factor_scales_tolerance(trajectory):
    states, plastic = trajectory
    z = make_test_triple("zero", params=PARAMS)
    rep1 = dissipative_inequality_check(PARAMS, states, z, 1e-3, plastic=plastic)
    rep2 = dissipative_inequality_check(PARAMS, states, z, 1e-3, plastic=plastic,
                                        tol_factor=2.0 * DEFAULT_TOL_C)
    assert rep2.tol == pytest.approx(2.0 * rep1.tol, rel=1e-14)
    rep3 = dissipative_inequality_check(PARAMS, states, z, 1e-3, plastic=plastic, tol=0.125)
    assert rep3.tol == 0.125


def test_verifier_tolerance_formula():
    grid = Grid((10, 20), (1.0, 2.0))
    times = np.array([0.0, 0.1, 0.3])
    expect = DEFAULT_TOL_C * (0.2 + 0.1 * 0.1) * 2.0
    assert verifier_tolerance(grid, times, 2.0) == pytest.approx(expect, rel=1e-14)


def test_trajectory_guards(triple):
    grid = Grid((8, 8), (1.0, 1.0))
    a = State.zeros(grid)
    a.t = 0.0
    with pytest.raises(ConfigError) as err:
        dissipative_inequality_check(PARAMS, [a], triple, 0.0)
    assert err.value.code == "verify-trajectory-short"
    b = State.zeros(grid)
    b.t = 0.0
    with pytest.raises(ConfigError) as err:
        dissipative_inequality_check(PARAMS, [a, b], triple, 0.0)
    assert err.value.code == "verify-times-monotone"
    wide = make_test_triple("bump", amplitude=0.1,
                            support_box=((0.2, 1.4), (0.2, 0.8)), params=PARAMS)
    c = State.zeros(grid)
    c.t = 0.1
    with pytest.raises(ConfigError) as err:
        dissipative_inequality_check(PARAMS, [a, c], wide, 0.0)
    assert err.value.code == "triple-support-outside-domain"
