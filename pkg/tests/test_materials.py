"""Material laws and the plastic proximal map against independent oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import prox_scalar_grid_search
from vepflow.errors import ConfigError
from vepflow.materials import MaterialParams, PlasticParams

# Frozen before the closed form was written: 1-D grid search at resolution
# 1e-6 for zn=1, a=1, b=0.5, sigma=2, h=0.1.  The closed form gives
# (1 - 0.05) / 1.1 = 0.8636363636...
GRID_SEARCH_FROZEN = 0.8636363611111112
CLOSED_FORM_EXPECTED = 0.8636363636363635


def _prox_radius(plastic, g, zn, h):
    """Magnitude the closed-form prox assigns to a cell with |Z| = zn.

    Components (s11, s12) carry Frobenius norm sqrt(2 s11^2 + 2 s12^2), so
    equal components zn/2 give |Z| = zn exactly.
    """
    Z = (np.array([[zn / 2.0]]), np.array([[zn / 2.0]]))
    out = plastic.prox(np.array([[g]]), Z, h, 2)
    return float(np.sqrt(2.0 * (out[0][0, 0] ** 2 + out[1][0, 0] ** 2)))


def test_prox_frozen_case():
    plastic = PlasticParams(a1=1.0, a2=1.0, b1=0.5, b2=0.5, sigma1=2.0, sigma2=2.0)
    got = _prox_radius(plastic, 0.5, 1.0, 0.1)
    assert got == pytest.approx(CLOSED_FORM_EXPECTED, abs=1e-15)
    assert abs(got - GRID_SEARCH_FROZEN) <= 1e-6
    # and the oracle still reproduces its frozen value
    assert prox_scalar_grid_search(1.0, 1.0, 0.5, 2.0, 0.1) == pytest.approx(
        GRID_SEARCH_FROZEN, abs=2e-12
    )


def test_prox_matches_grid_search_battery():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(300):
        zn = float(rng.uniform(0.0, 3.0))
        a = float(rng.uniform(0.0, 2.0))
        b = float(rng.uniform(0.0, 1.0))
        sigma = float(rng.uniform(0.2, 2.5))
        h = float(rng.uniform(1e-3, 0.5))
        plastic = PlasticParams(a1=a, a2=a, b1=b, b2=b, sigma1=sigma, sigma2=sigma)
        got = _prox_radius(plastic, float(rng.random()), zn, h)
        ref = prox_scalar_grid_search(zn, a, b, sigma, h)
        worst = max(worst, abs(got - ref))
    assert worst <= 1e-6


def test_prox_regimes():
    plastic = PlasticParams(a1=1.0, a2=1.0, b1=0.5, b2=0.5, sigma1=1.0, sigma2=1.0)
    h = 0.2
    # below yield: |Z| <= h b pins the stress to zero
    assert _prox_radius(plastic, 0.5, 0.05, h) == 0.0
    # interior: strictly between 0 and the cap
    mid = _prox_radius(plastic, 0.5, 0.8, h)
    assert 0.0 < mid < 1.0
    # capped: large |Z| projects onto the yield ball
    assert _prox_radius(plastic, 0.5, 50.0, h) == pytest.approx(1.0, abs=1e-15)


def test_prox_variational_inequality_sample():
    plastic = PlasticParams(a1=0.7, a2=0.2, b1=0.4, b2=0.1, sigma1=1.4, sigma2=2.0)
    rng = np.random.default_rng(33)
    for _ in range(20):
        G = rng.random((4, 4))
        Z = tuple(1.5 * rng.standard_normal((4, 4)) for _ in range(2))
        h = float(rng.uniform(0.02, 0.4))
        S = plastic.prox(G, Z, h, 2)
        xi = tuple((z - s) / h for z, s in zip(Z, S))
        gap = plastic.subgradient_gap(G, S, xi, 2)
        assert float(np.max(gap)) <= 1e-10


@given(
    zn=st.floats(0.0, 5.0),
    a=st.floats(0.0, 3.0),
    b=st.floats(0.0, 2.0),
    sigma=st.floats(0.1, 4.0),
    h=st.floats(1e-4, 1.0),
)
def test_prox_bounds_property(zn, a, b, sigma, h):
    plastic = PlasticParams(a1=a, a2=a, b1=b, b2=b, sigma1=sigma, sigma2=sigma)
    r = _prox_radius(plastic, 0.3, zn, h)
    assert 0.0 <= r <= sigma + 1e-15
    assert r <= zn + 1e-12  # shrinking: never amplifies the input


@given(
    z1=st.floats(0.0, 4.0),
    z2=st.floats(0.0, 4.0),
    a=st.floats(0.0, 2.0),
    b=st.floats(0.0, 1.0),
    h=st.floats(1e-3, 0.5),
)
def test_prox_nonexpansive_property(z1, z2, a, b, h):
    plastic = PlasticParams(a1=a, a2=a, b1=b, b2=b, sigma1=1.7, sigma2=1.7)
    r1 = _prox_radius(plastic, 0.4, z1, h)
    r2 = _prox_radius(plastic, 0.4, z2, h)
    assert abs(r1 - r2) <= abs(z1 - z2) + 1e-12


def test_prox_identity_when_trivial():
    plastic = PlasticParams(a1=0.0, a2=0.0, b1=0.0, b2=0.0)
    assert plastic.is_trivial
    rng = np.random.default_rng(2)
    Z = tuple(rng.standard_normal((5, 5)) for _ in range(2))
    out = plastic.prox(rng.random((5, 5)), Z, 0.3, 2)
    for o, z in zip(out, Z):
        assert np.array_equal(o, z)


def test_well_convexity_shift():
    params = MaterialParams()
    assert params.kappa >= params.lam
    phi = np.linspace(-0.999, 0.999, 4001)
    assert np.all(params.w_second(phi) + params.kappa >= -1e-12)


def test_kappa_below_lam_rejected():
    with pytest.raises(ConfigError) as err:
        MaterialParams(kappa=0.5, lam=1.0)
    assert err.value.code == "kappa-convexity"


@pytest.mark.parametrize(
    "kwargs, code",
    [
        (dict(rho1=0.0), "rho-positive"),
        (dict(nu2=-0.1), "nu-positive"),
        (dict(eta1=-1.0), "eta-nonneg"),
        (dict(lam=-0.2), "lam-nonneg"),
        (dict(eps=0.0), "eps-positive"),
    ],
)
def test_material_validation_codes(kwargs, code):
    with pytest.raises(ConfigError) as err:
        MaterialParams(**kwargs)
    assert err.value.code == code


@pytest.mark.parametrize(
    "kwargs, code",
    [
        (dict(a1=-0.1), "plastic-a-nonneg"),
        (dict(b2=-0.5), "plastic-b-nonneg"),
        (dict(sigma1=0.0), "plastic-sigma-positive"),
    ],
)
def test_plastic_validation_codes(kwargs, code):
    with pytest.raises(ConfigError) as err:
        PlasticParams(**kwargs)
    assert err.value.code == code


def test_fraction_and_blends():
    params = MaterialParams(rho1=1.0, rho2=3.0, nu1=0.2, nu2=0.6, eta1=1.0, eta2=0.5)
    phi = np.array([-1.0, 0.0, 1.0])
    G = params.fraction(phi)
    assert np.allclose(G, [1.0, 0.5, 0.0])
    # phi = -1 is phase 1, phi = +1 is phase 2
    assert params.density(np.array([-1.0]))[0] == pytest.approx(1.0)
    assert params.density(np.array([1.0]))[0] == pytest.approx(3.0)
    assert params.viscosity(np.array([-1.0]))[0] == pytest.approx(0.2)
    assert params.viscosity(np.array([1.0]))[0] == pytest.approx(0.6)
    assert params.elastic_modulus(np.array([-1.0]))[0] == pytest.approx(1.0)
    assert params.elastic_modulus(np.array([1.0]))[0] == pytest.approx(0.5)
    # the phase fraction is clipped, so coefficient blends stay in range
    assert params.viscosity(np.array([2.0]))[0] == pytest.approx(0.6)
