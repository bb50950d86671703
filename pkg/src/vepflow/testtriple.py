"""Manufactured smooth reference fields for the trajectory verifier.

A reference triple bundles a divergence-free velocity, a symmetric
trace-free stress, and a phase field, each with hand-coded space and time
derivatives (phase up to fourth order, the rest up to second). Every scalar
building block is a sum of separable terms

    amp * X(x) * Y(y) * T(t)

whose one-dimensional spatial factors are polynomial bumps
((s - a)(c - s))^q on a support interval, optionally modulated by a cosine.
With q = 6 the bump has four continuous derivatives at the support edge, so
all evaluators are continuous across it. The velocity is the perpendicular
gradient of a stream-function scalar, hence exactly divergence free and
compactly supported alongside it. The time factor (1 - t/t_final)^q turns
everything off smoothly before t_final.

Construction runs a dense-sampling certificate: phase bounds, stress norm
against a yield radius when one is supplied, and the divergence residual of
the velocity evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ConfigError
from .materials import MaterialParams, PlasticParams
from .operators import tensor_inner

_Q = 6  # bump exponent; derivatives 0..4 vanish at the support edge


def _leibniz(da, db, upto: int):
    """Derivatives 0..upto of a product from factor derivative lists."""
    return [
        sum(comb(k, j) * da[j] * db[k - j] for j in range(k + 1))
        for k in range(upto + 1)
    ]


class _One:
    def derivs(self, s, upto: int):
        s = np.asarray(s, dtype=float)
        out = [np.ones_like(s)]
        out.extend(np.zeros_like(s) for _ in range(upto))
        return out


class _PolyBump:
    """((s-a)(c-s))^q scaled to peak 1, derivatives through 4th order."""

    def __init__(self, a: float, c: float, q: int = _Q):
        if not c > a:
            raise ConfigError("triple-support-empty", "support interval must have a < c")
        self.a = float(a)
        self.c = float(c)
        self.q = int(q)
        self.scale = ((c - a) / 2.0) ** 2

    def derivs(self, s, upto: int):
        s = np.asarray(s, dtype=float)
        q = self.q
        g = np.clip((s - self.a) * (self.c - s) / self.scale, 0.0, None)
        g1 = (self.a + self.c - 2.0 * s) / self.scale
        g2 = -2.0 / self.scale
        # powers g^(q-4) .. g^q; all terms carry at least g^(q-4), which for
        # q = 6 still vanishes quadratically at the edge
        p = [g ** (q - 4 + k) for k in range(5)]
        out = [p[4]]
        if upto >= 1:
            out.append(q * p[3] * g1)
        if upto >= 2:
            out.append(q * (q - 1) * p[2] * g1 ** 2 + q * p[3] * g2)
        if upto >= 3:
            out.append(
                q * (q - 1) * (q - 2) * p[1] * g1 ** 3
                + 3 * q * (q - 1) * p[2] * g1 * g2
            )
        if upto >= 4:
            out.append(
                q * (q - 1) * (q - 2) * (q - 3) * p[0] * g1 ** 4
                + 6 * q * (q - 1) * (q - 2) * p[1] * g1 ** 2 * g2
                + 3 * q * (q - 1) * p[2] * g2 ** 2
            )
        return out[: upto + 1]


class _Cosine:
    def __init__(self, omega: float, phase: float = 0.0):
        self.omega = float(omega)
        self.phase = float(phase)

    def derivs(self, s, upto: int):
        s = np.asarray(s, dtype=float)
        th = self.omega * s + self.phase
        cyc = [np.cos(th), -np.sin(th), -np.cos(th), np.sin(th)]
        return [self.omega ** k * cyc[k % 4] for k in range(upto + 1)]


class _Product:
    def __init__(self, *factors):
        self.factors = factors

    def derivs(self, s, upto: int):
        out = self.factors[0].derivs(s, upto)
        for f in self.factors[1:]:
            out = _leibniz(out, f.derivs(s, upto), upto)
        return out


class _PolyDecay:
    """(1 - t/t_final)^q for t in [0, t_final], zero afterwards."""

    def __init__(self, t_final: float, q: int = _Q):
        if not t_final > 0:
            raise ConfigError("triple-time-final", "t_final must be positive")
        self.t_final = float(t_final)
        self.q = int(q)

    def derivs(self, t: float, upto: int):
        u = max(1.0 - float(t) / self.t_final, 0.0)
        out = [u ** self.q]
        if upto >= 1:
            out.append(-self.q / self.t_final * u ** (self.q - 1))
        return out[: upto + 1]


@dataclass
class _Term:
    amp: float
    fx: object
    fy: object
    ft: object


class SmoothScalar:
    """Sum of separable terms with mixed derivatives through 4th order in
    space and 1st in time."""

    def __init__(self, terms=()):
        self.terms = list(terms)

    def deriv(self, i: int, j: int, t: float, X: np.ndarray, Y: np.ndarray, dt: int = 0) -> np.ndarray:
        out = np.zeros(np.broadcast(X, Y).shape)
        for term in self.terms:
            dx = term.fx.derivs(X, i)[i]
            dy = term.fy.derivs(Y, j)[j]
            tt = term.ft.derivs(t, dt)[dt]
            out += term.amp * tt * dx * dy
        return out

    def val(self, t, X, Y):
        return self.deriv(0, 0, t, X, Y)

    def grad(self, t, X, Y):
        return [self.deriv(1, 0, t, X, Y), self.deriv(0, 1, t, X, Y)]

    def lap(self, t, X, Y):
        return self.deriv(2, 0, t, X, Y) + self.deriv(0, 2, t, X, Y)

    def grad_lap(self, t, X, Y):
        return [
            self.deriv(3, 0, t, X, Y) + self.deriv(1, 2, t, X, Y),
            self.deriv(2, 1, t, X, Y) + self.deriv(0, 3, t, X, Y),
        ]

    def bilap(self, t, X, Y):
        return (
            self.deriv(4, 0, t, X, Y)
            + 2.0 * self.deriv(2, 2, t, X, Y)
            + self.deriv(0, 4, t, X, Y)
        )


@dataclass
class TripleCertificate:
    max_abs_phase: float
    max_stress_norm: float
    div_residual: float
    yield_radius: float  # inf when no plastic bound was requested


class TestTriple:
    """Smooth reference (velocity, stress, phase) with analytic derivatives.

    Spatial evaluators take a time and a tuple of broadcastable coordinate
    arrays; component lists follow the solver's conventions (velocity by
    axis, stress as independent components of a symmetric trace-free
    tensor). Nonzero families are two-dimensional; the zero triple works in
    any dimension.
    """

    def __init__(self, dim: int, psi: SmoothScalar, s_comps, phase: SmoothScalar,
                 params: MaterialParams, support_box=None, t_final: float = 1.0):
        self.dim = int(dim)
        self.psi = psi
        self.s_comps = tuple(s_comps)
        self.phase_scalar = phase
        self.params = params
        self.support_box = support_box
        self.t_final = float(t_final)
        self.certificate = None
        self._sample_pts = None

    @property
    def n_stress_comps(self) -> int:
        return 2 if self.dim == 2 else 5

    def is_zero(self) -> bool:
        return (
            not self.psi.terms
            and not self.phase_scalar.terms
            and all(not c.terms for c in self.s_comps)
        )

    def _zeros(self, pts):
        return np.zeros(np.broadcast(*pts).shape)

    # -- velocity (perpendicular gradient of psi) --------------------------

    def velocity(self, t, pts):
        if self.is_zero():
            return [self._zeros(pts) for _ in range(self.dim)]
        X, Y = pts
        return [self.psi.deriv(0, 1, t, X, Y), -self.psi.deriv(1, 0, t, X, Y)]

    def velocity_dt(self, t, pts):
        if self.is_zero():
            return [self._zeros(pts) for _ in range(self.dim)]
        X, Y = pts
        return [
            self.psi.deriv(0, 1, t, X, Y, dt=1),
            -self.psi.deriv(1, 0, t, X, Y, dt=1),
        ]

    def velocity_grad(self, t, pts):
        """dict (a, b) -> d v_a / d x_b."""
        if self.is_zero():
            z = self._zeros(pts)
            return {(a, b): z.copy() for a in range(self.dim) for b in range(self.dim)}
        X, Y = pts
        pxy = self.psi.deriv(1, 1, t, X, Y)
        return {
            (0, 0): pxy,
            (0, 1): self.psi.deriv(0, 2, t, X, Y),
            (1, 0): -self.psi.deriv(2, 0, t, X, Y),
            (1, 1): -pxy,
        }

    # -- stress -------------------------------------------------------------

    def stress(self, t, pts):
        if self.is_zero():
            return tuple(self._zeros(pts) for _ in range(self.n_stress_comps))
        X, Y = pts
        return tuple(c.val(t, X, Y) for c in self.s_comps)

    def stress_dt(self, t, pts):
        if self.is_zero():
            return tuple(self._zeros(pts) for _ in range(self.n_stress_comps))
        X, Y = pts
        return tuple(c.deriv(0, 0, t, X, Y, dt=1) for c in self.s_comps)

    def stress_grad(self, t, pts):
        """list over axis b of component tuples d S / d x_b."""
        if self.is_zero():
            return [
                tuple(self._zeros(pts) for _ in range(self.n_stress_comps))
                for _ in range(self.dim)
            ]
        X, Y = pts
        gx = tuple(c.deriv(1, 0, t, X, Y) for c in self.s_comps)
        gy = tuple(c.deriv(0, 1, t, X, Y) for c in self.s_comps)
        return [gx, gy]

    def stress_lap(self, t, pts):
        if self.is_zero():
            return tuple(self._zeros(pts) for _ in range(self.n_stress_comps))
        X, Y = pts
        return tuple(c.lap(t, X, Y) for c in self.s_comps)

    def stress_sup(self, t) -> float:
        """Pointwise Frobenius norm supremum over a dense spatial sample."""
        if self.is_zero():
            return 0.0
        pts = self._samples()
        comps = self.stress(t, pts)
        return float(np.sqrt(np.max(tensor_inner(self.dim, comps, comps))))

    # -- phase and chemical potential ----------------------------------------

    def phase(self, t, pts):
        if self.is_zero():
            return self._zeros(pts)
        X, Y = pts
        return self.phase_scalar.val(t, X, Y)

    def phase_dt(self, t, pts):
        if self.is_zero():
            return self._zeros(pts)
        X, Y = pts
        return self.phase_scalar.deriv(0, 0, t, X, Y, dt=1)

    def phase_grad(self, t, pts):
        if self.is_zero():
            return [self._zeros(pts) for _ in range(self.dim)]
        X, Y = pts
        return self.phase_scalar.grad(t, X, Y)

    def phase_lap(self, t, pts):
        if self.is_zero():
            return self._zeros(pts)
        X, Y = pts
        return self.phase_scalar.lap(t, X, Y)

    def chem(self, t, pts):
        """mu = -lap(phase) + W'(phase)."""
        if self.is_zero():
            return self._zeros(pts)
        X, Y = pts
        return -self.phase_scalar.lap(t, X, Y) + self.params.w_prime(
            self.phase_scalar.val(t, X, Y)
        )

    def chem_grad(self, t, pts):
        if self.is_zero():
            return [self._zeros(pts) for _ in range(self.dim)]
        X, Y = pts
        ph = self.phase_scalar.val(t, X, Y)
        w2 = self.params.w_second(ph)
        gl = self.phase_scalar.grad_lap(t, X, Y)
        gp = self.phase_scalar.grad(t, X, Y)
        return [-gl[a] + w2 * gp[a] for a in range(2)]

    def chem_lap(self, t, pts):
        if self.is_zero():
            return self._zeros(pts)
        X, Y = pts
        ph = self.phase_scalar.val(t, X, Y)
        gp = self.phase_scalar.grad(t, X, Y)
        lp = self.phase_scalar.lap(t, X, Y)
        gp2 = sum(g * g for g in gp)
        return (
            -self.phase_scalar.bilap(t, X, Y)
            + self.params.w_second(ph) * lp
            + self.params.w_third(ph) * gp2
        )

    # -- certification ---------------------------------------------------------

    def _samples(self, per_axis: int = 160):
        if self._sample_pts is None:
            if self.support_box is None:
                self._sample_pts = tuple(np.zeros((1, 1)) for _ in range(2))
            else:
                (x0, x1), (y0, y1) = self.support_box
                xs = np.linspace(x0, x1, per_axis)
                ys = np.linspace(y0, y1, per_axis)
                self._sample_pts = tuple(np.meshgrid(xs, ys, indexing="ij"))
        return self._sample_pts

    def certify(self, plastic: PlasticParams = None, phase_margin: float = 1e-3) -> TripleCertificate:
        """Dense-sampling check of the admissibility invariants; raises on
        violation and stores the certificate on success."""
        pts = self._samples()
        times = np.linspace(0.0, self.t_final, 9)
        max_phi = 0.0
        max_s = 0.0
        div_res = 0.0
        for t in times:
            max_phi = max(max_phi, float(np.max(np.abs(self.phase(t, pts)))))
            comps = self.stress(t, pts)
            max_s = max(max_s, float(np.sqrt(np.max(tensor_inner(self.dim, comps, comps)))))
            g = self.velocity_grad(t, pts)
            div_res = max(div_res, float(np.max(np.abs(sum(g[(a, a)] for a in range(self.dim))))))
        if max_phi > 1.0 - phase_margin:
            raise ConfigError(
                "triple-phase-range",
                f"reference phase reaches {max_phi:.6g}, must stay below {1.0 - phase_margin:.6g}",
            )
        radius = np.inf
        if plastic is not None and not plastic.is_trivial:
            radius = float(min(plastic.sigma1, plastic.sigma2))
            if max_s >= radius:
                raise ConfigError(
                    "triple-stress-yield",
                    f"reference stress norm {max_s:.6g} exceeds the yield radius {radius:.6g}",
                )
        scale = max([1.0] + [abs(term.amp) for term in self.psi.terms])
        if div_res > 1e-12 * scale:
            raise ConfigError(
                "triple-not-divfree",
                f"velocity divergence residual {div_res:.3e} on dense samples",
            )
        self.certificate = TripleCertificate(max_phi, max_s, div_res, radius)
        return self.certificate


_FAMILIES = ("zero", "bump", "bump-cos")


def make_test_triple(
    family_id: str,
    amplitude=0.0,
    support_box=None,
    frequency: float = 1.0,
    params: MaterialParams = None,
    t_final: float = 1.0,
    dim: int = 2,
    plastic: PlasticParams = None,
) -> TestTriple:
    """Build a reference triple from one of the built-in families.

    amplitude is a float applied to all three fields, or a mapping with keys
    "v", "S", "phi". The phase amplitude must stay below 1. support_box is
    ((x0, x1), (y0, y1)); the time support is [0, t_final]. "bump" uses pure
    polynomial bumps; "bump-cos" modulates them with `frequency` cosine
    cycles across the box.
    """
    if family_id not in _FAMILIES:
        raise ConfigError(
            "triple-family-unknown",
            f"unknown triple family {family_id!r}; choose from {_FAMILIES}",
        )
    if params is None:
        params = MaterialParams(rho1=1.0, rho2=1.0, nu1=1.0, nu2=1.0, eta1=1.0, eta2=1.0, lam=1.0, eps=1.0)
    if isinstance(amplitude, dict):
        amp_v = float(amplitude.get("v", 0.0))
        amp_s = float(amplitude.get("S", 0.0))
        amp_p = float(amplitude.get("phi", 0.0))
    else:
        amp_v = amp_s = amp_p = float(amplitude)

    zero = family_id == "zero" or (amp_v == 0.0 and amp_s == 0.0 and amp_p == 0.0)
    if zero:
        triple = TestTriple(
            dim,
            SmoothScalar(),
            tuple(SmoothScalar() for _ in range(2 if dim == 2 else 5)),
            SmoothScalar(),
            params,
            support_box=None,
            t_final=t_final,
        )
        triple.certificate = TripleCertificate(0.0, 0.0, 0.0, np.inf)
        return triple

    if dim != 2:
        raise ConfigError("triple-dim", "nonzero triple families are two-dimensional")
    if support_box is None:
        raise ConfigError("triple-support-missing", "nonzero families need a support_box")
    (x0, x1), (y0, y1) = support_box
    if abs(amp_p) >= 1.0:
        raise ConfigError("triple-phase-range", "phase amplitude must be below 1")

    tau = _PolyDecay(t_final)

    def axis_factor(a, c, cycles, phase=0.0):
        bump = _PolyBump(a, c)
        if family_id == "bump":
            return bump
        omega = 2.0 * np.pi * cycles / (c - a)
        return _Product(bump, _Cosine(omega, phase))

    fx = axis_factor(x0, x1, frequency)
    fy = axis_factor(y0, y1, frequency)
    # slightly detuned factors so stress and phase do not just replicate the
    # stream bump
    fx2 = axis_factor(x0, x1, 0.5 * frequency, phase=0.3)
    fy2 = axis_factor(y0, y1, 0.5 * frequency, phase=-0.2)

    psi = SmoothScalar([_Term(amp_v, fx, fy, tau)])
    s11 = SmoothScalar([_Term(amp_s, fx2, fy, tau)])
    s12 = SmoothScalar([_Term(-0.75 * amp_s, fx, fy2, tau)])
    phase = SmoothScalar([_Term(amp_p, fx2, fy2, tau)])

    triple = TestTriple(2, psi, (s11, s12), phase, params,
                        support_box=((float(x0), float(x1)), (float(y0), float(y1))),
                        t_final=t_final)
    triple.certify(plastic=plastic)
    return triple
