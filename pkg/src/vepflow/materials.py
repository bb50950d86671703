"""Material laws: double-well free energy, phase-dependent coefficients, and
the plastic dissipation potential with its proximal map.

Sign and unit conventions:
  - the order parameter phi lives in (-1, 1); G(phi) = (1 - phi)/2 is the
    fraction of material 1, clamped to [0, 1] for evaluation of blends
  - the logarithmic well W(phi) = ((1+phi)ln(1+phi) + (1-phi)ln(1-phi))/2
    - lam phi^2 / 2 separates phases for lam > 1; adding kappa phi^2 / 2 with
    kappa >= lam makes W_kappa convex, which is what the implicit phase-field
    step exploits
  - the plastic potential per unit volume is a(G)/2 |S|^2 + b(G) |S| for
    |S| <= sigma(G) and +infinity beyond, with the convention 0 * inf = 0 so
    a vanishing coefficient never resurrects an infinite branch
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def _require(cond: bool, code: str, message: str) -> None:
    if not cond:
        raise ConfigError(code, message)


@dataclass(frozen=True)
class MaterialParams:
    """Densities, viscosities, elastic moduli, and phase-field constants."""

    rho1: float = 1.0
    rho2: float = 1.0
    nu1: float = 1.0
    nu2: float = 1.0
    eta1: float = 1.0
    eta2: float = 1.0
    lam: float = 1.0
    eps: float = 1.0
    kappa: float = None  # defaults to lam, the smallest convexifying shift

    def __post_init__(self):
        if self.kappa is None:
            object.__setattr__(self, "kappa", float(self.lam))
        _require(self.rho1 > 0 and self.rho2 > 0, "rho-positive", "densities must be positive")
        _require(self.nu1 > 0 and self.nu2 > 0, "nu-positive", "viscosities must be positive")
        _require(self.eta1 >= 0 and self.eta2 >= 0, "eta-nonneg", "elastic moduli must be nonnegative")
        _require(self.lam >= 0, "lam-nonneg", "well parameter lam must be nonnegative")
        _require(self.eps > 0, "eps-positive", "interface width eps must be positive")
        _require(
            self.kappa >= self.lam,
            "kappa-convexity",
            "kappa must be >= lam so that W + kappa phi^2/2 is convex",
        )

    # -- double well ------------------------------------------------------

    def w_eval(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 0.5 * ((1.0 + phi) * np.log1p(phi) + (1.0 - phi) * np.log1p(-phi)) - 0.5 * self.lam * phi * phi

    def w_prime(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 0.5 * (np.log1p(phi) - np.log1p(-phi)) - self.lam * phi

    def w_second(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 1.0 / (1.0 - phi * phi) - self.lam

    def w_third(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 2.0 * phi / (1.0 - phi * phi) ** 2

    # convexified well W_kappa = W + kappa phi^2/2 (second derivative
    # 1/(1-phi^2) + (kappa - lam) >= 1 on (-1,1))

    def w_kappa_eval(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self.w_eval(phi) + 0.5 * self.kappa * phi * phi

    def w_kappa_prime(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self.w_prime(phi) + self.kappa * phi

    def w_kappa_second(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self.w_second(phi) + self.kappa

    # -- phase blends -----------------------------------------------------

    @staticmethod
    def fraction(phi):
        """G(phi) = (1 - phi)/2, clamped to [0, 1]."""
        return np.clip(0.5 * (1.0 - np.asarray(phi, dtype=float)), 0.0, 1.0)

    def density(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 0.5 * (self.rho1 + self.rho2) + 0.5 * (self.rho2 - self.rho1) * phi

    @property
    def density_contrast(self) -> float:
        """Coefficient (rho2 - rho1)/2 of the diffusive mass flux -grad mu."""
        return 0.5 * (self.rho2 - self.rho1)

    def viscosity(self, phi):
        G = self.fraction(phi)
        return self.nu1 * G + self.nu2 * (1.0 - G)

    def elastic_modulus(self, phi):
        G = self.fraction(phi)
        return self.eta1 * G + self.eta2 * (1.0 - G)

    @property
    def nu_min(self) -> float:
        return min(self.nu1, self.nu2)


@dataclass(frozen=True)
class PlasticParams:
    """Per-phase plastic coefficients: quadratic hardening a, yield offset b,
    stress cap sigma (may be inf)."""

    a1: float = 0.0
    a2: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    sigma1: float = np.inf
    sigma2: float = np.inf

    def __post_init__(self):
        _require(self.a1 >= 0 and self.a2 >= 0, "plastic-a-nonneg", "hardening coefficients must be nonnegative")
        _require(self.b1 >= 0 and self.b2 >= 0, "plastic-b-nonneg", "yield offsets must be nonnegative")
        _require(self.sigma1 > 0 and self.sigma2 > 0, "plastic-sigma-positive", "stress caps must be positive")

    @property
    def is_trivial(self) -> bool:
        return (
            self.a1 == 0.0
            and self.a2 == 0.0
            and self.b1 == 0.0
            and self.b2 == 0.0
            and np.isinf(self.sigma1)
            and np.isinf(self.sigma2)
        )

    def effective(self, G):
        """Blended coefficients a(G), b(G), sigma(G) for G in [0, 1].

        sigma blends as the min whenever either phase is present with positive
        fraction: the indicator of {|S| <= sigma} blends by convex combination
        of indicators, which is again an indicator of the smaller ball unless
        one weight vanishes.
        """
        G = np.asarray(G, dtype=float)
        a = self.a1 * G + self.a2 * (1.0 - G)
        b = self.b1 * G + self.b2 * (1.0 - G)
        sig1 = np.where(G > 0.0, self.sigma1, np.inf)
        sig2 = np.where(G < 1.0, self.sigma2, np.inf)
        sigma = np.minimum(sig1, sig2)
        return a, b, sigma

    def potential(self, G, s_norm):
        """Pointwise potential value at Frobenius norm s_norm; +inf outside
        the cap, with 0 * inf = 0 handled by the blend in ``effective``."""
        a, b, sigma = self.effective(G)
        s = np.asarray(s_norm, dtype=float)
        val = 0.5 * a * s * s + b * s
        return np.where(s <= sigma * (1.0 + 1e-12), val, np.inf)

    def prox_scale(self, G, z_norm, h: float):
        """Scalar part of the proximal map of h * potential: the minimizer of
        (t - z)^2/2 + h(a t^2/2 + b t) over t in [0, sigma] for z = |Z|.

        The full map is S = prox(Z) = t * Z/|Z| (and 0 for Z = 0): the
        objective only depends on |S| once the direction is aligned with Z.
        """
        a, b, sigma = self.effective(G)
        z = np.asarray(z_norm, dtype=float)
        t = (z - h * b) / (1.0 + h * a)
        cap = np.where(np.isinf(sigma), np.finfo(float).max, sigma)
        return np.clip(t, 0.0, cap)

    def prox(self, G, Zcomps, h: float, dim: int):
        """Componentwise proximal map on trace-free symmetric fields."""
        from .operators import tensor_inner

        z = np.sqrt(np.maximum(tensor_inner(dim, Zcomps, Zcomps), 0.0))
        t = self.prox_scale(G, z, h)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(z > 0.0, t / np.where(z > 0.0, z, 1.0), 0.0)
        return tuple(scale * c for c in Zcomps)

    def subgradient_gap(self, G, Scomps, Xicomps, dim: int):
        """Max violation of the variational inequality xi in dP(S):
        P(T) >= P(S) + xi : (T - S) for sampled admissible T. Returns the
        worst gap over a deterministic sample of directions and radii; a
        nonpositive value up to roundoff certifies the inclusion pointwise."""
        from .operators import tensor_inner

        a, b, sigma = self.effective(G)
        s = np.sqrt(np.maximum(tensor_inner(dim, Scomps, Scomps), 0.0))
        p_s = 0.5 * a * s * s + b * s
        worst = np.full_like(s, -np.inf)
        cap = np.where(np.isinf(sigma), np.maximum(2.0 * s, 1.0), sigma)
        # sample T = r * (unit direction): the aligned direction is extremal
        # for this potential, plus the opposite one and zero
        xi_dot_s = tensor_inner(dim, Xicomps, Scomps)
        xi_norm = np.sqrt(np.maximum(tensor_inner(dim, Xicomps, Xicomps), 0.0))
        for r_frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            r = r_frac * cap
            p_t = 0.5 * a * r * r + b * r
            # aligned: xi:(T-S) = r*xi:S/|S| - xi:S (worst when T aligned with xi)
            with np.errstate(invalid="ignore", divide="ignore"):
                gap_aligned = p_s + r * xi_norm - xi_dot_s - p_t
            worst = np.maximum(worst, gap_aligned)
        return worst
