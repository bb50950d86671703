"""Implicit step for the order parameter / chemical potential pair.

One backward-Euler step of

    (phi' - phi)/h + v . grad phi = lap mu'
    mu' = -eps lap phi' + (1/eps) Wk'(phi') - (kappa/eps)(phi' + phi)/2

with lagged transport (v and the advected phi are frozen data). Splitting the
well into the convex Wk = W + kappa phi^2/2 treated implicitly and the
concave -kappa phi^2/2 treated by the midpoint makes the phase energy
decrease step by step regardless of h, and the logarithmic barrier keeps
phi' strictly inside (-1, 1) as long as the Newton iterates stay there,
which the damping below enforces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NewtonNonConvergence
from .materials import MaterialParams
from .matrices import OperatorMatrices
from .operators import advect_scalar, laplacian_neumann


@dataclass
class CHResult:
    phi: np.ndarray
    mu: np.ndarray
    iterations: int
    residual: float


def equilibrium_mu(params: MaterialParams, grid, phi: np.ndarray) -> np.ndarray:
    """Chemical potential consistent with phi at zero time derivative."""
    return -params.eps * laplacian_neumann(grid, phi) + params.w_prime(phi) / params.eps


def solve_ch(
    mats: OperatorMatrices,
    params: MaterialParams,
    phi_old: np.ndarray,
    h: float,
    vcomps=None,
    warm=None,
    tol: float = 1e-11,
    max_iter: int = 60,
    interior_margin: float = 1e-9,
) -> CHResult:
    grid = mats.grid
    eps = params.eps
    kappa = params.kappa
    nc = mats.n_cells

    if np.max(np.abs(phi_old)) >= 1.0 - interior_margin:
        raise NewtonNonConvergence(
            "previous order parameter touches the interval ends", 0, float(np.max(np.abs(phi_old)))
        )

    adv = advect_scalar(grid, vcomps, phi_old) if vcomps is not None else np.zeros(grid.n)

    if warm is not None:
        phi = np.array(warm[0], dtype=float)
        mu = np.array(warm[1], dtype=float)
        if np.max(np.abs(phi)) >= 1.0 - interior_margin:
            phi = phi_old.copy()
            mu = equilibrium_mu(params, grid, phi_old)
    else:
        phi = phi_old.copy()
        mu = equilibrium_mu(params, grid, phi_old)

    L = mats.lap_n
    eye = sp.identity(nc, format="csr")

    def residuals(phi_a, mu_a):
        r1 = (phi_a - phi_old) / h + adv - laplacian_neumann(grid, mu_a)
        r2 = (
            -eps * laplacian_neumann(grid, phi_a)
            + params.w_kappa_prime(phi_a) / eps
            - (kappa / eps) * 0.5 * (phi_a + phi_old)
            - mu_a
        )
        return r1, r2

    def resnorm(r1, r2):
        return max(h * float(np.max(np.abs(r1))), float(np.max(np.abs(r2))))

    r1, r2 = residuals(phi, mu)
    res = resnorm(r1, r2)
    for it in range(1, max_iter + 1):
        if res <= tol:
            return CHResult(phi, mu, it - 1, res)
        c = params.w_kappa_second(phi) / eps - kappa / (2.0 * eps)
        J = sp.bmat(
            [
                [eye / h, -L],
                [-eps * L + sp.diags(c.ravel()), -eye],
            ],
            format="csc",
        )
        rhs = -np.concatenate([r1.ravel(), r2.ravel()])
        delta = splu(J).solve(rhs)
        dphi = delta[:nc].reshape(grid.n)
        dmu = delta[nc:].reshape(grid.n)

        alpha = 1.0
        accepted = False
        for _ in range(40):
            phi_try = phi + alpha * dphi
            if np.max(np.abs(phi_try)) < 1.0 - interior_margin:
                mu_try = mu + alpha * dmu
                r1_t, r2_t = residuals(phi_try, mu_try)
                res_t = resnorm(r1_t, r2_t)
                if res_t <= (1.0 - 0.25 * alpha) * res or res_t <= tol:
                    phi, mu, r1, r2, res = phi_try, mu_try, r1_t, r2_t, res_t
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            raise NewtonNonConvergence(
                "phase-field Newton stalled (no admissible damped step)", it, res
            )
    if res <= tol:
        return CHResult(phi, mu, max_iter, res)
    raise NewtonNonConvergence("phase-field Newton ran out of iterations", max_iter, res)
