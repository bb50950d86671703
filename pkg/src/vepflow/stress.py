"""Implicit step for the extra stress with plastic proximal map.

One backward-Euler step of

    (S' - S)/h + v . grad S' + (S' Wv - Wv S') + xi - gamma lap S' = eta(phi) Ev

with Ev the deviatoric strain rate of v, Wv its rotation rate, and
xi in dP(phi; S') the plastic subgradient. The inclusion is resolved by the
proximal fixed point

    S <- prox_{h P}( S_old + h (eta Ev - L S) ),

a contraction whenever h times the Lipschitz bound of the linear part L is
below one (the proximal map itself is nonexpansive). The returned stress is
the output of the final proximal application, so the companion subgradient
xi = (Z - S')/h is an exact member of dP(S'); the leftover fixed-point gap
only perturbs the linear terms and is reported as the residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StressNonConvergence
from .materials import PlasticParams
from .matrices import OperatorMatrices
from .operators import (
    advect_comps,
    jaumann_commutator,
    laplacian_neumann,
    skw_grad,
    strain_rhs_cells,
)


@dataclass
class StressResult:
    comps: tuple
    xi: tuple
    iterations: int
    residual: float


def _linear_part(grid, comps, vcomps, rot, gamma):
    d = grid.dim
    out = advect_comps(grid, vcomps, comps) if vcomps is not None else tuple(np.zeros(grid.n) for _ in comps)
    if rot is not None:
        jc = jaumann_commutator(d, comps, rot)
        out = tuple(o + j for o, j in zip(out, jc))
    if gamma != 0.0:
        out = tuple(o - gamma * laplacian_neumann(grid, c) for o, c in zip(out, comps))
    return out


def lipschitz_estimate(grid, vcomps, rot, gamma) -> float:
    """Crude operator-norm bound for the linear part, used in diagnostics and
    for the a priori step-size guard."""
    vmax = max(float(np.max(np.abs(c))) for c in vcomps) if vcomps is not None else 0.0
    rmax = max(float(np.max(np.abs(c))) for c in rot) if rot is not None else 0.0
    bound = sum(vmax / ha for ha in grid.h) + 2.0 * rmax
    if gamma != 0.0:
        bound += gamma * sum(4.0 / (ha * ha) for ha in grid.h)
    return bound


def solve_stress(
    mats: OperatorMatrices,
    plastic: PlasticParams,
    eta_cells: np.ndarray,
    G_cells: np.ndarray,
    S_old,
    vcomps,
    h: float,
    gamma: float = 0.0,
    tol: float = 1e-12,
    max_iter: int = 600,
    warm=None,
) -> StressResult:
    grid = mats.grid
    d = grid.dim
    if vcomps is not None:
        rot = skw_grad(grid, vcomps, mode="noslip")
        rhs = strain_rhs_cells(grid, vcomps, eta_cells, mode="noslip")
    else:
        rot = None
        rhs = tuple(np.zeros(grid.n) for _ in S_old)

    S = tuple(np.array(c, dtype=float) for c in (warm if warm is not None else S_old))
    scale = max(1.0, max(float(np.max(np.abs(c))) for c in S_old), max(float(np.max(np.abs(c))) for c in rhs))

    last = None
    for it in range(1, max_iter + 1):
        lin = _linear_part(grid, S, vcomps, rot, gamma)
        Z = tuple(so + h * (r - l) for so, r, l in zip(S_old, rhs, lin))
        S_new = plastic.prox(G_cells, Z, h, d)
        update = max(float(np.max(np.abs(a - b))) for a, b in zip(S_new, S))
        xi = tuple((z - s) / h for z, s in zip(Z, S_new))
        last = (S_new, xi, it, update / scale)
        if update <= tol * scale:
            return StressResult(*last)
        if not np.isfinite(update) or update > 1e120 * scale:
            lip = h * lipschitz_estimate(grid, vcomps, rot, gamma)
            raise StressNonConvergence(
                f"stress fixed point diverged (h * linear Lipschitz bound ~ {lip:.3g}); "
                "reduce the time step",
                it,
                float(update / scale),
            )
        S = S_new
    lip = h * lipschitz_estimate(grid, vcomps, rot, gamma)
    raise StressNonConvergence(
        f"stress fixed point stalled (h * linear Lipschitz bound ~ {lip:.3g})",
        max_iter,
        last[3] if last else float("nan"),
    )
