"""Coupled implicit time step: phase field, momentum, stress, fixed-point
outer coupling, with step halving as the fallback.

Inside one step every subproblem sees lagged data chosen so the combined
update satisfies the discrete energy inequality exactly at outer convergence:
transport and material coefficients are frozen at the old order parameter,
the chemical force uses the fresh potential against the old phase gradient,
and the mass flux in the skew convection combines the old density with the
diffusive flux of the fresh potential. Residual coupling lag is controlled by
the outer tolerance and shows up (only) in the certificate defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cahn_hilliard import solve_ch
from .errors import NewtonNonConvergence, OuterNonConvergence, StressNonConvergence
from .grid import ScalarField, SymTraceFreeTensorField, VectorField
from .materials import MaterialParams, PlasticParams
from .matrices import OperatorMatrices
from .momentum import assemble_momentum_operator, solve_saddle
from .operators import (
    _diff_stag2cell,
    _pad_axis,
    chemical_force,
    interp_cell_to_face,
    tensor_divergence,
)
from .state import State


@dataclass(frozen=True)
class StepperOptions:
    tol_outer: float = 1e-9
    max_outer: int = 40
    tol_ch: float = 1e-11
    tol_stress: float = 1e-12
    max_halvings: int = 4


@dataclass
class StepInfo:
    h: float
    outer_iterations: int
    halvings: int = 0
    ch_residual: float = 0.0
    stress_residual: float = 0.0
    momentum_residual: float = 0.0
    failures: list = field(default_factory=list)


def diffusive_flux(grid, params: MaterialParams, mu: np.ndarray):
    """Face mass flux -((rho2-rho1)/2) grad mu, zero through walls."""
    c = params.density_contrast
    comps = []
    for a in range(grid.dim):
        comps.append(_pad_axis(-c * _diff_stag2cell(mu, a, grid.h[a]), a, 1, 1))
    return comps


def picard_time_step(
    mats: OperatorMatrices,
    params: MaterialParams,
    plastic: PlasticParams,
    state: State,
    h: float,
    gamma: float = 0.0,
    force_fn=None,
    opts: StepperOptions = StepperOptions(),
):
    """One implicit step of size h from ``state``. Returns (new_state, info).

    Raises the subsolver exception or OuterNonConvergence on failure; the
    caller decides whether to halve.
    """
    grid = mats.grid
    d = grid.dim
    V = grid.cell_volume
    phi_k = state.phi.data
    t_new = state.t + h

    rho_old = params.density(phi_k)
    nu = params.viscosity(phi_k)
    eta = params.elastic_modulus(phi_k)
    G = params.fraction(phi_k)
    rho_old_f = [interp_cell_to_face(grid, rho_old, a, "nearest") for a in range(d)]
    force_faces = force_fn(grid, t_new) if force_fn is not None else None

    v_m = [c.copy() for c in state.v.comps]
    S_m = tuple(c.copy() for c in state.S.comps)
    ch_warm = None
    info = StepInfo(h=h, outer_iterations=0)

    v_old_term = [rho_old_f[a] * state.v.comps[a] / h for a in range(d)]

    from .stress import solve_stress  # local import to avoid a cycle in docs builds

    for m in range(1, opts.max_outer + 1):
        ch = solve_ch(
            mats, params, phi_k, h, vcomps=v_m, warm=ch_warm, tol=opts.tol_ch
        )
        ch_warm = (ch.phi, ch.mu)
        rho_new = params.density(ch.phi)
        rho_new_f = [interp_cell_to_face(grid, rho_new, a, "nearest") for a in range(d)]

        J = diffusive_flux(grid, params, ch.mu)
        m_faces = [rho_old_f[a] * v_m[a] + J[a] for a in range(d)]
        mass_coeff = [(rho_new_f[a] + rho_old_f[a]) / (2.0 * h) for a in range(d)]

        A = assemble_momentum_operator(mats, nu, mass_coeff_faces=mass_coeff, m_faces=m_faces)
        rhs_faces = [v_old_term[a].copy() for a in range(d)]
        chem = chemical_force(grid, ch.phi, ch.mu)
        Sdiv = tensor_divergence(grid, S_m, eta, mode="noslip")
        for a in range(d):
            rhs_faces[a] += chem[a] + Sdiv[a]
            if force_faces is not None:
                rhs_faces[a] += force_faces[a]
        v_new, p_new, mom_res = solve_saddle(mats, A, V * mats.pack(rhs_faces))

        stress = solve_stress(
            mats,
            plastic,
            eta,
            G,
            state.S.comps,
            v_new,
            h,
            gamma=gamma,
            tol=opts.tol_stress,
            warm=S_m,
        )

        dv = max(float(np.max(np.abs(v_new[a] - v_m[a]))) for a in range(d))
        dS = max(float(np.max(np.abs(a2 - b2))) for a2, b2 in zip(stress.comps, S_m))
        v_scale = max(1.0, max(float(np.max(np.abs(c))) for c in v_new))
        s_scale = max(1.0, max(float(np.max(np.abs(c))) for c in stress.comps))
        change = max(dv / v_scale, dS / s_scale)

        v_m = v_new
        S_m = stress.comps
        info.outer_iterations = m
        info.ch_residual = ch.residual
        info.stress_residual = stress.residual
        info.momentum_residual = mom_res

        if change <= opts.tol_outer:
            new = State(
                grid=grid,
                v=VectorField(grid, tuple(v_m)),
                S=SymTraceFreeTensorField(grid, tuple(S_m)),
                phi=ScalarField(grid, ch.phi),
                mu=ScalarField(grid, ch.mu),
                p=ScalarField(grid, p_new),
                t=t_new,
                step=state.step + 1,
            )
            return new, info

    raise OuterNonConvergence(
        f"outer coupling reached {opts.max_outer} sweeps at h={h:.3g}",
        opts.max_outer,
        change,
    )


def advance(
    mats: OperatorMatrices,
    params: MaterialParams,
    plastic: PlasticParams,
    state: State,
    h: float,
    gamma: float = 0.0,
    force_fn=None,
    opts: StepperOptions = StepperOptions(),
):
    """Attempt one step of size h, halving on subsolver failure (at most
    ``opts.max_halvings`` times). The accepted step may therefore be shorter
    than requested; the caller reads the new time off the state."""
    failures = []
    h_try = h
    for k in range(opts.max_halvings + 1):
        try:
            new, info = picard_time_step(
                mats, params, plastic, state, h_try, gamma=gamma, force_fn=force_fn, opts=opts
            )
            info.halvings = k
            info.failures = failures
            return new, info
        except (NewtonNonConvergence, StressNonConvergence, OuterNonConvergence) as exc:
            failures.append(
                {
                    "h": h_try,
                    "error": type(exc).__name__,
                    "message": str(exc),
                    "iterations": exc.iterations,
                    "residual": getattr(exc, "residual", getattr(exc, "update", float("nan"))),
                }
            )
            h_try *= 0.5
    raise OuterNonConvergence(
        "step rejected after "
        f"{opts.max_halvings} halvings (h from {h:.3g} down to {2 * h_try:.3g}); "
        "attempts: " + "; ".join(f'{f["error"]}@h={f["h"]:.3g}' for f in failures),
        -1,
        float("nan"),
    )
