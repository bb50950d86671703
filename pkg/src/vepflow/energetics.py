"""Energy bookkeeping and the per-step dissipation certificate.

The certificate recomputes every term from the stored states with the same
quadratures the solvers assemble, so each budget line is an algebraic
identity up to solver stopping tolerances:

  kinetic:  pairing the momentum equation with the new velocity leaves
            -(1/2) <rho_old dv, dv> plus linear-solver residual
  elastic:  pairing the stress equation with the new stress leaves
            -(1/2) |dS|^2; the plastic power is reconstructed from the
            equation and must be nonnegative up to the fixed-point tolerance
  phase:    convexity of the shifted well and the midpoint rule for the
            concave part leave a sum of nonnegative slacks

The three partial defects sum to the total defect exactly (the elastic work
and chemical transport work are computed once and cancel in the sum), which
is the audit the step certificate performs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .materials import MaterialParams, PlasticParams
from .operators import (
    advect_comps,
    advect_scalar,
    axis_pairs,
    avg_cell_to_stagpair,
    grad_energy_tensor,
    inner_cells,
    inner_grad_faces,
    interp_cell_to_face,
    jaumann_commutator,
    laplacian_neumann,
    skw_grad,
    stag_weights,
    strain_diag,
    strain_offdiag,
    strain_pairing,
    strain_rhs_cells,
    tensor_inner,
)
from .state import State


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    elastic: float
    phase: float

    @property
    def total(self) -> float:
        return self.kinetic + self.elastic + self.phase


def kinetic_energy(grid, rho_cells: np.ndarray, vcomps) -> float:
    acc = 0.0
    V = grid.cell_volume
    for a in range(grid.dim):
        rho_f = interp_cell_to_face(grid, rho_cells, a, "nearest")
        sl = [slice(None)] * grid.dim
        sl[a] = slice(1, -1)
        s = tuple(sl)
        acc += 0.5 * V * float(np.sum(rho_f[s] * vcomps[a][s] ** 2))
    return acc


def elastic_energy(grid, Scomps) -> float:
    return 0.5 * grid.cell_volume * float(np.sum(tensor_inner(grid.dim, Scomps, Scomps)))


def phase_energy(grid, params: MaterialParams, phi: np.ndarray) -> float:
    return 0.5 * params.eps * inner_grad_faces(grid, phi, phi) + inner_cells(
        grid, params.w_eval(phi), np.ones(grid.n)
    ) / params.eps


def energy(grid, params: MaterialParams, state: State) -> EnergyBreakdown:
    rho = params.density(state.phi.data)
    return EnergyBreakdown(
        kinetic=kinetic_energy(grid, rho, state.v.comps),
        elastic=elastic_energy(grid, state.S.comps),
        phase=phase_energy(grid, params, state.phi.data),
    )


def viscous_dissipation(grid, nu_cells: np.ndarray, vcomps) -> float:
    """sum 2 nu |sym grad v|^2 in the staggered placement (matches the
    assembled viscous matrix exactly)."""
    V = grid.cell_volume
    acc = V * sum(float(np.sum(2.0 * nu_cells * e * e)) for e in strain_diag(grid, vcomps))
    for a, b in axis_pairs(grid.dim):
        e = strain_offdiag(grid, vcomps, a, b, "noslip")
        w = stag_weights(grid, (a, b))
        nu_up = avg_cell_to_stagpair(nu_cells, (a, b))
        acc += 4.0 * float(np.sum(w * nu_up * e * e))
    return acc


def force_work(grid, force_faces, vcomps) -> float:
    """Work of a per-volume face force against v over interior faces."""
    if force_faces is None:
        return 0.0
    V = grid.cell_volume
    acc = 0.0
    for a in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[a] = slice(1, -1)
        s = tuple(sl)
        acc += V * float(np.sum(force_faces[a][s] * vcomps[a][s]))
    return acc


@dataclass(frozen=True)
class Certificate:
    defect: float
    defect_kinetic: float
    defect_elastic: float
    defect_phase: float
    d_s: float
    d_ch: float
    d_sd: float
    d_plastic: float
    work_force: float
    work_elastic: float
    work_chem: float
    energy_old: EnergyBreakdown
    energy_new: EnergyBreakdown
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.defect_kinetic <= self.tol
            and self.defect_elastic <= self.tol
            and self.defect_phase <= self.tol
            and self.defect <= self.tol
            and self.d_plastic >= -self.tol
        )


def certify_step(
    mats,
    params: MaterialParams,
    plastic: PlasticParams,
    old: State,
    new: State,
    h: float,
    gamma: float = 0.0,
    force_faces=None,
    tol: float = None,
) -> Certificate:
    """Audit one accepted step against the discrete energy inequality,
    recomputing every term from the two states alone."""
    grid = mats.grid
    d = grid.dim
    V = grid.cell_volume
    phi_o = old.phi.data
    nu = params.viscosity(phi_o)
    eta = params.elastic_modulus(phi_o)

    e_old = energy(grid, params, old)
    e_new = energy(grid, params, new)

    d_s = viscous_dissipation(grid, nu, new.v.comps)
    d_ch = inner_grad_faces(grid, new.mu.data, new.mu.data)
    d_sd = gamma * grad_energy_tensor(grid, new.S.comps, d) if gamma != 0.0 else 0.0

    work_elastic = strain_pairing(grid, new.S.comps, new.v.comps, eta, mode="noslip")
    work_chem = inner_cells(grid, advect_scalar(grid, new.v.comps, phi_o), new.mu.data)
    work_f = force_work(grid, force_faces, new.v.comps)

    # plastic power reconstructed from the stress equation
    Sn, So = new.S.comps, old.S.comps
    rot = skw_grad(grid, new.v.comps, mode="noslip")
    lin = advect_comps(grid, new.v.comps, Sn)
    jc = jaumann_commutator(d, Sn, rot)
    rhs = strain_rhs_cells(grid, new.v.comps, eta, mode="noslip")
    xi = tuple(
        r - (sn - so) / h - ln - j + (gamma * laplacian_neumann(grid, sn) if gamma != 0.0 else 0.0)
        for r, sn, so, ln, j in zip(rhs, Sn, So, lin, jc)
    )
    d_plastic = V * float(np.sum(tensor_inner(d, xi, Sn)))

    dk = e_new.kinetic - e_old.kinetic
    de = e_new.elastic - e_old.elastic
    dp = e_new.phase - e_old.phase
    defect_kin = dk + h * (d_s + work_elastic - work_chem - work_f)
    defect_el = de + h * (d_sd + d_plastic - work_elastic)
    defect_pf = dp + h * (d_ch + work_chem)
    defect = defect_kin + defect_el + defect_pf

    if tol is None:
        scale = max(1.0, e_old.total, e_new.total)
        tol = 1e-8 * scale
    return Certificate(
        defect=defect,
        defect_kinetic=defect_kin,
        defect_elastic=defect_el,
        defect_phase=defect_pf,
        d_s=d_s,
        d_ch=d_ch,
        d_sd=d_sd,
        d_plastic=d_plastic,
        work_force=work_f,
        work_elastic=work_elastic,
        work_chem=work_chem,
        energy_old=e_old,
        energy_new=e_new,
        tol=tol,
    )


CSV_HEADER = "step,time,e_kin,e_el,e_pf,e_tot,d_s,d_ch,d_sd,d_plastic,defect,mass,max_phi,max_S,iters"


@dataclass(frozen=True)
class StepReport:
    """One accepted step: energies after the step, dissipations over it, the
    certificate defect, and bulk diagnostics."""

    step: int
    time: float
    energy: EnergyBreakdown
    d_s: float
    d_ch: float
    d_sd: float
    d_plastic: float
    defect: float
    mass: float
    max_phi: float
    max_S: float
    iters: int

    def csv_row(self) -> str:
        vals = [
            str(self.step),
            _fmt(self.time),
            _fmt(self.energy.kinetic),
            _fmt(self.energy.elastic),
            _fmt(self.energy.phase),
            _fmt(self.energy.total),
            _fmt(self.d_s),
            _fmt(self.d_ch),
            _fmt(self.d_sd),
            _fmt(self.d_plastic),
            _fmt(self.defect),
            _fmt(self.mass),
            _fmt(self.max_phi),
            _fmt(self.max_S),
            str(self.iters),
        ]
        return ",".join(vals)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def report_step(mats, params: MaterialParams, new: State, cert: Certificate, iters: int) -> StepReport:
    grid = mats.grid
    return StepReport(
        step=new.step,
        time=new.t,
        energy=cert.energy_new,
        d_s=cert.d_s,
        d_ch=cert.d_ch,
        d_sd=cert.d_sd,
        d_plastic=cert.d_plastic,
        defect=cert.defect,
        mass=inner_cells(grid, new.phi.data, np.ones(grid.n)),
        max_phi=float(np.max(np.abs(new.phi.data))),
        max_S=new.S.max_abs(),
        iters=iters,
    )
