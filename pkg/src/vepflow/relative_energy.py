"""Trajectory verification against smooth reference triples.

Measures how far a discrete trajectory is from a smooth reference
(velocity, stress, phase) triple in the relative-energy sense and evaluates
the Gronwall-weighted inequality that a dissipative trajectory must satisfy:

    R(t) + int_0^t e^{int_s^t K} [ <A, trial> + P(phi;S) - P(phi;Stilde)
                                   + W ] ds   <=   R(0) e^{int_0^t K}

where R is the first-order Taylor gap of the total energy between the state
and the triple, A is the residual pairing of the reference fields against
the trial directions, W collects the relative dissipation terms, and the
weight K = (k^2 / nu_1) * sup|Stilde|^2 absorbs the rotation commutator via
the discrete Korn identity (k = sqrt(2); on this grid
2|sym grad u|^2 = |grad u|^2 + |div u|^2 exactly for no-slip u).

Conventions, fixed module-wide:
  - interface-width parameter equal to one (callers are validated);
  - reference-field derivatives are analytic, while every derivative of a
    discrete field (including differences against sampled reference values)
    uses the grid operators, so the Korn and adjointness identities apply;
  - the ds integral uses right-endpoint quadrature, matching the implicit
    scheme's placement of dissipation at the end of each step; the
    exponential weights use trapezoidal quadrature of K over step times.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import sqrt

import numpy as np

from .energetics import elastic_energy, kinetic_energy
from .errors import ConfigError
from .materials import MaterialParams, PlasticParams
from .operators import (
    _avg_stag2cell,
    _tensor_diag_entries,
    _offdiag_index,
    avg_cell_to_stagpair,
    avg_stagpair_to_cell,
    axis_pairs,
    face_weights,
    gradient,
    grad_energy_tensor,
    inner_cells,
    inner_faces,
    inner_grad_faces,
    interp_face_to_cell,
    jaumann_commutator,
    laplacian_neumann,
    rotation_offdiag,
    stag_weights,
    strain_diag,
    strain_offdiag,
    tensor_inner,
    transverse_derivative,
)
from .state import State
from .testtriple import TestTriple

KORN_CONSTANT = sqrt(2.0)

# calibrated on zero-triple consistency runs (see tests); the verifier
# tolerance is DEFAULT_TOL_C * (h_t + max(h_x)^2) * scale
DEFAULT_TOL_C = 5.0


@dataclass(frozen=True)
class RegWeightConfig:
    """Parameters of the regularity weight K = (korn^2/nu1) sup|Stilde|^2."""

    korn_constant: float = KORN_CONSTANT
    nu1: float = 1.0

    def __post_init__(self):
        if not self.korn_constant > 0:
            raise ConfigError("regweight-korn-positive", "korn_constant must be > 0")
        if not self.nu1 > 0:
            raise ConfigError("regweight-nu-positive", "nu1 must be > 0")


def default_reg_config(params: MaterialParams) -> RegWeightConfig:
    return RegWeightConfig(korn_constant=KORN_CONSTANT, nu1=params.nu_min)


def regularity_weight(triple: TestTriple, t: float, cfg: RegWeightConfig) -> float:
    sup = triple.stress_sup(t)
    return (cfg.korn_constant ** 2 / cfg.nu1) * sup * sup


def _require_unit_interface(params: MaterialParams) -> None:
    if params.eps != 1.0:
        raise ConfigError(
            "releng-unit-interface",
            "the trajectory verifier is written for interface width eps = 1",
        )


# ---------------------------------------------------------------------------
# cached grid point sets
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _mesh(grid, staggered) -> tuple:
    return tuple(grid.mesh(staggered))


def _cells(grid):
    return _mesh(grid, (False,) * grid.dim)

def _faces(grid, axis):
    return _mesh(grid, tuple(a == axis for a in range(grid.dim)))

def _pair_points(grid, pair):
    return _mesh(grid, tuple(a in pair for a in range(grid.dim)))


# ---------------------------------------------------------------------------
# relative energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelEnergyBreakdown:
    kinetic: float
    elastic: float
    phase: float

    @property
    def total(self) -> float:
        return self.kinetic + self.elastic + self.phase


def _rel_energy_arrays(grid, params, state: State, vt, St, phit) -> RelEnergyBreakdown:
    rho = params.density(state.phi.data)
    vdiff = [state.v.comps[a] - vt[a] for a in range(grid.dim)]
    kin = kinetic_energy(grid, rho, vdiff)
    sdiff = tuple(state.S.comps[c] - St[c] for c in range(len(St)))
    el = elastic_energy(grid, sdiff)
    pdiff = state.phi.data - phit
    bregman = params.w_kappa_eval(state.phi.data) - params.w_kappa_eval(phit) - params.w_kappa_prime(phit) * pdiff
    pf = 0.5 * inner_grad_faces(grid, pdiff, pdiff) + grid.cell_volume * float(np.sum(bregman))
    return RelEnergyBreakdown(kin, el, pf)


def relative_energy(params: MaterialParams, state: State, triple: TestTriple) -> RelEnergyBreakdown:
    """Taylor gap of the total energy between a state and the triple at the
    state's own time; each part is nonnegative."""
    _require_unit_interface(params)
    grid = state.grid
    t = state.t
    vt = [triple.velocity(t, _faces(grid, a))[a] for a in range(grid.dim)]
    St = triple.stress(t, _cells(grid))
    phit = triple.phase(t, _cells(grid))
    return _rel_energy_arrays(grid, params, state, vt, St, phit)


def relative_energy_states(params: MaterialParams, state: State, ref: State) -> RelEnergyBreakdown:
    """Relative energy between two discrete states on the same grid (used to
    compare runs with different stress-diffusion parameters)."""
    if state.grid != ref.grid:
        raise ConfigError("releng-grid-mismatch", "states live on different grids")
    return _rel_energy_arrays(state.grid, params, state,
                              [c for c in ref.v.comps], tuple(ref.S.comps), ref.phi.data)


# ---------------------------------------------------------------------------
# reference fields on solver point sets
# ---------------------------------------------------------------------------


class _TripleOnGrid:
    """One time slice of the triple evaluated on the grid's point sets."""

    def __init__(self, grid, params: MaterialParams, triple: TestTriple, t: float):
        d = grid.dim
        self.grid = grid
        self.t = t
        cells = _cells(grid)
        self.v_faces = [triple.velocity(t, _faces(grid, a))[a] for a in range(d)]
        self.v_cells = triple.velocity(t, cells)
        self.dt_v_faces = [triple.velocity_dt(t, _faces(grid, a))[a] for a in range(d)]
        self.dt_v_cells = triple.velocity_dt(t, cells)
        self.grad_v_cells = triple.velocity_grad(t, cells)
        self.S_cells = triple.stress(t, cells)
        self.dt_S_cells = triple.stress_dt(t, cells)
        self.grad_S_cells = triple.stress_grad(t, cells)
        self.lap_S_cells = triple.stress_lap(t, cells)
        self.phi_cells = triple.phase(t, cells)
        self.dt_phi_cells = triple.phase_dt(t, cells)
        self.grad_phi_cells = triple.phase_grad(t, cells)
        self.mu_cells = triple.chem(t, cells)
        self.grad_mu_cells = triple.chem_grad(t, cells)
        self.lap_mu_cells = triple.chem_lap(t, cells)
        # diagonal reference strain at cells; per-pair values on the
        # staggered point sets
        self.sym_diag_cells = [self.grad_v_cells[(a, a)] for a in range(d)]
        self.pair_data = {}
        offidx = _offdiag_index(d)
        for pair in axis_pairs(d):
            pts = _pair_points(grid, pair)
            g = triple.velocity_grad(t, pts)
            a, b = pair
            S_pts = triple.stress(t, pts)
            rho_pts_phase = triple.phase(t, pts)
            self.pair_data[pair] = {
                "sym": 0.5 * (g[(a, b)] + g[(b, a)]),
                "rot": 0.5 * (g[(a, b)] - g[(b, a)]),
                "S_off": S_pts[offidx[pair]],
                "S_full": S_pts,
                "v": triple.velocity(t, pts),
                "phase": rho_pts_phase,
                "mu": triple.chem(t, pts),
                "grad_mu": triple.chem_grad(t, pts),
                "grad_phi": triple.phase_grad(t, pts),
            }
        self.phi_faces = [triple.phase(t, _faces(grid, a)) for a in range(d)]
        self.mu_faces = [triple.chem(t, _faces(grid, a)) for a in range(d)]
        self.grad_phi_faces = [triple.phase_grad(t, _faces(grid, a)) for a in range(d)]
        self.dt_phi_faces = [triple.phase_dt(t, _faces(grid, a)) for a in range(d)]


# ---------------------------------------------------------------------------
# trial directions and the residual pairing
# ---------------------------------------------------------------------------


def build_trial(params: MaterialParams, state: State, ref: _TripleOnGrid):
    """Trial directions tested against the reference residual: the velocity
    and stress differences, and for the phase slot

        -lap(phi - phit) + W''(phit)(phi - phit) + kappa (phi - phit)
        - (rho2 - rho1)/2 * (v - vt) . vt
    """
    grid = state.grid
    if np.max(np.abs(ref.phi_cells)) >= 1.0:
        raise ConfigError("releng-phase-domain", "reference phase must stay inside (-1, 1)")
    Phi = [state.v.comps[a] - ref.v_faces[a] for a in range(grid.dim)]
    Psi = tuple(state.S.comps[c] - ref.S_cells[c] for c in range(len(ref.S_cells)))
    pdiff = state.phi.data - ref.phi_cells
    vdiff_c = interp_face_to_cell(grid, Phi)
    vdot = sum(vdiff_c[a] * ref.v_cells[a] for a in range(grid.dim))
    zeta = (
        -laplacian_neumann(grid, pdiff)
        + params.w_second(ref.phi_cells) * pdiff
        + params.kappa * pdiff
        - params.density_contrast * vdot
    )
    return Phi, Psi, zeta


def _grad_pairing(grid, M_diag, M_off, Phi):
    """Sum over entries of <M_ab, d Phi_a / d x_b> in the natural staggered
    quadrature: diagonal entries at cells, off-diagonal at pair-staggered
    points. M_off[(a, b)] holds the (a, b) entry on the (a, b) point set."""
    total = 0.0
    diag = strain_diag(grid, Phi)
    for a in range(grid.dim):
        total += grid.cell_volume * float(np.sum(M_diag[a] * diag[a]))
    for pair in axis_pairs(grid.dim):
        a, b = pair
        w = stag_weights(grid, pair)
        dab = transverse_derivative(grid, Phi, a, b, "noslip")
        dba = transverse_derivative(grid, Phi, b, a, "noslip")
        total += float(np.sum(w * (M_off[(a, b)] * dab + M_off[(b, a)] * dba)))
    return total


def system_operator_apply(
    params: MaterialParams,
    state_grid,
    triple: TestTriple,
    t: float,
    trial,
    gamma: float,
    forcing=None,
) -> float:
    """Residual of the reference triple paired against trial directions
    (Phi on faces, Psi on cells, zeta on cells). Reference derivatives are
    analytic; gradients of the trial fields are discrete."""
    _require_unit_interface(params)
    grid = state_grid
    d = grid.dim
    ref = triple if isinstance(triple, _TripleOnGrid) else _TripleOnGrid(grid, params, triple, t)
    Phi, Psi, zeta = trial
    contrast = params.density_contrast

    # momentum residual: face terms paired with Phi directly
    face_terms = []
    for a in range(d):
        rho = params.density(ref.phi_faces[a])
        dt_rho_v = rho * ref.dt_v_faces[a] + contrast * ref.dt_phi_faces[a] * ref.v_faces[a]
        face_terms.append(dt_rho_v - ref.mu_faces[a] * ref.grad_phi_faces[a][a])
    a1 = inner_faces(grid, face_terms, Phi)
    if forcing is not None:
        a1 -= inner_faces(grid, forcing, Phi)

    # momentum residual: tensor terms paired with the discrete gradient of Phi
    nu_c = params.viscosity(ref.phi_cells)
    eta_c = params.elastic_modulus(ref.phi_cells)
    rho_c = params.density(ref.phi_cells)
    J_c = [-contrast * g for g in ref.grad_mu_cells]
    S_diag = _tensor_diag_entries(d, ref.S_cells)
    M_diag = [
        -rho_c * ref.v_cells[a] * ref.v_cells[a]
        - ref.v_cells[a] * J_c[a]
        + eta_c * S_diag[a]
        + 2.0 * nu_c * ref.sym_diag_cells[a]
        for a in range(d)
    ]
    M_off = {}
    for pair in axis_pairs(d):
        a, b = pair
        data = ref.pair_data[pair]
        rho_p = params.density(data["phase"])
        nu_p = params.viscosity(data["phase"])
        eta_p = params.elastic_modulus(data["phase"])
        J_p = [-contrast * g for g in data["grad_mu"]]
        sym_p = data["sym"]
        s_off = data["S_off"]
        M_off[(a, b)] = (
            -rho_p * data["v"][a] * data["v"][b]
            - data["v"][a] * J_p[b]
            + eta_p * s_off
            + 2.0 * nu_p * sym_p
        )
        M_off[(b, a)] = (
            -rho_p * data["v"][b] * data["v"][a]
            - data["v"][b] * J_p[a]
            + eta_p * s_off
            + 2.0 * nu_p * sym_p
        )
    a1 += _grad_pairing(grid, M_diag, M_off, Phi)

    # stress residual at cells
    rot_comps = []
    for pair in axis_pairs(d):
        a, b = pair
        rot_comps.append(0.5 * (ref.grad_v_cells[(a, b)] - ref.grad_v_cells[(b, a)]))
    comm = jaumann_commutator(d, ref.S_cells, tuple(rot_comps))
    sym_off = {pair: 0.5 * (ref.grad_v_cells[(a, b)] + ref.grad_v_cells[(b, a)])
               for pair in axis_pairs(d) for a, b in [pair]}
    # reference sym grad as trace-free components
    if d == 2:
        sym_comps = (ref.sym_diag_cells[0], sym_off[(0, 1)])
    else:
        sym_comps = (
            ref.sym_diag_cells[0],
            ref.sym_diag_cells[1],
            sym_off[(0, 1)],
            sym_off[(0, 2)],
            sym_off[(1, 2)],
        )
    adv = tuple(
        sum(ref.v_cells[b] * ref.grad_S_cells[b][c] for b in range(d))
        for c in range(len(ref.S_cells))
    )
    resid = tuple(
        ref.dt_S_cells[c]
        + adv[c]
        + comm[c]
        - gamma * ref.lap_S_cells[c]
        - eta_c * sym_comps[c]
        for c in range(len(ref.S_cells))
    )
    a2 = grid.cell_volume * float(np.sum(tensor_inner(d, resid, Psi)))

    # phase residual at cells
    adv_phi = sum(ref.v_cells[b] * ref.grad_phi_cells[b] for b in range(d))
    a3 = inner_cells(grid, ref.dt_phi_cells + adv_phi - ref.lap_mu_cells, zeta)

    return a1 + a2 + a3


# ---------------------------------------------------------------------------
# relative dissipation
# ---------------------------------------------------------------------------


def _sym_quad(grid, coeff_cells, Adiag, Aoff, Bdiag, Boff) -> float:
    """Integral of coeff * (A : B) for symmetric tensors in the natural
    staggered placement (diagonal at cells, off-diagonal on pair points)."""
    total = grid.cell_volume * float(
        np.sum(coeff_cells * sum(Adiag[a] * Bdiag[a] for a in range(grid.dim)))
    )
    for pair in axis_pairs(grid.dim):
        w = stag_weights(grid, pair)
        cp = avg_cell_to_stagpair(coeff_cells, pair)
        total += 2.0 * float(np.sum(w * cp * Aoff[pair] * Boff[pair]))
    return total


def _grad_cells(grid, f):
    """Cell-centered gradient of a cell scalar with zero wall flux."""
    comps = gradient(grid, f, "zero")
    return [_avg_stag2cell(comps[a], a) for a in range(grid.dim)]


@dataclass(frozen=True)
class RelativeDissipation:
    total: float
    quadratic: float
    remainder: float
    stress_diffusion: float
    weight: float
    rel_energy: RelEnergyBreakdown


def relative_dissipation(
    params: MaterialParams,
    state: State,
    mu: np.ndarray,
    triple: TestTriple,
    gamma: float,
    cfg: RegWeightConfig = None,
    ref: "_TripleOnGrid" = None,
) -> RelativeDissipation:
    """All relative-dissipation terms at the state's time, with the
    decomposition into the nonnegative quadratic part and the remainder."""
    _require_unit_interface(params)
    grid = state.grid
    d = grid.dim
    t = state.t
    if cfg is None:
        cfg = default_reg_config(params)
    if ref is None:
        ref = _TripleOnGrid(grid, params, triple, t)
    K = regularity_weight(triple, t, cfg)
    rel = _rel_energy_arrays(grid, params, state, ref.v_faces, ref.S_cells, ref.phi_cells)

    phi, S = state.phi.data, state.S.comps
    pdiff = state.phi.data - ref.phi_cells
    mudiff = mu - ref.mu_cells
    sdiff = tuple(S[c] - ref.S_cells[c] for c in range(len(ref.S_cells)))
    vdiff = [state.v.comps[a] - ref.v_faces[a] for a in range(d)]
    vdiff_c = interp_face_to_cell(grid, vdiff)

    nu = params.viscosity(phi)
    nu_t = params.viscosity(ref.phi_cells)
    eta = params.elastic_modulus(phi)
    eta_t = params.elastic_modulus(ref.phi_cells)
    rho = params.density(phi)
    rho_t = params.density(ref.phi_cells)
    contrast = params.density_contrast

    # discrete strain and rotation of the velocity difference
    dd = strain_diag(grid, vdiff)
    doff = {pair: strain_offdiag(grid, vdiff, *pair, mode="noslip") for pair in axis_pairs(d)}
    rot = {pair: rotation_offdiag(grid, vdiff, *pair, mode="noslip") for pair in axis_pairs(d)}

    # reference strain / stress in the natural placement
    et_diag = ref.sym_diag_cells
    et_off = {pair: ref.pair_data[pair]["sym"] for pair in axis_pairs(d)}
    st_diag = _tensor_diag_entries(d, ref.S_cells)
    st_off = {pair: ref.pair_data[pair]["S_off"] for pair in axis_pairs(d)}

    terms = {}
    terms["chem_grad_sq"] = 0.5 * inner_grad_faces(grid, mudiff, mudiff)
    terms["viscous_sq"] = _sym_quad(grid, 2.0 * nu, dd, doff, dd, doff)
    terms["viscous_shift"] = _sym_quad(grid, 2.0 * (nu - nu_t), et_diag, et_off, dd, doff)

    zeta_lin = -laplacian_neumann(grid, pdiff) + params.w_second(ref.phi_cells) * pdiff
    terms["chem_reference"] = (
        0.5 * inner_grad_faces(grid, mu, mu)
        - 0.5 * inner_grad_faces(grid, ref.mu_cells, ref.mu_cells)
        + inner_cells(grid, ref.lap_mu_cells, zeta_lin)
    )

    J_c = [-contrast * g for g in _grad_cells(grid, mu)]
    Jt_c = [-contrast * g for g in ref.grad_mu_cells]
    v_c = interp_face_to_cell(grid, state.v.comps)
    mom_diff = [
        rho * v_c[a] - rho_t * ref.v_cells[a] + J_c[a] - Jt_c[a]
        for a in range(d)
    ]
    conv = sum(
        vdiff_c[a] * mom_diff[b] * ref.grad_v_cells[(a, b)]
        for a in range(d)
        for b in range(d)
    )
    accel = (rho - rho_t) * sum(vdiff_c[a] * ref.dt_v_cells[a] for a in range(d))
    terms["momentum_drift"] = grid.cell_volume * float(np.sum(conv + accel))

    # reference sym grad as trace-free components at cells (analytic, so the
    # off-diagonal entries are available at cell centers too)
    et_off_c = {
        pair: 0.5 * (ref.grad_v_cells[pair] + ref.grad_v_cells[pair[::-1]])
        for pair in axis_pairs(d)
    }
    if d == 2:
        et_comps = (et_diag[0], et_off_c[(0, 1)])
    else:
        et_comps = (
            et_diag[0], et_diag[1],
            et_off_c[(0, 1)], et_off_c[(0, 2)], et_off_c[(1, 2)],
        )
    terms["modulus_shift"] = -grid.cell_volume * float(
        np.sum((eta - eta_t) * tensor_inner(d, sdiff, et_comps))
    ) - _sym_quad(grid, eta - eta_t, st_diag, st_off, dd, doff)

    stress_transport = sum(
        vdiff_c[b] * tensor_inner(d, sdiff, ref.grad_S_cells[b]) for b in range(d)
    )
    terms["stress_transport"] = -grid.cell_volume * float(np.sum(stress_transport))

    # rotation commutator against the reference stress, on pair points
    comm_total = 0.0
    for pair in axis_pairs(d):
        w = stag_weights(grid, pair)
        A_up = tuple(avg_cell_to_stagpair(c, pair) for c in sdiff)
        if d == 2:
            wcomps = (rot[pair],)
        else:
            wcomps = tuple(
                rot[p] if p == pair else np.zeros_like(rot[pair]) for p in axis_pairs(d)
            )
        comm = jaumann_commutator(d, A_up, wcomps)
        St_pts = ref.pair_data[pair]["S_full"]
        comm_total += float(np.sum(w * tensor_inner(d, comm, St_pts)))
    terms["rotation_comm"] = -comm_total

    # chemical-potential transport against the velocity difference, at faces
    chem_flux = 0.0
    for a in range(d):
        wts = face_weights(grid, a)
        dp = gradient(grid, pdiff, "zero")[a]
        chem_flux += float(np.sum(wts * ref.mu_faces[a] * dp * vdiff[a]))
    terms["chem_transport"] = -chem_flux

    gp_diff = _grad_cells(grid, pdiff)
    stretch = sum(
        gp_diff[a] * gp_diff[b] * ref.grad_v_cells[(a, b)]
        for a in range(d)
        for b in range(d)
    )
    terms["phase_stretch"] = grid.cell_volume * float(np.sum(stretch))

    terms["convex_coupling"] = params.kappa * inner_grad_faces(grid, mudiff, pdiff)
    terms["convex_transport"] = params.kappa * grid.cell_volume * float(
        np.sum(sum(vdiff_c[a] * ref.grad_phi_cells[a] for a in range(d)) * pdiff)
    )

    terms["gronwall"] = K * rel.total

    w_zero = float(sum(terms.values()))
    sd = gamma * grad_energy_tensor(grid, sdiff, d)
    total = sd + w_zero

    # nonnegative quadratic part under the Korn-based weight
    quad = (
        _sym_quad(grid, 2.0 * np.full(grid.n, cfg.nu1), dd, doff, dd, doff)
        + terms["chem_grad_sq"]
        + 0.5 * inner_grad_faces(grid, mu, mu)
        + terms["rotation_comm"]
        + K
        * (
            0.5 * grid.cell_volume * float(np.sum(tensor_inner(d, sdiff, sdiff)))
            + 0.5 * inner_grad_faces(grid, pdiff, pdiff)
            + params.kappa * inner_cells(grid, pdiff, pdiff)
        )
    )
    return RelativeDissipation(
        total=total,
        quadratic=quad,
        remainder=w_zero - quad,
        stress_diffusion=sd,
        weight=K,
        rel_energy=rel,
    )


def plastic_gap(plastic: PlasticParams, params: MaterialParams, state: State, ref_S) -> float:
    """P(phi; S) - P(phi; Sref) in the cell quadrature."""
    if plastic is None or plastic.is_trivial:
        return 0.0
    grid = state.grid
    G = params.fraction(state.phi.data)
    s_norm = np.sqrt(tensor_inner(grid.dim, state.S.comps, state.S.comps))
    r_norm = np.sqrt(tensor_inner(grid.dim, ref_S, ref_S))
    p_s = plastic.potential(G, s_norm)
    p_r = plastic.potential(G, r_norm)
    return grid.cell_volume * float(np.sum(p_s) - np.sum(p_r))


# ---------------------------------------------------------------------------
# the trajectory inequality
# ---------------------------------------------------------------------------


@dataclass
class DissipativeReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    defect: np.ndarray
    weights: np.ndarray
    rel_energy: np.ndarray
    pairing: np.ndarray
    dissipation: np.ndarray
    plastic: np.ndarray
    tol: float
    passed: bool
    max_defect: float
    worst_time: float

    CSV_HEADER = "time,lhs,rhs,defect,K_value"

    def csv_lines(self):
        rows = [self.CSV_HEADER]
        for i in range(len(self.times)):
            rows.append(
                ",".join(
                    format(x, ".17g")
                    for x in (self.times[i], self.lhs[i], self.rhs[i], self.defect[i], self.weights[i])
                )
            )
        rows.append(
            f"# max_defect={self.max_defect:.17g} tol={self.tol:.17g} passed={str(self.passed).lower()}"
        )
        return rows


def verifier_tolerance(grid, times, scale: float, C: float = DEFAULT_TOL_C) -> float:
    h_t = float(np.max(np.diff(times))) if len(times) > 1 else 0.0
    h_x = max(grid.h)
    return C * (h_t + h_x * h_x) * scale


def dissipative_inequality_check(
    params: MaterialParams,
    states,
    triple: TestTriple,
    gamma: float,
    cfg: RegWeightConfig = None,
    tol: float = None,
    tol_factor: float = None,
    plastic: PlasticParams = None,
    forcing=None,
) -> DissipativeReport:
    """Evaluate the Gronwall-weighted relative-energy inequality along a
    stored trajectory at every step time. Reports the worst defect; a
    positive defect beyond tolerance is reported, never raised — for runs
    without stress diffusion that outcome is the object of study.

    forcing: callable t -> face component list, or None.
    """
    _require_unit_interface(params)
    states = list(states)
    if len(states) < 2:
        raise ConfigError("verify-trajectory-short", "need at least two states")
    grid = states[0].grid
    if cfg is None:
        cfg = default_reg_config(params)
    if triple.support_box is not None:
        for (lo, hi), L in zip(triple.support_box, grid.length):
            if lo < 0.0 or hi > L:
                raise ConfigError(
                    "triple-support-outside-domain",
                    f"support interval ({lo}, {hi}) not inside [0, {L}]",
                )

    n = len(states)
    times = np.array([s.t for s in states])
    if np.any(np.diff(times) <= 0):
        raise ConfigError("verify-times-monotone", "state times must increase")

    R = np.zeros(n)
    K = np.zeros(n)
    I = np.zeros(n)
    P = np.zeros(n)
    A = np.zeros(n)
    W = np.zeros(n)
    for i, st in enumerate(states):
        ref = _TripleOnGrid(grid, params, triple, st.t)
        trial = build_trial(params, st, ref)
        f_val = forcing(st.t) if forcing is not None else None
        A[i] = system_operator_apply(params, grid, ref, st.t, trial, gamma, forcing=f_val)
        diss = relative_dissipation(params, st, st.mu.data, triple, gamma, cfg, ref=ref)
        W[i] = diss.total
        R[i] = diss.rel_energy.total
        K[i] = diss.weight
        P[i] = plastic_gap(plastic, params, st, ref.S_cells)
        I[i] = A[i] + P[i] + W[i]

    # cumulative integral of K by trapezoid over step times
    IK = np.zeros(n)
    IK[1:] = np.cumsum(0.5 * (K[1:] + K[:-1]) * np.diff(times))

    lhs = np.zeros(n)
    rhs = np.zeros(n)
    lhs[0] = R[0]
    rhs[0] = R[0]
    for j in range(1, n):
        steps = np.diff(times[: j + 1])
        weights = np.exp(IK[j] - IK[1 : j + 1])
        lhs[j] = R[j] + float(np.sum(steps * I[1 : j + 1] * weights))
        rhs[j] = R[0] * np.exp(IK[j])
    defect = lhs - rhs

    scale = max(1.0, R[0], float(np.max(R)), float(np.max(np.abs(I))) * (times[-1] - times[0]))
    if tol is None:
        tol = verifier_tolerance(grid, times, scale, C=tol_factor if tol_factor is not None else DEFAULT_TOL_C)
    max_defect = float(np.max(defect))
    worst = float(times[int(np.argmax(defect))])
    return DissipativeReport(
        times=times,
        lhs=lhs,
        rhs=rhs,
        defect=defect,
        weights=K,
        rel_energy=R,
        pairing=A,
        dissipation=W,
        plastic=P,
        tol=float(tol),
        passed=bool(max_defect <= tol),
        max_defect=max_defect,
        worst_time=worst,
    )
