"""Shared pieces for the test suite: independent oracles and small builders.

Nothing here imports from the test modules; test modules import from here.
"""

import numpy as np

from vepflow.grid import Grid
from vepflow.operators import (
    advect_comps,
    jaumann_commutator,
    laplacian_neumann,
    skw_grad,
    strain_rhs_cells,
)
from vepflow.state import State


# ---------------------------------------------------------------------------
# 1-D grid search for the scalar proximal problem (independent of the closed
# form in materials).  Strictly convex objective, so hierarchical refinement
# down to `resolution` brackets the minimizer.
# ---------------------------------------------------------------------------

def prox_scalar_grid_search(zn, a, b, sigma, h, resolution=1e-6):
    lo, hi = 0.0, min(sigma, max(zn, 0.0) + 1.0)
    for _ in range(6):
        t = np.linspace(lo, hi, 1201)
        obj = 0.5 * (t - zn) ** 2 + h * (0.5 * a * t ** 2 + b * t)
        i = int(np.argmin(obj))
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
        if hi - lo < resolution:
            break
    t = np.arange(lo, hi + resolution, resolution)
    obj = 0.5 * (t - zn) ** 2 + h * (0.5 * a * t ** 2 + b * t)
    return float(t[int(np.argmin(obj))])


# ---------------------------------------------------------------------------
# Dense monolithic solve of the implicit stress inclusion
#
#     0 in (S - S_old)/h + L S - rhs + dP(S)
#
# by forward-backward (projected-gradient) iteration on the stacked dense
# system.  The pointwise fixed point in solve_stress uses step h; here the
# step is tau = m/|A|^2 computed from the assembled matrix, so agreement is
# evidence for the solution, not for the iteration.
# ---------------------------------------------------------------------------

def dense_stress_oracle(grid: Grid, plastic, eta_cells, G_cells, S_old, vcomps,
                        h: float, gamma: float, tol: float = 1e-15,
                        max_iter: int = 200000):
    d = grid.dim
    ncomp = len(S_old)
    shape = grid.n
    size = int(np.prod(shape))
    N = ncomp * size

    rot = skw_grad(grid, vcomps, mode="noslip")
    rhs = strain_rhs_cells(grid, vcomps, eta_cells, mode="noslip")

    def lin(comps):
        out = advect_comps(grid, vcomps, comps)
        jc = jaumann_commutator(d, comps, rot)
        out = tuple(o + j for o, j in zip(out, jc))
        if gamma != 0.0:
            out = tuple(o - gamma * laplacian_neumann(grid, c) for o, c in zip(out, comps))
        return out

    def pack(comps):
        return np.concatenate([np.asarray(c).ravel() for c in comps])

    def unpack(vec):
        return tuple(vec[i * size:(i + 1) * size].reshape(shape) for i in range(ncomp))

    M = np.zeros((N, N))
    basis = np.zeros(N)
    for j in range(N):
        basis[:] = 0.0
        basis[j] = 1.0
        M[:, j] = pack(lin(unpack(basis)))

    A = np.eye(N) / h + M
    b = pack(S_old) / h + pack(rhs)

    sym = 0.5 * (A + A.T)
    m = float(np.linalg.eigvalsh(sym).min())
    lip = float(np.linalg.norm(A, 2))
    assert m > 0, "stress step operator must be strongly monotone"
    tau = m / lip ** 2

    S = pack(S_old)
    scale = max(1.0, float(np.max(np.abs(S))), float(np.max(np.abs(b))) * h)
    iters = 0
    for iters in range(1, max_iter + 1):
        forward = S - tau * (A @ S - b)
        S_new = pack(plastic.prox(G_cells, unpack(forward), tau, d))
        delta = float(np.max(np.abs(S_new - S)))
        S = S_new
        if delta <= tol * scale:
            break
    return unpack(S), iters, tau


# ---------------------------------------------------------------------------
# state sampled from a test triple at the triple's own evaluation points
# ---------------------------------------------------------------------------

def sample_state(grid: Grid, triple, t: float) -> State:
    st = State.zeros(grid)
    for a in range(grid.dim):
        st.v.comps[a][...] = triple.velocity(t, tuple(grid.face_mesh(a)))[a]
    cells = tuple(grid.cell_mesh())
    for c, val in enumerate(triple.stress(t, cells)):
        st.S.comps[c][...] = val
    st.phi.data[...] = triple.phase(t, cells)
    st.mu.data[...] = triple.chem(t, cells)
    st.t = t
    return st


# ---------------------------------------------------------------------------
# config text builders
# ---------------------------------------------------------------------------

def spinodal_text(n, steps, h, gamma, seed, out, extra=""):
    return (
        f"grid.n = {n},{n}\n"
        f"run.h = {h}\n"
        f"run.steps = {steps}\n"
        f"run.gamma = {gamma}\n"
        f"run.seed = {seed}\n"
        f"run.output = {out}\n"
        "scenario = spinodal\n"
        "spinodal.amplitude = 0.2\n" + extra
    )
