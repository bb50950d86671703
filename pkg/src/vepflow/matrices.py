"""Sparse matrices for the implicit solves, cached per grid.

The matrix entries mirror the array operators in operators.py stencil for
stencil; the solvers get matrices, the certificates get arrays, and the two
agree to machine precision. Velocity unknowns are packed per axis over
interior faces only (wall-normal faces are identically zero), pressure over
cells, in C order.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sp

from .grid import Grid
from .operators import (
    _avg_cell2stag,
    _avg_stag2cell,
    avg_cell_to_stagpair,
    axis_pairs,
    stag_weights,
)

# ---------------------------------------------------------------------------
# 1-D stencil factories
# ---------------------------------------------------------------------------


def _d1_stag2cell(m: int, h: float) -> sp.csr_matrix:
    rows = np.repeat(np.arange(m), 2)
    cols = np.stack([np.arange(m), np.arange(1, m + 1)], axis=1).ravel()
    vals = np.tile([-1.0 / h, 1.0 / h], m)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m + 1))


def _d1_cell2stag(m: int, h: float, mode: str) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j in range(1, m):
        rows += [j, j]
        cols += [j - 1, j]
        vals += [-1.0 / h, 1.0 / h]
    if mode == "noslip":
        rows += [0, m]
        cols += [0, m - 1]
        vals += [2.0 / h, -2.0 / h]
    elif mode == "onesided":
        rows += [0, 0, 0, m, m, m]
        cols += [0, 1, 2, m - 1, m - 2, m - 3]
        vals += [-2.0 / h, 3.0 / h, -1.0 / h, 2.0 / h, -3.0 / h, 1.0 / h]
    elif mode != "zero":
        raise ValueError(f"unknown boundary mode {mode!r}")
    return sp.csr_matrix((vals, (rows, cols)), shape=(m + 1, m))


def _a1_stag2cell(m: int) -> sp.csr_matrix:
    rows = np.repeat(np.arange(m), 2)
    cols = np.stack([np.arange(m), np.arange(1, m + 1)], axis=1).ravel()
    vals = np.full(2 * m, 0.5)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m + 1))


def _a1_cell2stag(m: int, mode: str) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j in range(1, m):
        rows += [j, j]
        cols += [j - 1, j]
        vals += [0.5, 0.5]
    if mode == "nearest":
        rows += [0, m]
        cols += [0, m - 1]
        vals += [1.0, 1.0]
    elif mode != "zero":
        raise ValueError(f"unknown boundary mode {mode!r}")
    return sp.csr_matrix((vals, (rows, cols)), shape=(m + 1, m))


def _lap1_neumann(m: int, h: float) -> sp.csr_matrix:
    main = np.full(m, -2.0)
    main[0] = -1.0
    main[-1] = -1.0
    off = np.ones(m - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def _kron_axis(shape, axis: int, M1: sp.spmatrix) -> sp.csr_matrix:
    """Lift a 1-D operator on ``axis`` over a C-ordered nd array of ``shape``
    (the axis extent of shape is replaced by M1's column count)."""
    mats = []
    for a, s in enumerate(shape):
        mats.append(M1 if a == axis else sp.identity(s, format="csr"))
    return reduce(lambda A, B: sp.kron(A, B, format="csr"), mats)


# ---------------------------------------------------------------------------
# per-grid cache
# ---------------------------------------------------------------------------


class OperatorMatrices:
    """All sparse matrices the implicit solves need, built once per grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        d = grid.dim
        n = grid.n
        h = grid.h
        V = grid.cell_volume
        self.n_cells = grid.cell_count()

        # face DOF packing: interior faces per axis
        self.face_shapes = [grid.face_shape(a) for a in range(d)]
        self.restrictions = []
        self.dof_counts = []
        for a in range(d):
            fs = self.face_shapes[a]
            mask = np.zeros(fs, dtype=bool)
            sl = [slice(None)] * d
            sl[a] = slice(1, -1)
            mask[tuple(sl)] = True
            flat = np.flatnonzero(mask.ravel())
            R = sp.csr_matrix(
                (np.ones(flat.size), (np.arange(flat.size), flat)),
                shape=(flat.size, int(np.prod(fs))),
            )
            self.restrictions.append(R)
            self.dof_counts.append(flat.size)
        self.n_face_dofs = int(sum(self.dof_counts))
        self.dof_offsets = np.concatenate([[0], np.cumsum(self.dof_counts)]).astype(int)

        # Neumann Laplacian on cells
        self.lap_n = reduce(
            lambda A, B: A + B,
            [_kron_axis(n, a, _lap1_neumann(n[a], h[a])) for a in range(d)],
        ).tocsr()

        # integrated divergence: cells x face dofs
        div_blocks = []
        for a in range(d):
            Dfull = _kron_axis(self._cellshape_with(a, n[a] + 1), a, _d1_stag2cell(n[a], h[a]))
            div_blocks.append((V * Dfull) @ self.restrictions[a].T)
        self.div_int = sp.hstack(div_blocks, format="csr")

        # strain blocks, restricted to DOF columns, patterns fixed forever
        # diagonal: E_a maps the full dof vector to e_aa at cells
        self._diag_strain = []
        for a in range(d):
            E = _kron_axis(self._cellshape_with(a, n[a] + 1), a, _d1_stag2cell(n[a], h[a]))
            self._diag_strain.append(self._lift_block(E @ self.restrictions[a].T, a))
        # mixed: M_ab maps the full dof vector to e_ab at (a,b)-staggered pts
        self._mixed_strain = {}
        self._mixed_weights = {}
        for a, b in axis_pairs(d):
            Dab = _kron_axis(self.face_shapes[a], b, _d1_cell2stag(n[b], h[b], "noslip"))
            Dba = _kron_axis(self.face_shapes[b], a, _d1_cell2stag(n[a], h[a], "noslip"))
            Ma = 0.5 * (Dab @ self.restrictions[a].T)
            Mb = 0.5 * (Dba @ self.restrictions[b].T)
            self._mixed_strain[(a, b)] = self._lift_block(Ma, a) + self._lift_block(Mb, b)
            self._mixed_weights[(a, b)] = stag_weights(grid, (a, b)).ravel()

        # convection building blocks (patterns fixed, data per call)
        self._conv_parts = []
        for a in range(d):
            parts = []
            for b in range(d):
                if b == a:
                    P1 = _kron_axis(n, a, _d1_cell2stag(n[a], h[a], "zero"))
                    A1 = _kron_axis(self._cellshape_with(a, n[a] + 1), a, _a1_stag2cell(n[a]))
                    parts.append(("same", P1, A1))
                else:
                    pts_shape = self._stag_shape((a, b))
                    D2C = _kron_axis(self._shape_with(pts_shape, b, n[b] + 1), b, _d1_stag2cell(n[b], h[b]))
                    AvgB = _kron_axis(self.face_shapes[a], b, _a1_cell2stag(n[b], "zero"))
                    parts.append(("cross", b, D2C, AvgB))
            self._conv_parts.append(parts)

    # -- helpers ----------------------------------------------------------

    def _cellshape_with(self, axis: int, size: int):
        s = list(self.grid.n)
        s[axis] = size
        return tuple(s)

    @staticmethod
    def _shape_with(shape, axis: int, size: int):
        s = list(shape)
        s[axis] = size
        return tuple(s)

    def _stag_shape(self, axes):
        return self.grid.shape(tuple(a in axes for a in range(self.grid.dim)))

    def _lift_block(self, M: sp.spmatrix, axis: int) -> sp.csr_matrix:
        """Pad a (rows x dof_a) matrix with zero columns into (rows x all dofs)."""
        d = self.grid.dim
        blocks = []
        for a in range(d):
            if a == axis:
                blocks.append(M)
            else:
                blocks.append(sp.csr_matrix((M.shape[0], self.dof_counts[a])))
        return sp.hstack(blocks, format="csr")

    # -- packing ----------------------------------------------------------

    def pack(self, ucomps) -> np.ndarray:
        return np.concatenate(
            [self.restrictions[a] @ np.asarray(ucomps[a]).ravel() for a in range(self.grid.dim)]
        )

    def unpack(self, vec: np.ndarray):
        comps = []
        for a in range(self.grid.dim):
            seg = vec[self.dof_offsets[a] : self.dof_offsets[a + 1]]
            full = self.restrictions[a].T @ seg
            comps.append(full.reshape(self.face_shapes[a]))
        return comps

    # -- assembled operators -----------------------------------------------

    def visc_matrix(self, nu_cells: np.ndarray) -> sp.csr_matrix:
        """Integrated form sum_c 2 nu |sym grad u|^2 with the staggered strain
        placement: SPD on the no-slip dof space."""
        V = self.grid.cell_volume
        nu = np.asarray(nu_cells).ravel()
        A = None
        for E in self._diag_strain:
            term = E.T @ E.multiply((2.0 * V * nu)[:, None])
            A = term if A is None else A + term
        for key, M in self._mixed_strain.items():
            nu_up = avg_cell_to_stagpair(np.asarray(nu_cells), key).ravel()
            w = self._mixed_weights[key]
            A = A + M.T @ M.multiply((4.0 * nu_up * w)[:, None])
        return A.tocsr()

    def convection_matrix(self, m_faces) -> sp.csr_matrix:
        """Integrated skew form of flux-split convection by the face mass flux
        m: C = (M - M^T)/2 where M assembles u_a equations from fluxes m_b.
        Exactly antisymmetric by construction, for any m."""
        grid = self.grid
        d = grid.dim
        V = grid.cell_volume
        blocks = []
        for a in range(d):
            R = self.restrictions[a]
            Mfull = None
            for part in self._conv_parts[a]:
                if part[0] == "same":
                    _, P1, A1 = part
                    mc = _avg_stag2cell(np.asarray(m_faces[a]), a).ravel()
                    term = P1 @ A1.multiply(mc[:, None])
                else:
                    _, b, D2C, AvgB = part
                    mb_up = _avg_cell2stag(np.asarray(m_faces[b]), a, "zero").ravel()
                    term = D2C @ AvgB.multiply(mb_up[:, None])
                Mfull = term if Mfull is None else Mfull + term
            blocks.append((R @ (V * Mfull)) @ R.T)
        M = sp.block_diag(blocks, format="csr")
        return 0.5 * (M - M.T)

    def mass_diag(self, coeff_faces) -> np.ndarray:
        """Integrated diagonal mass vector from per-face coefficients."""
        V = self.grid.cell_volume
        return V * self.pack(coeff_faces)
