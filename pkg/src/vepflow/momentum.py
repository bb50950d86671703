"""Velocity/pressure saddle-point solve on the MAC grid.

The discrete momentum equation is assembled in integrated form (every row is
a cell-volume multiple of the per-volume equation) so that pairing the
equation with the solution vector reproduces the energy quadratures exactly.
The incompressibility rows use the same integrated divergence whose transpose
is minus the pressure gradient, so pressure does no work on the solution.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .matrices import OperatorMatrices


def assemble_momentum_operator(
    mats: OperatorMatrices,
    nu_cells: np.ndarray,
    mass_coeff_faces=None,
    m_faces=None,
) -> sp.csr_matrix:
    """Viscous form plus optional diagonal mass and skew convection."""
    A = mats.visc_matrix(nu_cells)
    if mass_coeff_faces is not None:
        A = A + sp.diags(mats.mass_diag(mass_coeff_faces))
    if m_faces is not None:
        A = A + mats.convection_matrix(m_faces)
    return A.tocsr()


def solve_saddle(mats: OperatorMatrices, A: sp.spmatrix, rhs_dof: np.ndarray):
    """Solve A u - Div^T p = rhs, Div u = 0 with the first constraint row
    traded for a pressure pin (the dropped row is the sum of the others, so
    the divergence still vanishes in every cell).

    Returns (ucomps, p_cells, relative_residual) with the residual measured
    on the unpinned system.
    """
    nd = mats.n_face_dofs
    nc = mats.n_cells
    div0 = mats.div_int.tocsr(copy=True)
    div0.data[div0.indptr[0] : div0.indptr[1]] = 0.0
    div0.eliminate_zeros()
    pin = sp.coo_matrix(([1.0], ([0], [0])), shape=(nc, nc))
    K = sp.bmat([[A, -mats.div_int.T], [div0, pin]], format="csc")
    b = np.zeros(nd + nc)
    b[:nd] = rhs_dof
    x = splu(K).solve(b)
    u = x[:nd]
    p = x[nd:]
    res_mom = A @ u - mats.div_int.T @ p - rhs_dof
    res_div = mats.div_int @ u
    res_div[0] = 0.0
    num = np.sqrt(float(res_mom @ res_mom) + float(res_div @ res_div))
    den = max(float(np.linalg.norm(rhs_dof)), 1e-300)
    return mats.unpack(u), p.reshape(mats.grid.n), num / den


def project_divfree(mats: OperatorMatrices, ucomps):
    """Discrete Leray projection: closest (in the face quadrature) exactly
    divergence-free no-slip field. Used to clean up initial data."""
    V = mats.grid.cell_volume
    A = sp.diags(np.full(mats.n_face_dofs, V))
    rhs = V * mats.pack(ucomps)
    u, _, _ = solve_saddle(mats, A, rhs)
    return u
