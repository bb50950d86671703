"""Discrete calculus on the MAC grid.

Everything downstream (implicit solves, energy certificates, the inequality
verifier) evaluates integrals through the quadratures defined here, so the
cancellations the step certificate relies on are algebraic identities of these
operators rather than approximations. The load-bearing ones:

  - ``<gradient f, u> + <f, divergence u> = 0`` for u with zero wall-normal
    faces (MAC adjointness; boundary gradient rows never meet nonzero u).
  - flux-split advection: ``<adv(u,f), g> + <adv(u,g), f> = -<div u, f g>``,
    exactly, so the form is antisymmetric whenever ``div_h u = 0``.
  - ``laplacian_neumann = -D^T D`` over interior faces, so
    ``-<lap f, g> = sum_faces (Df)(Dg) V``.
  - staggered strain (diagonal entries at cells, mixed entries at
    corners/edges with weight V*mult/4) satisfies
    ``|grad v|^2 = 2 |sym grad v|^2`` exactly for discretely divergence-free
    no-slip fields, which pins the Korn constant sqrt(2) at the discrete
    level.

Array layout follows grid.py; all functions take and return plain ndarrays.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid

# ---------------------------------------------------------------------------
# 1-D building blocks applied along one axis of an nd array
# ---------------------------------------------------------------------------


def _diff_stag2cell(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Difference of a staggered array onto centers: (a[i+1]-a[i])/h."""
    sl_hi = [slice(None)] * arr.ndim
    sl_lo = [slice(None)] * arr.ndim
    sl_hi[axis] = slice(1, None)
    sl_lo[axis] = slice(None, -1)
    return (arr[tuple(sl_hi)] - arr[tuple(sl_lo)]) / h


def _diff_cell2stag(arr: np.ndarray, axis: int, h: float, mode: str) -> np.ndarray:
    """Difference of a centered array onto staggered points (size+1 on axis).

    Boundary rows by ``mode``:
      "zero"    boundary value 0 (homogeneous Neumann data)
      "onesided" second-order one-sided stencil
      "noslip"  treat the quantity as 0 on the wall, half-spacing difference
                (used for transverse derivatives of velocity components)
    """
    shape = list(arr.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    interior = [slice(None)] * arr.ndim
    interior[axis] = slice(1, -1)
    out[tuple(interior)] = _diff_stag2cell(arr, axis, h)

    def take(i):
        sl = [slice(None)] * arr.ndim
        sl[axis] = i
        return arr[tuple(sl)]

    lo = [slice(None)] * arr.ndim
    lo[axis] = 0
    hi = [slice(None)] * arr.ndim
    hi[axis] = -1
    if mode == "zero":
        pass
    elif mode == "noslip":
        out[tuple(lo)] = 2.0 * take(0) / h
        out[tuple(hi)] = -2.0 * take(-1) / h
    elif mode == "onesided":
        out[tuple(lo)] = (-2.0 * take(0) + 3.0 * take(1) - take(2)) / h
        out[tuple(hi)] = (2.0 * take(-1) - 3.0 * take(-2) + take(-3)) / h
    else:
        raise ValueError(f"unknown boundary mode {mode!r}")
    return out


def _avg_stag2cell(arr: np.ndarray, axis: int) -> np.ndarray:
    sl_hi = [slice(None)] * arr.ndim
    sl_lo = [slice(None)] * arr.ndim
    sl_hi[axis] = slice(1, None)
    sl_lo[axis] = slice(None, -1)
    return 0.5 * (arr[tuple(sl_hi)] + arr[tuple(sl_lo)])


def _avg_cell2stag(arr: np.ndarray, axis: int, mode: str) -> np.ndarray:
    """Average a centered array onto staggered points.

    mode "nearest": boundary points copy the adjacent cell (used for material
    coefficients); mode "zero": boundary points are 0 (used for velocity
    components that vanish on walls).
    """
    shape = list(arr.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    interior = [slice(None)] * arr.ndim
    interior[axis] = slice(1, -1)
    out[tuple(interior)] = _avg_stag2cell(arr, axis)
    lo = [slice(None)] * arr.ndim
    lo[axis] = 0
    hi = [slice(None)] * arr.ndim
    hi[axis] = -1
    first = [slice(None)] * arr.ndim
    first[axis] = 0
    last = [slice(None)] * arr.ndim
    last[axis] = -1
    if mode == "nearest":
        out[tuple(lo)] = arr[tuple(first)]
        out[tuple(hi)] = arr[tuple(last)]
    elif mode == "zero":
        pass
    else:
        raise ValueError(f"unknown boundary mode {mode!r}")
    return out


def _pad_axis(arr: np.ndarray, axis: int, before: int, after: int) -> np.ndarray:
    pads = [(0, 0)] * arr.ndim
    pads[axis] = (before, after)
    return np.pad(arr, pads)


# ---------------------------------------------------------------------------
# first-order operators
# ---------------------------------------------------------------------------


def gradient(grid: Grid, f: np.ndarray, mode: str = "onesided"):
    """Cell scalar -> face vector. Interior faces use the centered two-point
    difference; wall faces are one-sided second order by default, or exactly
    zero with mode="zero" (homogeneous Neumann data)."""
    return [_diff_cell2stag(f, a, grid.h[a], mode) for a in range(grid.dim)]


def divergence(grid: Grid, ucomps) -> np.ndarray:
    out = np.zeros(grid.n)
    for a in range(grid.dim):
        out += _diff_stag2cell(ucomps[a], a, grid.h[a])
    return out


def laplacian_neumann(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Standard 5/7-point Neumann Laplacian (ghost reflection): the divergence
    of the interior-face gradient with zero wall flux. Symmetric negative
    semidefinite; constants are in the kernel and row sums vanish."""
    out = np.zeros(grid.n)
    for a in range(grid.dim):
        flux = _diff_stag2cell(f, a, grid.h[a])  # interior faces only
        flux = _pad_axis(flux, a, 1, 1)
        out += _diff_stag2cell(flux, a, grid.h[a])
    return out


def advect_scalar(grid: Grid, ucomps, f: np.ndarray) -> np.ndarray:
    """Flux-split advection u . grad f at cells.

    Per axis each interior face contributes u_f (f_nb - f_c)/2 to both
    neighbors; wall faces contribute nothing. Second order in the interior and
    exactly antisymmetric (as a form in f) when div_h u = 0 with no-slip u.
    """
    out = np.zeros(grid.n)
    for a in range(grid.dim):
        h = grid.h[a]
        sl_int = [slice(None)] * grid.dim
        sl_int[a] = slice(1, -1)
        u_int = ucomps[a][tuple(sl_int)]
        df = _diff_stag2cell(f, a, 1.0)  # f[i+1]-f[i] at interior faces
        flux = u_int * df
        out += (_pad_axis(flux, a, 0, 1) + _pad_axis(flux, a, 1, 0)) / (2.0 * h)
    return out


def advect_comps(grid: Grid, ucomps, comps):
    """Componentwise flux-split advection (tensor transport)."""
    return tuple(advect_scalar(grid, ucomps, c) for c in comps)


def chemical_force(grid: Grid, phi: np.ndarray, mu: np.ndarray):
    """Face force mu * grad(phi), defined as the exact adjoint of the
    flux-split advection pairing: <force, u> = <advect(u, phi), mu> for every
    no-slip u. Interior faces carry (phi_R - phi_L)/h * (mu_L + mu_R)/2; wall
    faces are zero."""
    comps = []
    for a in range(grid.dim):
        h = grid.h[a]
        df = _diff_stag2cell(phi, a, h)
        mu_avg = _avg_stag2cell(mu, a)
        comps.append(_pad_axis(df * mu_avg, a, 1, 1))
    return comps


# ---------------------------------------------------------------------------
# staggered strain machinery
# ---------------------------------------------------------------------------


def strain_diag(grid: Grid, ucomps):
    """Diagonal strain entries du_a/dx_a at cells (their sum is div_h u)."""
    return [_diff_stag2cell(ucomps[a], a, grid.h[a]) for a in range(grid.dim)]


def transverse_derivative(grid: Grid, ucomps, a: int, b: int, mode: str = "noslip") -> np.ndarray:
    """du_a/dx_b (a != b) at points staggered in both a and b.

    mode "noslip" treats u_a as zero on the x_b walls (half-spacing rows);
    mode "onesided" extrapolates for fields without boundary conditions.
    """
    if a == b:
        raise ValueError("use strain_diag for diagonal entries")
    m = "noslip" if mode == "noslip" else "onesided"
    return _diff_cell2stag(ucomps[a], b, grid.h[b], m)


def strain_offdiag(grid: Grid, ucomps, a: int, b: int, mode: str = "noslip") -> np.ndarray:
    """e_ab = (du_a/dx_b + du_b/dx_a)/2 at (a,b)-staggered points."""
    return 0.5 * (
        transverse_derivative(grid, ucomps, a, b, mode)
        + transverse_derivative(grid, ucomps, b, a, mode)
    )


def rotation_offdiag(grid: Grid, ucomps, a: int, b: int, mode: str = "noslip") -> np.ndarray:
    """w_ab = (du_a/dx_b - du_b/dx_a)/2 at (a,b)-staggered points."""
    return 0.5 * (
        transverse_derivative(grid, ucomps, a, b, mode)
        - transverse_derivative(grid, ucomps, b, a, mode)
    )


def axis_pairs(dim: int):
    return [(a, b) for a in range(dim) for b in range(a + 1, dim)]


def stag_weights(grid: Grid, axes) -> np.ndarray:
    """Quadrature weights for a field staggered along ``axes``: cell volume
    times 1/2 per staggered axis on that axis's boundary layers. Equivalently
    V * (number of adjacent cells) / 2^(#staggered axes)."""
    staggered = tuple(a in axes for a in range(grid.dim))
    w = np.full(grid.shape(staggered), grid.cell_volume)
    for a in axes:
        lo = [slice(None)] * grid.dim
        lo[a] = 0
        hi = [slice(None)] * grid.dim
        hi[a] = -1
        w[tuple(lo)] *= 0.5
        w[tuple(hi)] *= 0.5
    return w


def avg_stagpair_to_cell(arr: np.ndarray, axes) -> np.ndarray:
    """Plain 2^k-point average from (multi-)staggered points to cells."""
    out = arr
    for a in axes:
        out = _avg_stag2cell(out, a)
    return out


def avg_cell_to_stagpair(arr: np.ndarray, axes) -> np.ndarray:
    """Average of the adjacent cells at (multi-)staggered points. With the
    stag_weights quadrature this map and avg_stagpair_to_cell are exact
    adjoints up to the weight ratio V*mult/4, which is what the mixed strain
    pairing uses."""
    out = arr
    for a in axes:
        out = _avg_cell2stag(out, a, "nearest")
    return out


def sym_grad(grid: Grid, ucomps, mode: str = "onesided"):
    """Deviatoric symmetric gradient at cells plus the trace.

    Returns ``(comps, trace)`` where comps follow the trace-free tensor
    component layout ((s11, s12) in 2D; (s11, s22, s12, s13, s23) in 3D with
    the deviatoric shift applied) and ``trace`` equals divergence(u). Mixed
    entries are corner/edge values averaged back to cells.
    """
    d = grid.dim
    diag = strain_diag(grid, ucomps)
    tr = np.zeros(grid.n)
    for e in diag:
        tr += e
    off = {}
    for a, b in axis_pairs(d):
        off[(a, b)] = avg_stagpair_to_cell(strain_offdiag(grid, ucomps, a, b, mode), (a, b))
    if d == 2:
        comps = (diag[0] - 0.5 * tr, off[(0, 1)])
    else:
        comps = (
            diag[0] - tr / 3.0,
            diag[1] - tr / 3.0,
            off[(0, 1)],
            off[(0, 2)],
            off[(1, 2)],
        )
    return comps, tr


def skw_grad(grid: Grid, ucomps, mode: str = "onesided"):
    """Antisymmetric gradient components (w12[, w13, w23]) at cells."""
    d = grid.dim
    return tuple(
        avg_stagpair_to_cell(rotation_offdiag(grid, ucomps, a, b, mode), (a, b))
        for a, b in axis_pairs(d)
    )


def strain_pairing(grid: Grid, Tcomps, ucomps, eta: np.ndarray = None, mode: str = "noslip") -> float:
    """Mixed-location pairing int eta T : sym grad u for trace-free symmetric
    T at cells. Diagonal parts meet the cell strains, mixed parts meet the
    corner/edge strains with T (and eta) averaged outward. This exact form is
    what the momentum and stress equations share, so the eta S : sym grad v
    terms cancel in the energy budget."""
    d = grid.dim
    V = grid.cell_volume
    eta = np.ones(grid.n) if eta is None else eta
    diag = strain_diag(grid, ucomps)
    T = _tensor_diag_entries(d, Tcomps)
    acc = 0.0
    for a in range(d):
        acc += V * float(np.sum(eta * T[a] * diag[a]))
    offidx = _offdiag_index(d)
    for a, b in axis_pairs(d):
        e = strain_offdiag(grid, ucomps, a, b, mode)
        w = stag_weights(grid, (a, b))
        t_up = avg_cell_to_stagpair(eta * Tcomps[offidx[(a, b)]], (a, b))
        acc += 2.0 * float(np.sum(w * t_up * e))
    return acc


def strain_rhs_cells(grid: Grid, ucomps, eta: np.ndarray, mode: str = "noslip"):
    """Cell tensor components of eta * dev sym grad u, defined as the adjoint
    of strain_pairing in the cell tensor inner product. Used as the stress
    equation right-hand side so that <rhs, S>_cells == strain_pairing(S, u)."""
    d = grid.dim
    diag = strain_diag(grid, ucomps)
    tr = np.zeros(grid.n)
    for e in diag:
        tr += e
    off = {}
    for a, b in axis_pairs(d):
        # the pairing averages the product eta*T outward, so its exact
        # T-adjoint is eta at the cell times the averaged-back strain
        e = strain_offdiag(grid, ucomps, a, b, mode)
        off[(a, b)] = eta * avg_stagpair_to_cell(e, (a, b))
    if d == 2:
        return (0.5 * eta * (diag[0] - diag[1]), off[(0, 1)])
    # 3D: the pairing sees T1*(e11-e33) + T2*(e22-e33) on the diagonal while
    # the stored-component inner product has metric [[2,1],[1,2]] there;
    # inverting the metric reproduces eta * dev sym grad u exactly.
    g1 = eta * (diag[0] - diag[2])
    g2 = eta * (diag[1] - diag[2])
    s11 = (2.0 * g1 - g2) / 3.0
    s22 = (2.0 * g2 - g1) / 3.0
    return (s11, s22, off[(0, 1)], off[(0, 2)], off[(1, 2)])


def _tensor_diag_entries(dim: int, comps):
    if dim == 2:
        return [comps[0], -comps[0]]
    return [comps[0], comps[1], -comps[0] - comps[1]]


def _offdiag_index(dim: int):
    if dim == 2:
        return {(0, 1): 1}
    return {(0, 1): 2, (0, 2): 3, (1, 2): 4}


def tensor_divergence(grid: Grid, Tcomps, eta: np.ndarray = None, mode: str = "noslip"):
    """Face vector div(eta T) for trace-free symmetric cell T, defined through
    -<div(eta T), u> = strain_pairing(T, u, eta) for all no-slip u. Returned
    per unit volume on full face arrays with zero wall-normal entries."""
    d = grid.dim
    V = grid.cell_volume
    eta = np.ones(grid.n) if eta is None else eta
    T = _tensor_diag_entries(d, Tcomps)
    out = []
    offidx = _offdiag_index(d)
    for a in range(d):
        ga = np.zeros(grid.face_shape(a))
        # diagonal part: d/dx_a (eta T_aa), interior faces
        interior = [slice(None)] * d
        interior[a] = slice(1, -1)
        ga[tuple(interior)] = _diff_stag2cell(eta * T[a], a, grid.h[a])
        # mixed parts: -2/V times the adjoint of u_a -> e_ab, weighted
        for b in range(d):
            if b == a:
                continue
            key = (min(a, b), max(a, b))
            t_up = avg_cell_to_stagpair(eta * Tcomps[offidx[key]], key)
            w = stag_weights(grid, key)
            ga -= 2.0 * _strain_adjoint_scatter(grid, w * t_up, a, b, mode) / V
        # zero wall-normal faces: equations live on interior faces only
        lo = [slice(None)] * d
        lo[a] = 0
        hi = [slice(None)] * d
        hi[a] = -1
        ga[tuple(lo)] = 0.0
        ga[tuple(hi)] = 0.0
        out.append(ga)
    return out


def _strain_adjoint_scatter(grid: Grid, flux: np.ndarray, a: int, b: int, mode: str) -> np.ndarray:
    """Exact adjoint of the map u_a -> (contribution of du_a/dx_b to e_ab),
    i.e. of (1/2) du_a/dx_b with noslip wall rows: maps a weighted
    (a,b)-staggered array back to a-faces. flux is assumed already multiplied
    by the quadrature weights; the result is integrated (not per volume)."""
    h = grid.h[b]
    d = grid.dim
    # interior staggered rows j: e_j += (u[j] - u[j-1]) / (2h); adjoint at
    # cell-along-b index i collects f_stag[i] - f_stag[i+1] over 2h
    sl_int = [slice(None)] * d
    sl_int[b] = slice(1, -1)
    f_int = flux[tuple(sl_int)]
    out = (_pad_axis(f_int, b, 1, 0) - _pad_axis(f_int, b, 0, 1)) / (2.0 * h)
    lo = [slice(None)] * d
    lo[b] = 0
    hi = [slice(None)] * d
    hi[b] = -1
    first = [slice(None)] * d
    first[b] = 0
    last = [slice(None)] * d
    last[b] = -1
    if mode == "noslip":
        # wall rows: e_0 += u_first / h and e_m -= u_last / h
        out[tuple(first)] += flux[tuple(lo)] / h
        out[tuple(last)] -= flux[tuple(hi)] / h
    return out


# ---------------------------------------------------------------------------
# pointwise tensor algebra
# ---------------------------------------------------------------------------


def tensor_inner(dim: int, A, B) -> np.ndarray:
    """Pointwise Frobenius product A:B for trace-free symmetric component
    tuples."""
    if dim == 2:
        return 2.0 * (A[0] * B[0] + A[1] * B[1])
    a33 = -A[0] - A[1]
    b33 = -B[0] - B[1]
    return (
        A[0] * B[0]
        + A[1] * B[1]
        + a33 * b33
        + 2.0 * (A[2] * B[2] + A[3] * B[3] + A[4] * B[4])
    )


def jaumann_commutator(dim: int, Scomps, Wcomps):
    """Pointwise S W - W S for symmetric trace-free S and antisymmetric W
    (component tuples at cells). The result is symmetric trace-free, and
    (S W - W S) : S = 0 identically."""
    if dim == 2:
        s11, s12 = Scomps
        (w,) = Wcomps
        # S W - W S = 2 w * [[-s12, s11], [s11, s12]]
        return (-2.0 * w * s12, 2.0 * w * s11)
    s11, s22, s12, s13, s23 = Scomps
    w12, w13, w23 = Wcomps
    s33 = -s11 - s22
    S = np.stack(
        [
            np.stack([s11, s12, s13], axis=-1),
            np.stack([s12, s22, s23], axis=-1),
            np.stack([s13, s23, s33], axis=-1),
        ],
        axis=-2,
    )
    zeros = np.zeros_like(s11)
    W = np.stack(
        [
            np.stack([zeros, w12, w13], axis=-1),
            np.stack([-w12, zeros, w23], axis=-1),
            np.stack([-w13, -w23, zeros], axis=-1),
        ],
        axis=-2,
    )
    C = S @ W - W @ S
    return (
        C[..., 0, 0],
        C[..., 1, 1],
        C[..., 0, 1],
        C[..., 0, 2],
        C[..., 1, 2],
    )


# ---------------------------------------------------------------------------
# quadratures and inner products
# ---------------------------------------------------------------------------


def inner_cells(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    return grid.cell_volume * float(np.sum(f * g))


def norm_cells(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(inner_cells(grid, f, f)))


def face_weights(grid: Grid, axis: int) -> np.ndarray:
    return stag_weights(grid, (axis,))


def inner_faces(grid: Grid, ucomps, vcomps) -> float:
    acc = 0.0
    for a in range(grid.dim):
        acc += float(np.sum(face_weights(grid, a) * ucomps[a] * vcomps[a]))
    return acc


def norm_faces(grid: Grid, ucomps) -> float:
    return float(np.sqrt(inner_faces(grid, ucomps, ucomps)))


def inner_grad_faces(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """sum over interior faces of (Df)(Dg) V: the quadratic form of
    -laplacian_neumann, used for gradient energies and dissipations."""
    V = grid.cell_volume
    acc = 0.0
    for a in range(grid.dim):
        acc += V * float(np.sum(_diff_stag2cell(f, a, grid.h[a]) * _diff_stag2cell(g, a, grid.h[a])))
    return acc


def grad_energy_tensor(grid: Grid, comps, dim: int) -> float:
    """sum over interior faces of |D S|^2_F V with the trace-free metric
    (matches componentwise laplacian_neumann applied to the stored comps)."""
    V = grid.cell_volume
    acc = 0.0
    for a in range(grid.dim):
        diffs = [_diff_stag2cell(c, a, grid.h[a]) for c in comps]
        acc += V * float(np.sum(tensor_inner(dim, diffs, diffs)))
    return acc


def interp_face_to_cell(grid: Grid, ucomps):
    """Velocity components averaged to cell centers."""
    return [_avg_stag2cell(ucomps[a], a) for a in range(grid.dim)]


def interp_cell_to_face(grid: Grid, f: np.ndarray, axis: int, mode: str = "nearest") -> np.ndarray:
    return _avg_cell2stag(f, axis, mode)


# ---------------------------------------------------------------------------
# divergence-free test fields
# ---------------------------------------------------------------------------


def stream_velocity(grid: Grid, psi: np.ndarray):
    """2D: velocity (d psi/dy, -d psi/dx) from a corner stream function.
    Exactly divergence-free in the discrete sense; psi vanishing on boundary
    corners gives zero wall-normal faces."""
    if grid.dim != 2:
        raise ValueError("stream_velocity is 2D; use potential_velocity for 3D")
    hx, hy = grid.h
    u = (psi[:, 1:] - psi[:, :-1]) / hy
    v = -(psi[1:, :] - psi[:-1, :]) / hx
    return [u, v]


def potential_velocity(grid: Grid, Acomps):
    """3D: u = curl A with A components on edges (component a staggered in the
    two transverse axes). Discretely divergence-free; zero tangential A on the
    wall planes gives zero wall-normal velocity."""
    if grid.dim != 3:
        raise ValueError("potential_velocity is 3D")
    h = grid.h
    Ax, Ay, Az = Acomps
    ux = _diff_stag2cell(Az, 1, h[1]) - _diff_stag2cell(Ay, 2, h[2])
    uy = _diff_stag2cell(Ax, 2, h[2]) - _diff_stag2cell(Az, 0, h[0])
    uz = _diff_stag2cell(Ay, 0, h[0]) - _diff_stag2cell(Ax, 1, h[1])
    return [ux, uy, uz]


def random_divfree_velocity(grid: Grid, rng: np.random.Generator, n_modes: int = 4, amplitude: float = 1.0):
    """Random smooth discretely divergence-free no-slip velocity field, built
    from low-mode sinusoidal stream functions (2D) or edge potentials (3D)."""
    if grid.dim == 2:
        X, Y = grid.mesh((True, True))
        psi = np.zeros((grid.n[0] + 1, grid.n[1] + 1))
        for _ in range(n_modes):
            kx = int(rng.integers(1, 5))
            ky = int(rng.integers(1, 5))
            psi += rng.normal() * np.sin(np.pi * kx * X / grid.length[0]) * np.sin(
                np.pi * ky * Y / grid.length[1]
            )
        return stream_velocity(grid, amplitude * psi)
    comps = []
    for a in range(3):
        stag = tuple(ax != a for ax in range(3))
        mesh = grid.mesh(stag)
        A = np.zeros(grid.shape(stag))
        for _ in range(n_modes):
            term = np.ones_like(A) * rng.normal()
            for ax in range(3):
                k = int(rng.integers(1, 4))
                x = mesh[ax]
                if stag[ax]:
                    term = term * np.sin(np.pi * k * x / grid.length[ax])
                else:
                    term = term * np.cos(np.pi * k * x / grid.length[ax])
            A += term
        comps.append(amplitude * A)
    return potential_velocity(grid, comps)
