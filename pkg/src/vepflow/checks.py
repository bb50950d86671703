"""Self-check battery: exact operator identities, the structural inequality
behind the Gronwall weight, proximal-map oracles, and operator convergence.

Each check returns a CheckResult so the CLI can print one line per check and
tests can assert on the same records.  The identity checks are algebraic: the
discrete operators are built as exact adjoints of one another, so the
residuals must sit at round-off relative to the field magnitudes.  The
convergence checks compare against analytic fields at two resolutions and
look at the error ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .grid import Grid
from .materials import PlasticParams


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "pass" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: value={self.value:.3e} threshold={self.threshold:.3e} {self.detail}"


def _result(name, value, threshold, detail="", larger_ok=False):
    ok = value >= threshold if larger_ok else value <= threshold
    return CheckResult(name=name, value=float(value), threshold=float(threshold),
                       passed=bool(ok), detail=detail)


def _noslip_random_velocity(grid: Grid, rng):
    u = [rng.normal(size=grid.face_shape(a)) for a in range(grid.dim)]
    for a in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[a] = 0
        u[a][tuple(sl)] = 0.0
        sl[a] = -1
        u[a][tuple(sl)] = 0.0
    return u


def identity_checks(dim: int = 2, seed: int = 7, tol: float = 1e-12) -> list:
    """Adjointness and antisymmetry identities on random fields."""
    rng = np.random.default_rng(seed)
    n = (12, 9) if dim == 2 else (6, 5, 7)
    L = tuple(0.9 + 0.3 * a for a in range(dim))
    g = Grid(n, L)
    f = rng.normal(size=g.n)
    q = rng.normal(size=g.n)
    u = _noslip_random_velocity(g, rng)
    ncomp = 2 if dim == 2 else 5
    T = tuple(rng.normal(size=g.n) for _ in range(ncomp))
    eta = 0.5 + rng.random(size=g.n)
    results = []

    gf = ops.gradient(g, f, mode="onesided")
    lhs = ops.inner_faces(g, gf, u)
    rhs = -ops.inner_cells(g, f, ops.divergence(g, u))
    results.append(_result(f"grad-div-adjoint-{dim}d", abs(lhs - rhs), tol * max(abs(lhs), 1.0)))

    lf = ops.laplacian_neumann(g, f)
    gap = abs(-ops.inner_cells(g, lf, q) - ops.inner_grad_faces(g, f, q))
    results.append(_result(f"laplacian-form-{dim}d", gap, tol * max(abs(ops.inner_grad_faces(g, f, f)), 1.0)))

    udf = ops.random_divfree_velocity(g, rng)
    umax = max(np.abs(c).max() for c in udf)
    results.append(_result(f"divfree-residual-{dim}d", np.abs(ops.divergence(g, udf)).max(),
                           tol * max(umax, 1.0) / min(g.h)))
    a1 = ops.inner_cells(g, ops.advect_scalar(g, udf, f), q)
    a2 = ops.inner_cells(g, ops.advect_scalar(g, udf, q), f)
    results.append(_result(f"advection-antisym-{dim}d", abs(a1 + a2), tol * max(abs(a1), 1.0)))

    lhs = ops.inner_faces(g, ops.chemical_force(g, f, q), u)
    rhs = ops.inner_cells(g, ops.advect_scalar(g, u, f), q)
    results.append(_result(f"chemical-force-adjoint-{dim}d", abs(lhs - rhs), tol * max(abs(lhs), 1.0)))

    dT = ops.tensor_divergence(g, T, eta, mode="noslip")
    lhs = ops.inner_faces(g, dT, u)
    rhs = -ops.strain_pairing(g, T, u, eta, mode="noslip")
    results.append(_result(f"tensor-div-adjoint-{dim}d", abs(lhs - rhs), tol * max(abs(lhs), 1.0)))

    rhsC = ops.strain_rhs_cells(g, u, eta, mode="noslip")
    lhs = g.cell_volume * float(np.sum(ops.tensor_inner(dim, rhsC, T)))
    rhs = ops.strain_pairing(g, T, u, eta, mode="noslip")
    results.append(_result(f"strain-rhs-adjoint-{dim}d", abs(lhs - rhs), tol * max(abs(lhs), 1.0)))

    W = tuple(rng.normal(size=g.n) for _ in range(1 if dim == 2 else 3))
    C = ops.jaumann_commutator(dim, T, W)
    scale = max(float(np.abs(ops.tensor_inner(dim, T, T)).max()), 1.0)
    results.append(_result(f"jaumann-neutral-{dim}d", np.abs(ops.tensor_inner(dim, C, T)).max(), tol * scale))
    return results


def _grad_norms(grid: Grid, u):
    """(|grad u|^2, |sym grad u|^2, |div u|^2) in the staggered quadrature."""
    diag = ops.strain_diag(grid, u)
    V = grid.cell_volume
    full = V * sum(float(np.sum(e * e)) for e in diag)
    sym2 = full
    for a, b in ops.axis_pairs(grid.dim):
        w = ops.stag_weights(grid, (a, b))
        dab = ops.transverse_derivative(grid, u, a, b, "noslip")
        dba = ops.transverse_derivative(grid, u, b, a, "noslip")
        full += float(np.sum(w * (dab * dab + dba * dba)))
        e = 0.5 * (dab + dba)
        sym2 += 2.0 * float(np.sum(w * e * e))
    div = ops.divergence(grid, u)
    return full, sym2, V * float(np.sum(div * div))


def strain_identity_check(dim: int = 2, samples: int = 50, seed: int = 3) -> CheckResult:
    """2|sym grad u|^2 = |grad u|^2 + |div u|^2 for arbitrary no-slip fields.

    This exact discrete identity is what makes sqrt(2) a valid Korn constant
    here: the skew part never exceeds the symmetric part.
    """
    rng = np.random.default_rng(seed)
    n = (16, 13) if dim == 2 else (7, 6, 8)
    g = Grid(n, tuple(1.0 + 0.2 * a for a in range(dim)))
    worst = 0.0
    for _ in range(samples):
        u = _noslip_random_velocity(g, rng)
        full, sym2, div2 = _grad_norms(g, u)
        worst = max(worst, abs(2.0 * sym2 - full - div2) / max(2.0 * sym2, 1.0))
    return _result(f"strain-identity-{dim}d", worst, 1e-12, detail=f"{samples} random no-slip fields")


def korn_check(dim: int = 2, samples: int = 1000, seed: int = 5) -> CheckResult:
    """|grad u|^2 <= 2 |sym grad u|^2 on random divergence-free no-slip fields
    (constant sqrt(2), attained as div u -> 0)."""
    rng = np.random.default_rng(seed)
    n = (16, 13) if dim == 2 else (7, 6, 8)
    g = Grid(n, tuple(1.0 + 0.2 * a for a in range(dim)))
    worst = 0.0
    for _ in range(samples):
        u = ops.random_divfree_velocity(g, rng, amplitude=float(rng.uniform(0.5, 3.0)))
        full, sym2, _ = _grad_norms(g, u)
        if sym2 > 0:
            worst = max(worst, full / sym2)
    return _result(f"korn-constant-{dim}d", worst, 2.0 * (1.0 + 1e-10),
                   detail=f"sup |grad|^2 / |sym grad|^2 over {samples} fields")


# ---------------------------------------------------------------------------
# proximal-map oracles
# ---------------------------------------------------------------------------


def prox_grid_oracle(zn: float, a: float, b: float, sigma: float, h: float,
                     resolution: float = 1e-6) -> float:
    """Minimize (t - z)^2/2 + h (a t^2/2 + b t) over [0, sigma] by hierarchical
    grid search down to the requested resolution.  Independent of the closed
    form, so it serves as its oracle."""
    hi0 = min(sigma, zn + 1.0) if np.isfinite(sigma) else zn + 1.0
    lo, hi = 0.0, max(hi0, 1e-9)

    def obj(t):
        return 0.5 * (t - zn) ** 2 + h * (0.5 * a * t * t + b * t)

    for _ in range(6):
        t = np.linspace(lo, hi, 1201)
        i = int(np.argmin(obj(t)))
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
        if hi - lo < resolution:
            break
    t = np.arange(lo, hi + resolution, resolution)
    t = np.minimum(t, sigma) if np.isfinite(sigma) else t
    return float(t[int(np.argmin(obj(t)))])


def _sample_prox_case(rng):
    """One random (G, Z, h) scenario, biased to cover the three regimes:
    below yield (prox returns 0), interior, and projected to the cap."""
    regime = rng.integers(0, 3)
    a = float(rng.uniform(0.0, 2.0))
    b = float(rng.uniform(0.1, 1.0))
    sigma = float(rng.uniform(0.3, 2.5))
    h = float(rng.uniform(1e-3, 0.5))
    if regime == 0:
        zn = float(rng.uniform(0.0, h * b))  # below yield
    elif regime == 1:
        zn = float(rng.uniform(h * b, h * b + sigma * (1.0 + h * a)))  # interior
    else:
        zn = float(rng.uniform(h * b + sigma * (1.0 + h * a), 3.0 * (1.0 + sigma)))  # capped
    return a, b, sigma, h, zn


def prox_oracle_check(samples: int = 10000, seed: int = 17, tol: float = 1e-6) -> CheckResult:
    """Closed-form prox against the grid-search oracle on random cases."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a, b, sigma, h, zn = _sample_prox_case(rng)
        plastic = PlasticParams(a1=a, a2=a, b1=b, b2=b, sigma1=sigma, sigma2=sigma)
        closed = float(plastic.prox_scale(0.5, zn, h))
        grid = prox_grid_oracle(zn, a, b, sigma, h)
        worst = max(worst, abs(closed - grid))
    return _result("prox-grid-oracle", worst, tol, detail=f"{samples} random (phi, Z, h) samples")


def prox_variational_check(batches: int = 50, directions: int = 1000, seed: int = 23,
                           tol: float = 1e-10) -> CheckResult:
    """xi = (Z - prox(Z))/h must satisfy P(T) >= P(S) + xi:(T - S) for every
    admissible T; sampled over random directions and radii in 2D components."""
    rng = np.random.default_rng(seed)
    dim = 2
    worst = -np.inf
    for _ in range(batches):
        a, b, sigma, h, _ = _sample_prox_case(rng)
        plastic = PlasticParams(a1=a, a2=a, b1=b, b2=b, sigma1=sigma, sigma2=sigma)
        G = float(rng.uniform(0.0, 1.0))
        Z = tuple(rng.normal(size=()) * 1.5 for _ in range(2))
        S = plastic.prox(G, Z, h, dim)
        xi = tuple((z - s) / h for z, s in zip(Z, S))
        s_norm = float(np.sqrt(ops.tensor_inner(dim, S, S)))
        p_s = float(plastic.potential(G, s_norm))
        for _ in range(directions):
            d = rng.normal(size=2)
            d /= np.linalg.norm(d)
            _, _, sig_eff = plastic.effective(G)
            r = float(rng.uniform(0.0, min(sig_eff, 4.0)))
            # |T| for component vector t*d: Frobenius norm is sqrt(2)*|t|,
            # so scale the radius accordingly
            t_comps = (r / np.sqrt(2.0)) * d
            t_norm = float(np.sqrt(ops.tensor_inner(dim, tuple(t_comps), tuple(t_comps))))
            p_t = float(plastic.potential(G, t_norm))
            pairing = float(ops.tensor_inner(dim, xi, tuple(t_comps - np.array(S))))
            worst = max(worst, p_s + pairing - p_t)
    return _result("prox-variational-inequality", worst, tol,
                   detail=f"{batches} prox points x {directions} directions")


# ---------------------------------------------------------------------------
# operator convergence on manufactured smooth fields
# ---------------------------------------------------------------------------


def _smooth_fields(grid: Grid):
    """Analytic scalar / velocity with homogeneous Neumann / no-slip walls."""
    X, Y = grid.cell_mesh()
    Lx, Ly = grid.length
    f = np.cos(np.pi * X / Lx) * np.cos(2.0 * np.pi * Y / Ly)

    def lap_f(x, y):
        return -((np.pi / Lx) ** 2 + (2.0 * np.pi / Ly) ** 2) * np.cos(np.pi * x / Lx) * np.cos(
            2.0 * np.pi * y / Ly
        )

    def u0(x, y):
        return np.sin(np.pi * x / Lx) ** 2 * np.sin(2.0 * np.pi * y / Ly)

    def u1(x, y):
        return -np.sin(2.0 * np.pi * x / Lx) * np.sin(np.pi * y / Ly) ** 2

    return f, lap_f, (u0, u1)


def _convergence_errors(n: int):
    g = Grid((n, n), (1.0, 1.0))
    f, lap_f, (u0, u1) = _smooth_fields(g)
    X, Y = g.cell_mesh()
    errs = {}

    lap = ops.laplacian_neumann(g, f)
    errs["laplacian"] = np.sqrt(g.cell_volume * float(np.sum((lap - lap_f(X, Y)) ** 2)))

    u = [np.asarray(u0(*g.face_mesh(0))), np.asarray(u1(*g.face_mesh(1)))]
    Lx, Ly = g.length
    pi = np.pi

    # compressible pair with mixed wavenumbers for the divergence target
    wx = np.sin(pi * g.face_mesh(0)[0] / Lx) * np.cos(pi * g.face_mesh(0)[1] / Ly)
    wy = np.sin(pi * g.face_mesh(1)[1] / Ly) * np.cos(3.0 * pi * g.face_mesh(1)[0] / Lx)
    div = ops.divergence(g, [wx, wy])
    div_exact = (pi / Lx) * np.cos(pi * X / Lx) * np.cos(pi * Y / Ly) + (
        pi / Ly
    ) * np.cos(pi * Y / Ly) * np.cos(3.0 * pi * X / Lx)
    errs["divergence"] = np.sqrt(g.cell_volume * float(np.sum((div - div_exact) ** 2)))

    def fx(x, y):
        return -(pi / Lx) * np.sin(pi * x / Lx) * np.cos(2.0 * pi * y / Ly)

    def fy(x, y):
        return -(2.0 * pi / Ly) * np.cos(pi * x / Lx) * np.sin(2.0 * pi * y / Ly)

    adv = ops.advect_scalar(g, u, f)
    adv_exact = u0(X, Y) * fx(X, Y) + u1(X, Y) * fy(X, Y)
    errs["advection"] = np.sqrt(g.cell_volume * float(np.sum((adv - adv_exact) ** 2)))

    gr = ops.gradient(g, f, mode="onesided")
    interior = (slice(1, -1), slice(None))
    gx_pts = g.face_mesh(0)
    err_sq = float(np.sum((gr[0][interior] - fx(gx_pts[0][interior], gx_pts[1][interior])) ** 2))
    errs["gradient"] = np.sqrt(g.cell_volume * err_sq)

    e01 = ops.strain_offdiag(g, u, 0, 1, "noslip")
    pts = g.mesh((True, True))

    def e01_exact(x, y):
        du0_dy = np.sin(pi * x / Lx) ** 2 * (2.0 * pi / Ly) * np.cos(2.0 * pi * y / Ly)
        du1_dx = -(2.0 * pi / Lx) * np.cos(2.0 * pi * x / Lx) * np.sin(pi * y / Ly) ** 2
        return 0.5 * (du0_dy + du1_dx)

    w = ops.stag_weights(g, (0, 1))
    inner = (slice(2, -2), slice(2, -2))
    err_sq = float(np.sum(w[inner] * (e01 - e01_exact(pts[0], pts[1]))[inner] ** 2))
    errs["strain-offdiag"] = np.sqrt(err_sq)
    return errs


def richardson_checks(n_coarse: int = 32, lo: float = 3.2, hi: float = 4.8) -> list:
    """Error ratios between n and 2n grids; second order gives ratio 4."""
    e1 = _convergence_errors(n_coarse)
    e2 = _convergence_errors(2 * n_coarse)
    out = []
    for name in e1:
        ratio = e1[name] / max(e2[name], 1e-300)
        ok = lo <= ratio <= hi
        out.append(CheckResult(name=f"richardson-{name}", value=float(ratio),
                               threshold=4.0, passed=bool(ok),
                               detail=f"errors {e1[name]:.3e} -> {e2[name]:.3e}, want ratio in [{lo}, {hi}]"))
    return out


def run_all_checks(fast: bool = False) -> list:
    """The full battery; ``fast`` trims sample counts for interactive use."""
    results = []
    for dim in (2, 3):
        results.extend(identity_checks(dim=dim))
        results.append(strain_identity_check(dim=dim, samples=10 if fast else 50))
    results.append(korn_check(dim=2, samples=100 if fast else 1000))
    results.append(korn_check(dim=3, samples=50 if fast else 200))
    results.append(prox_oracle_check(samples=500 if fast else 10000))
    results.append(prox_variational_check(batches=5 if fast else 50,
                                          directions=200 if fast else 1000))
    results.extend(richardson_checks(n_coarse=16 if fast else 32))
    return results
