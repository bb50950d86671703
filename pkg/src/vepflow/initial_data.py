"""Deterministic initial states and external forcing presets.

Velocity initial data is built from a streamfunction sampled at grid nodes and
differenced, so the discrete divergence vanishes exactly on every face cell --
the momentum solver then starts from a point that already satisfies its
constraint.  All randomness flows through one seeded Generator, so a given
(config, seed) pair reproduces the same state bit for bit.
"""

from __future__ import annotations

import numpy as np

from .cahn_hilliard import equilibrium_mu
from .errors import ConfigError
from .grid import Grid
from .materials import MaterialParams, PlasticParams
from .operators import stream_velocity
from .state import State
from .testtriple import make_test_triple


def _cosine_noise(grid: Grid, rng: np.random.Generator, modes: int) -> np.ndarray:
    """Band-limited noise: seeded combination of low cosine modes at cells."""
    mesh = grid.cell_mesh()
    out = np.zeros(grid.n)
    ks = range(1, modes + 1)
    if grid.dim == 2:
        X, Y = mesh
        for kx in ks:
            for ky in ks:
                c = rng.normal()
                out += c * np.cos(np.pi * kx * X / grid.length[0]) * np.cos(np.pi * ky * Y / grid.length[1])
    else:
        X, Y, Z = mesh
        for kx in ks:
            for ky in ks:
                for kz in ks:
                    c = rng.normal()
                    out += (
                        c
                        * np.cos(np.pi * kx * X / grid.length[0])
                        * np.cos(np.pi * ky * Y / grid.length[1])
                        * np.cos(np.pi * kz * Z / grid.length[2])
                    )
    peak = np.abs(out).max()
    if peak > 0:
        out /= peak
    return out


def _project_mean_and_bounds(phi: np.ndarray, mean: float, margin: float) -> np.ndarray:
    """Clamp to |phi| <= 1 - margin while restoring the requested mean.

    Alternates a mean shift with clipping; the loop is a no-op whenever the
    noise already fits inside the bounds, which is the usual case.  The final
    operation is the mean shift, so the mean is exact to round-off.
    """
    cap = (1.0 - margin) * (1.0 - 1e-12)
    out = phi.copy()
    for _ in range(64):
        out += mean - out.mean()
        clipped = np.clip(out, -cap, cap)
        if np.array_equal(clipped, out):
            break
        out = clipped
    out += mean - out.mean()
    if np.abs(out).max() > 1.0 - margin:
        raise ConfigError(
            "spinodal-projection",
            "could not fit phi0 inside |phi| <= 1 - margin at the requested mean; "
            "reduce spinodal.amplitude or the margin",
        )
    return out


def spinodal_state(grid: Grid, params: MaterialParams, seed: int, mean: float = 0.0,
                   amplitude: float = 0.1, modes: int = 3, margin: float = 1e-6) -> State:
    """Quiescent mixture: phi0 = mean + seeded low-mode noise, v0 = 0, S0 = 0."""
    if not -1.0 < mean < 1.0:
        raise ConfigError("mean-phase-range", "mean phase must lie strictly inside (-1, 1)")
    rng = np.random.default_rng(seed)
    st = State.zeros(grid)
    noise = amplitude * _cosine_noise(grid, rng, modes)
    st.phi.data[...] = _project_mean_and_bounds(mean + noise, mean, margin)
    st.mu.data[...] = equilibrium_mu(params, grid, st.phi.data)
    return st


def shear_band_state(grid: Grid, params: MaterialParams, plastic: PlasticParams,
                     mean: float = 0.0, center: float = 0.5, width: float = 0.25,
                     inside: float = 1.2, outside: float = 0.5) -> State:
    """Uniform mixture carrying a horizontal stress band.

    |S0| is ``inside`` times the smaller yield radius within the band and
    ``outside`` times it elsewhere, capped at the larger radius so the initial
    plastic energy stays finite everywhere.  The band profile is a smooth bump
    so the edges carry no jump.
    """
    st = State.zeros(grid)
    st.phi.data[...] = mean
    st.mu.data[...] = equilibrium_mu(params, grid, st.phi.data)

    sig_lo = min(plastic.sigma1, plastic.sigma2)
    sig_hi = max(plastic.sigma1, plastic.sigma2)
    if np.isinf(sig_lo):
        base = max(plastic.b1, plastic.b2, 1.0)
        sig_lo = sig_hi = base
    mesh = grid.cell_mesh()
    y = mesh[1] / grid.length[1]
    a, b = center - width / 2, center + width / 2
    bump = np.clip((y - a) * (b - y), 0.0, None) / ((width / 2) ** 2)
    bump = bump**2
    norm = np.minimum((outside + (inside - outside) * bump) * sig_lo, sig_hi)
    # trace-free shear: only the (0,1) entry, so |S| = sqrt(2) |s12|
    st.S.comps[1][...] = norm / np.sqrt(2.0)
    return st


def manufactured_state(grid: Grid, params: MaterialParams, triple, t: float = 0.0) -> State:
    """Sample a test triple at one time; velocity comes from its streamfunction
    at nodes so the discrete divergence is exactly zero."""
    st = State.zeros(grid)
    st.t = t
    if not triple.is_zero():
        nodes = grid.mesh((True,) * grid.dim)
        psi = triple.psi.val(t, nodes[0], nodes[1])
        for a, comp in enumerate(stream_velocity(grid, psi)):
            st.v.comps[a][...] = comp
        cells = tuple(grid.cell_mesh())
        for c, val in enumerate(triple.stress(t, cells)):
            st.S.comps[c][...] = val
        st.phi.data[...] = triple.phase(t, cells)
    st.mu.data[...] = equilibrium_mu(params, grid, st.phi.data)
    return st


def make_initial_data(cfg) -> State:
    """Build the preset named by ``cfg.scenario``; deterministic under seed."""
    grid = cfg.make_grid()
    if cfg.scenario == "spinodal":
        sp = cfg.spinodal
        return spinodal_state(grid, cfg.material, cfg.seed, mean=sp.mean,
                              amplitude=sp.amplitude, modes=sp.modes, margin=sp.margin)
    if cfg.scenario == "shear-yield":
        sh = cfg.shear
        return shear_band_state(grid, cfg.material, cfg.plastic, mean=cfg.spinodal.mean,
                                center=sh.center, width=sh.width,
                                inside=sh.inside, outside=sh.outside)
    if cfg.scenario == "manufactured":
        triple = triple_from_config(cfg)
        return manufactured_state(grid, cfg.material, triple)
    raise ConfigError("config-scenario-unknown", f"no preset named {cfg.scenario!r}")


def triple_from_config(cfg, plastic: PlasticParams = None):
    """Test triple for the verifier / manufactured preset, from cfg.verify."""
    v = cfg.verify
    if v.family == "zero":
        return make_test_triple("zero", params=cfg.material, dim=len(cfg.grid_n))
    support = tuple(tuple(pair) for pair in v.support)
    if len(support) != len(cfg.grid_n):
        raise ConfigError("config-value", "verify.support must give one interval per axis")
    return make_test_triple(
        v.family,
        amplitude={"v": v.amplitude_v, "S": v.amplitude_s, "phi": v.amplitude_phi},
        support_box=support,
        frequency=v.frequency,
        params=cfg.material,
        t_final=max(cfg.h * cfg.n_steps, 1e-12),
        plastic=plastic,
    )


def make_forcing(cfg, grid: Grid):
    """Face-sampled external force, or None when cfg.forcing is "zero".

    The swirl preset is a steady divergence-free rotor from a node
    streamfunction; being time-constant, its per-step time average is itself,
    which is exactly what the implicit step consumes.
    """
    if cfg.forcing == "zero":
        return None
    if grid.dim != 2:
        raise ConfigError("forcing-2d", "the swirl forcing preset is 2D only")
    nodes = grid.mesh((True, True))
    X, Y = nodes
    sx = X / grid.length[0]
    sy = Y / grid.length[1]
    bump = (np.clip(sx * (1.0 - sx), 0.0, None) * np.clip(sy * (1.0 - sy), 0.0, None)) ** 2
    psi = cfg.forcing_amplitude * bump * 16.0**2
    comps = stream_velocity(grid, psi)

    def force(grid_, t_new):
        return [c.copy() for c in comps]

    return force
