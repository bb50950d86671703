"""Run orchestration: the time loop with per-step certificates, run
directories with manifests, restart, and the stress-diffusion sweep driver.

A run directory is self-describing: it holds a canonical copy of the
configuration, the per-step CSV, checkpoints and (optionally) every state of
the trajectory in the field container format, the verifier report, and a
manifest tying them together with the config hash and certificate summary.
Identical (config, seed) pairs produce byte-identical CSV files; wall-clock
timing lives only in the manifest.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import RunConfig
from .energetics import CSV_HEADER, certify_step, energy, report_step
from .errors import OuterNonConvergence, VepflowError
from .initial_data import make_forcing, make_initial_data, triple_from_config
from .matrices import OperatorMatrices
from .relative_energy import dissipative_inequality_check, relative_energy_states
from .state import State
from .timestepper import advance


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    wall_time: float
    csv_path: str
    checkpoint_paths: list
    state_paths: list
    verify_report_path: str = ""
    completed_steps: int = 0
    requested_steps: int = 0
    all_certified: bool = False
    max_defect: float = 0.0
    energy_monotone: bool = False
    mass_drift_rel: float = 0.0
    failure: dict = None
    verifier_passed: bool = None
    sup_e_tot: float = 0.0
    e_tot_initial: float = 0.0
    force_work_total: float = 0.0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @property
    def passed(self) -> bool:
        """All requested certificates hold: every step accepted and certified,
        and the trajectory check (when run) passed."""
        ok = (
            self.failure is None
            and self.completed_steps == self.requested_steps
            and self.all_certified
        )
        if self.verifier_passed is not None:
            ok = ok and self.verifier_passed
        return ok


@dataclass
class RunResult:
    """In-memory view of a finished run: manifest plus the stored states."""

    manifest: RunManifest
    states: list
    reports: list
    directory: Path


def _state_filename(step: int) -> str:
    return f"state_{step:06d}.vepf"


def run_simulation(cfg: RunConfig, out_dir=None, start_state: State = None,
                   keep_states: bool = True) -> RunResult:
    """Execute the configured run and write the run directory.

    ``start_state`` restarts the loop from a checkpoint (its ``step`` counts
    toward ``cfg.n_steps``); the CSV then holds only the continuation rows.
    """
    t0 = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfg.canonical(), indent=2, sort_keys=True) + "\n"
    )

    grid = cfg.make_grid()
    mats = OperatorMatrices(grid)
    opts = cfg.stepper_options()
    force_fn = make_forcing(cfg, grid)
    state = start_state.copy() if start_state is not None else make_initial_data(cfg)

    tol_factor = 10.0 * max(opts.tol_outer, opts.tol_ch, opts.tol_stress)

    states = [state.copy()] if keep_states else []
    reports = []
    rows = []
    checkpoints = []
    state_paths = []
    failure = None
    mass0 = state.phi.data.mean() * grid.volume
    e0 = energy(grid, params=cfg.material, state=state).total
    work_total = 0.0

    fields_dir = out / "fields"
    if cfg.save_fields:
        fields_dir.mkdir(exist_ok=True)
        p = fields_dir / _state_filename(state.step)
        state.save(p)
        state_paths.append(str(p))

    k = state.step
    while k < cfg.n_steps:
        old = state
        force_faces = None
        try:
            state, info = advance(mats, cfg.material, cfg.plastic, old, cfg.h,
                                  gamma=cfg.gamma, force_fn=force_fn, opts=opts)
        except (OuterNonConvergence, VepflowError) as exc:
            failure = {"step": k + 1, "error": type(exc).__name__, "message": str(exc)}
            state = old
            break
        if force_fn is not None:
            force_faces = force_fn(grid, state.t)
        cert = certify_step(mats, cfg.material, cfg.plastic, old, state, info.h,
                            gamma=cfg.gamma, force_faces=force_faces)
        scale = max(1.0, cert.energy_old.total, cert.energy_new.total)
        cert = dataclasses.replace(cert, tol=tol_factor * scale)
        rep = report_step(mats, cfg.material, state, cert, info.outer_iterations)
        reports.append((rep, cert))
        rows.append(rep.csv_row())
        work_total += info.h * cert.work_force
        if keep_states:
            states.append(state.copy())
        if cfg.save_fields:
            p = fields_dir / _state_filename(state.step)
            state.save(p)
            state_paths.append(str(p))
        if cfg.checkpoint_every and state.step % cfg.checkpoint_every == 0:
            p = out / f"checkpoint_{state.step:06d}.vepf"
            state.save(p)
            checkpoints.append(str(p))
        k = state.step

    final_ck = out / f"checkpoint_{state.step:06d}.vepf"
    if str(final_ck) not in checkpoints:
        state.save(final_ck)
        checkpoints.append(str(final_ck))

    csv_path = out / "steps.csv"
    csv_path.write_text("\n".join([CSV_HEADER] + rows) + "\n")

    e_tots = [e0] + [rep.energy.total for rep, _ in reports]
    masses = [mass0] + [rep.mass for rep, _ in reports]
    mass_scale = max(abs(mass0), grid.volume)
    manifest = RunManifest(
        config_hash=cfg.config_hash(),
        code_version=__version__,
        wall_time=0.0,
        csv_path=str(csv_path),
        checkpoint_paths=checkpoints,
        state_paths=state_paths,
        completed_steps=state.step,
        requested_steps=cfg.n_steps,
        all_certified=bool(reports) and all(c.passed for _, c in reports),
        max_defect=max((c.defect for _, c in reports), default=0.0),
        energy_monotone=all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(e_tots, e_tots[1:])),
        mass_drift_rel=max(abs(m - mass0) for m in masses) / mass_scale,
        failure=failure,
        sup_e_tot=max(e_tots),
        e_tot_initial=e0,
        force_work_total=work_total,
    )

    if cfg.verify.enabled and keep_states and len(states) >= 2 and failure is None:
        triple = triple_from_config(cfg, plastic=cfg.plastic)
        report = dissipative_inequality_check(
            cfg.material, states, triple, cfg.gamma,
            plastic=cfg.plastic,
            forcing=(lambda t: force_fn(grid, t)) if force_fn is not None else None,
            tol_factor=cfg.verify.tol_factor,
        )
        vr = out / "verify_report.csv"
        vr.write_text("\n".join(report.csv_lines()) + "\n")
        manifest.verify_report_path = str(vr)
        manifest.verifier_passed = report.passed

    manifest.wall_time = time.perf_counter() - t0
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return RunResult(manifest=manifest, states=states, reports=reports, directory=out)


def load_trajectory(directory) -> list:
    """Read back the stored per-step states of a run directory, in step order."""
    fields_dir = Path(directory) / "fields"
    paths = sorted(fields_dir.glob("state_*.vepf"))
    if not paths:
        raise VepflowError(f"no stored states under {fields_dir}")
    return [State.load(p) for p in paths]


@dataclass
class SweepEntry:
    gamma: float
    directory: str
    passed: bool
    sup_e_tot: float
    e_tot_initial: float
    force_work_total: float
    max_defect: float
    r_distance_final: float = None
    r_distance_max: float = None


@dataclass
class SweepReport:
    entries: list
    uniform_bound: float
    uniform_bound_holds: bool
    directory: str

    @property
    def passed(self) -> bool:
        return self.uniform_bound_holds and all(e.passed for e in self.entries)

    def to_json(self) -> str:
        return json.dumps(
            {
                "uniform_bound": self.uniform_bound,
                "uniform_bound_holds": self.uniform_bound_holds,
                "entries": [dataclasses.asdict(e) for e in self.entries],
            },
            indent=2,
            sort_keys=True,
        )


def _gamma_tag(g: float) -> str:
    return "0" if g == 0.0 else f"{g:g}".replace("-", "m").replace("+", "")


def run_gamma_sweep(cfg: RunConfig, out_dir=None) -> SweepReport:
    """Run the configured scenario once per sweep gamma with shared initial
    data, then compare each trajectory to the gamma = 0 member.

    Reports sup-in-time total energy per gamma (checked against the shared
    initial energy plus forcing work) and the relative-energy distance to the
    gamma = 0 trajectory (reported, not asserted).
    """
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    gammas = list(cfg.sweep_gammas)
    if 0.0 not in gammas:
        gammas.append(0.0)

    start = make_initial_data(cfg)

    def member(g: float) -> RunResult:
        mcfg = dataclasses.replace(cfg, gamma=g, output=str(out / f"gamma_{_gamma_tag(g)}"))
        return run_simulation(mcfg, start_state=start, keep_states=True)

    if cfg.sweep_parallel and len(gammas) > 1:
        with ThreadPoolExecutor(max_workers=len(gammas)) as pool:
            results = list(pool.map(member, gammas))
    else:
        results = [member(g) for g in gammas]

    by_gamma = dict(zip(gammas, results))
    base = by_gamma[0.0]

    entries = []
    tol_slack = 1e-8
    bound = 0.0
    for g, res in by_gamma.items():
        m = res.manifest
        ent = SweepEntry(
            gamma=g,
            directory=str(res.directory),
            passed=m.passed,
            sup_e_tot=m.sup_e_tot,
            e_tot_initial=m.e_tot_initial,
            force_work_total=m.force_work_total,
            max_defect=m.max_defect,
        )
        bound = max(bound, m.e_tot_initial + max(m.force_work_total, 0.0))
        if g != 0.0 and len(res.states) == len(base.states):
            dists = [
                relative_energy_states(cfg.material, sg, s0).total
                for sg, s0 in zip(res.states, base.states)
            ]
            ent.r_distance_final = dists[-1]
            ent.r_distance_max = max(dists)
        entries.append(ent)

    entries.sort(key=lambda e: -e.gamma)
    slackful = bound * (1.0 + tol_slack) + tol_slack
    report = SweepReport(
        entries=entries,
        uniform_bound=bound,
        uniform_bound_holds=all(e.sup_e_tot <= slackful for e in entries),
        directory=str(out),
    )
    (out / "sweep_report.json").write_text(report.to_json() + "\n")
    return report
