"""HTTP service exposing runs, sweeps, trajectory verification, and the
operator check battery.

The CLI talks to this app in-process by default (no socket), and the same app
can be served over the network with ``vepflow serve``.  Requests carry the
config as text in the run-file grammar; paths in responses are server-side
paths, which coincide with local paths in the in-process case.

Domain errors (bad config, non-convergence) map to HTTP 400 with the error
code in the body; everything else is a plain 500.
"""

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .checks import run_all_checks
from .config import config_from_canonical, parse_config
from .errors import ConfigError, VepflowError
from .initial_data import make_forcing, triple_from_config
from .relative_energy import dissipative_inequality_check
from .runner import load_trajectory, run_gamma_sweep, run_simulation

app = FastAPI(title="vepflow", version=__version__)


@app.exception_handler(VepflowError)
def _domain_error(request: Request, exc: VepflowError):
    code = getattr(exc, "code", "error")
    message = getattr(exc, "message", str(exc))
    return JSONResponse(status_code=400, content={"code": code, "message": message})


class RunRequest(BaseModel):
    config_text: str
    out_dir: Optional[str] = None


class RunSummary(BaseModel):
    passed: bool
    directory: str
    config_hash: str
    completed_steps: int
    requested_steps: int
    all_certified: bool
    max_defect: float
    energy_monotone: bool
    mass_drift_rel: float
    verifier_passed: Optional[bool] = None
    sup_e_tot: float
    e_tot_initial: float
    wall_time: float
    csv_path: str
    verify_report_path: str = ""
    failure: Optional[dict] = None


class SweepRequest(BaseModel):
    config_text: str
    out_dir: Optional[str] = None


class SweepEntryModel(BaseModel):
    gamma: float
    directory: str
    passed: bool
    sup_e_tot: float
    e_tot_initial: float
    force_work_total: float
    max_defect: float
    r_distance_final: Optional[float] = None
    r_distance_max: Optional[float] = None


class SweepSummary(BaseModel):
    passed: bool
    directory: str
    uniform_bound: float
    uniform_bound_holds: bool
    entries: list[SweepEntryModel]


class VerifyRequest(BaseModel):
    run_dir: str
    config_text: Optional[str] = None
    gamma: Optional[float] = None
    tol_factor: Optional[float] = None


class VerifyResponse(BaseModel):
    passed: bool
    max_defect: float
    tol: float
    worst_time: float
    n_times: int
    report_path: str
    report_csv: str


class CheckOpsRequest(BaseModel):
    fast: bool = False


class CheckLine(BaseModel):
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


class CheckOpsResponse(BaseModel):
    passed: bool
    checks: list[CheckLine]


class Health(BaseModel):
    status: str = Field(default="ok")
    version: str = Field(default=__version__)


def _run_summary(result) -> RunSummary:
    m = result.manifest
    return RunSummary(
        passed=m.passed,
        directory=str(result.directory),
        config_hash=m.config_hash,
        completed_steps=m.completed_steps,
        requested_steps=m.requested_steps,
        all_certified=m.all_certified,
        max_defect=m.max_defect,
        energy_monotone=m.energy_monotone,
        mass_drift_rel=m.mass_drift_rel,
        verifier_passed=m.verifier_passed,
        sup_e_tot=m.sup_e_tot,
        e_tot_initial=m.e_tot_initial,
        wall_time=m.wall_time,
        csv_path=m.csv_path,
        verify_report_path=m.verify_report_path,
        failure=m.failure,
    )


@app.get("/health", response_model=Health)
def health() -> Health:
    return Health()


@app.post("/run", response_model=RunSummary)
def run(req: RunRequest) -> RunSummary:
    cfg = parse_config(req.config_text)
    result = run_simulation(cfg, out_dir=req.out_dir)
    return _run_summary(result)


@app.post("/sweep", response_model=SweepSummary)
def sweep(req: SweepRequest) -> SweepSummary:
    cfg = parse_config(req.config_text)
    report = run_gamma_sweep(cfg, out_dir=req.out_dir)
    return SweepSummary(
        passed=report.passed,
        directory=report.directory,
        uniform_bound=report.uniform_bound,
        uniform_bound_holds=report.uniform_bound_holds,
        entries=[SweepEntryModel(**e.__dict__) for e in report.entries],
    )


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    """Check the trajectory inequality on a stored run directory.

    The directory's own config.json supplies the material, test triple, and
    gamma; config_text or the gamma/tol_factor fields override it.
    """
    run_dir = Path(req.run_dir)
    if req.config_text is not None:
        cfg = parse_config(req.config_text)
    else:
        cfg_path = run_dir / "config.json"
        if not cfg_path.is_file():
            raise ConfigError("config-not-found",
                              f"no config.json under {run_dir}; pass config_text")
        cfg = config_from_canonical(json.loads(cfg_path.read_text()))
    gamma = req.gamma if req.gamma is not None else cfg.gamma
    tol_factor = req.tol_factor if req.tol_factor is not None else cfg.verify.tol_factor

    states = load_trajectory(run_dir)
    triple = triple_from_config(cfg, plastic=cfg.plastic)
    grid = states[0].grid
    force_fn = make_forcing(cfg, grid)
    report = dissipative_inequality_check(
        cfg.material, states, triple, gamma,
        plastic=cfg.plastic,
        forcing=(lambda t: force_fn(grid, t)) if force_fn is not None else None,
        tol_factor=tol_factor,
    )
    csv_text = "\n".join(report.csv_lines()) + "\n"
    report_path = run_dir / "verify_report.csv"
    report_path.write_text(csv_text)
    return VerifyResponse(
        passed=report.passed,
        max_defect=report.max_defect,
        tol=report.tol,
        worst_time=report.worst_time,
        n_times=len(report.times),
        report_path=str(report_path),
        report_csv=csv_text,
    )


@app.post("/check-ops", response_model=CheckOpsResponse)
def check_ops(req: CheckOpsRequest) -> CheckOpsResponse:
    results = run_all_checks(fast=req.fast)
    return CheckOpsResponse(
        passed=all(r.passed for r in results),
        checks=[CheckLine(name=r.name, value=r.value, threshold=r.threshold,
                          passed=r.passed, detail=r.detail) for r in results],
    )


__all__ = ["app"]
