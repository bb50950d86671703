"""Run configuration: a small key=value file format and its validation.

Grammar (one assignment per line):

    # comment lines and blank lines are ignored
    key = value            # inline comments allowed after the value
    grid.n = 64,64         # lists are comma separated
    plastic.sigma1 = inf   # inf is a legal float

Dotted keys group related settings; the full key set is below.  Unknown keys
are rejected so that typos fail loudly instead of silently running with a
default.  Values keep their textual order-independence: the same assignments
in any order give the same RunConfig and the same config hash.

    grid.n               cells per axis, 2 or 3 ints          (required)
    grid.length          domain edge lengths                  (default 1 each)
    material.rho1 ...    densities, viscosities (nu), moduli (eta), well
                         parameter lam, interface width eps, convex shift
                         kappa -- see MaterialParams defaults
    plastic.a1 ...       hardening a, yield offset b, cap sigma per phase
    run.h                time step                            (required)
    run.steps            number of steps                      (required)
    run.gamma            stress diffusion coefficient         (default 0)
    run.seed             RNG seed for initial data            (default 0)
    run.output           output directory                     (default "out")
    run.checkpoint_every checkpoint cadence in steps, 0 = final only
    run.save_fields      store the full trajectory for offline verification
    scenario             spinodal | shear-yield | manufactured
    spinodal.mean        target mean of phi0
    spinodal.amplitude   noise amplitude before projection
    spinodal.modes       number of cosine modes per axis
    spinodal.margin      enforced distance of |phi0| from 1
    shear.center         band center along y (fraction of the edge)
    shear.width          band width (fraction of the edge)
    shear.inside         |S0| inside the band, as a fraction of yield
    shear.outside        |S0| outside the band, as a fraction of yield
    forcing              zero | swirl
    forcing.amplitude    swirl strength
    solver.tol_outer     coupled-sweep convergence tolerance
    solver.max_outer     coupled-sweep iteration cap
    solver.tol_ch        phase-field Newton tolerance
    solver.tol_stress    stress fixed-point tolerance
    solver.max_halvings  step-halving attempts before giving up
    sweep.gamma          gamma list for the sweep driver (may include 0)
    sweep.parallel       run sweep members concurrently
    verify.family        zero | bump | bump-cos
    verify.amplitude     scalar amplitude, or verify.amplitude.v/.S/.phi
    verify.support       support box, 2 floats per axis
    verify.frequency     oscillation frequency of the test fields
    verify.tol_factor    C in the verifier tolerance C*(h_t + h_x^2)*scale
    verify.enabled       run the trajectory check after the time loop
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import Grid
from .materials import MaterialParams, PlasticParams
from .timestepper import StepperOptions

SCENARIOS = ("spinodal", "shear-yield", "manufactured")
FORCINGS = ("zero", "swirl")
TRIPLE_FAMILIES = ("zero", "bump", "bump-cos")


@dataclass(frozen=True)
class SpinodalSettings:
    mean: float = 0.0
    amplitude: float = 0.1
    modes: int = 3
    margin: float = 1e-6


@dataclass(frozen=True)
class ShearSettings:
    center: float = 0.5
    width: float = 0.25
    inside: float = 1.2
    outside: float = 0.5


@dataclass(frozen=True)
class VerifySettings:
    enabled: bool = True
    family: str = "zero"
    amplitude_v: float = 0.3
    amplitude_s: float = 0.2
    amplitude_phi: float = 0.3
    support: tuple = ((0.15, 0.85), (0.15, 0.85))
    frequency: float = 1.0
    tol_factor: float = 5.0


@dataclass(frozen=True)
class RunConfig:
    grid_n: tuple
    grid_length: tuple
    material: MaterialParams
    plastic: PlasticParams
    h: float
    n_steps: int
    gamma: float = 0.0
    seed: int = 0
    output: str = "out"
    checkpoint_every: int = 0
    save_fields: bool = True
    scenario: str = "spinodal"
    spinodal: SpinodalSettings = SpinodalSettings()
    shear: ShearSettings = ShearSettings()
    forcing: str = "zero"
    forcing_amplitude: float = 1.0
    solver: StepperOptions = StepperOptions()
    sweep_gammas: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 0.0)
    sweep_parallel: bool = True
    verify: VerifySettings = VerifySettings()

    def __post_init__(self):
        _check(self.h > 0, "config-step-positive", "run.h must be positive")
        _check(self.n_steps >= 1, "config-steps-minimum", "run.steps must be at least 1")
        _check(self.gamma >= 0, "config-gamma-nonneg", "run.gamma must be nonnegative")
        _check(all(g >= 0 for g in self.sweep_gammas), "config-gamma-nonneg",
               "sweep.gamma entries must be nonnegative")
        _check(self.scenario in SCENARIOS, "config-scenario-unknown",
               f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        _check(self.forcing in FORCINGS, "config-forcing-unknown",
               f"forcing must be one of {FORCINGS}, got {self.forcing!r}")
        _check(self.verify.family in TRIPLE_FAMILIES, "config-triple-unknown",
               f"verify.family must be one of {TRIPLE_FAMILIES}, got {self.verify.family!r}")
        _check(-1.0 < self.spinodal.mean < 1.0, "mean-phase-range",
               "spinodal mean phase must lie strictly inside (-1, 1)")
        _check(0 < self.spinodal.margin < 1, "config-margin-range",
               "spinodal.margin must lie in (0, 1)")
        _check(self.spinodal.amplitude >= 0, "config-value",
               "spinodal.amplitude must be nonnegative")
        _check(self.checkpoint_every >= 0, "config-value",
               "run.checkpoint_every must be nonnegative")
        # build the grid once to surface shape errors at load time
        self.make_grid()

    def make_grid(self) -> Grid:
        return Grid(tuple(self.grid_n), tuple(self.grid_length))

    def stepper_options(self) -> StepperOptions:
        return self.solver

    def canonical(self) -> dict:
        """Stable plain-dict form used for hashing and the manifest copy."""

        def plain(obj):
            if isinstance(obj, (MaterialParams, PlasticParams, SpinodalSettings,
                                ShearSettings, VerifySettings, StepperOptions)):
                return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, tuple):
                return [plain(x) for x in obj]
            if isinstance(obj, float) and np.isinf(obj):
                return "inf"
            return obj

        return {f.name: plain(getattr(self, f.name)) for f in fields(self)}

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _check(cond, code, message):
    if not cond:
        raise ConfigError(code, message)


def parse_kv_text(text: str) -> dict:
    """Parse the key=value grammar into a flat {dotted key: string} dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config-syntax", f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, val = line.split("=", 1)
        key, val = key.strip(), val.strip()
        if not key or not val:
            raise ConfigError("config-syntax", f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError("config-duplicate-key", f"line {lineno}: {key} assigned twice")
        out[key] = val
    return out


def _as_float(key, val):
    try:
        return float(val)
    except ValueError:
        raise ConfigError("config-value", f"{key}: expected a number, got {val!r}") from None


def _as_int(key, val):
    try:
        return int(val)
    except ValueError:
        raise ConfigError("config-value", f"{key}: expected an integer, got {val!r}") from None


def _as_bool(key, val):
    low = val.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError("config-value", f"{key}: expected true/false, got {val!r}")


def _as_list(key, val, conv):
    return tuple(conv(key, part.strip()) for part in val.split(","))


def _pop_section(kv: dict, prefix: str) -> dict:
    sect = {}
    for key in list(kv):
        if key.startswith(prefix + "."):
            sect[key[len(prefix) + 1:]] = kv.pop(key)
    return sect


def _dataclass_from(kv_section: dict, cls, prefix: str, converters: dict):
    kwargs = {}
    for name, val in kv_section.items():
        if name not in converters:
            raise ConfigError("config-unknown-key", f"unknown key {prefix}.{name}")
        kwargs[name] = converters[name](f"{prefix}.{name}", val)
    return cls(**kwargs)


_NUM = _as_float
_MATERIAL_KEYS = {k: _NUM for k in ("rho1", "rho2", "nu1", "nu2", "eta1", "eta2", "lam", "eps", "kappa")}
_PLASTIC_KEYS = {k: _NUM for k in ("a1", "a2", "b1", "b2", "sigma1", "sigma2")}
_SPINODAL_KEYS = {"mean": _NUM, "amplitude": _NUM, "modes": _as_int, "margin": _NUM}
_SHEAR_KEYS = {"center": _NUM, "width": _NUM, "inside": _NUM, "outside": _NUM}
_SOLVER_KEYS = {"tol_outer": _NUM, "max_outer": _as_int, "tol_ch": _NUM,
                "tol_stress": _NUM, "max_halvings": _as_int}


def parse_config(text: str) -> RunConfig:
    kv = parse_kv_text(text)

    grid_sect = _pop_section(kv, "grid")
    if "n" not in grid_sect:
        raise ConfigError("config-missing-key", "grid.n is required")
    grid_n = _as_list("grid.n", grid_sect.pop("n"), _as_int)
    grid_length = (
        _as_list("grid.length", grid_sect.pop("length"), _as_float)
        if "length" in grid_sect
        else tuple(1.0 for _ in grid_n)
    )
    for stray in grid_sect:
        raise ConfigError("config-unknown-key", f"unknown key grid.{stray}")

    material = _dataclass_from(_pop_section(kv, "material"), MaterialParams, "material", _MATERIAL_KEYS)
    plastic = _dataclass_from(_pop_section(kv, "plastic"), PlasticParams, "plastic", _PLASTIC_KEYS)
    spinodal = _dataclass_from(_pop_section(kv, "spinodal"), SpinodalSettings, "spinodal", _SPINODAL_KEYS)
    shear = _dataclass_from(_pop_section(kv, "shear"), ShearSettings, "shear", _SHEAR_KEYS)
    solver = _dataclass_from(_pop_section(kv, "solver"), StepperOptions, "solver", _SOLVER_KEYS)

    run_sect = _pop_section(kv, "run")
    for req in ("h", "steps"):
        if req not in run_sect:
            raise ConfigError("config-missing-key", f"run.{req} is required")
    run_kwargs = {
        "h": _as_float("run.h", run_sect.pop("h")),
        "n_steps": _as_int("run.steps", run_sect.pop("steps")),
    }
    simple_run = {"gamma": _as_float, "seed": _as_int, "output": lambda k, v: v,
                  "checkpoint_every": _as_int, "save_fields": _as_bool}
    for name, val in run_sect.items():
        if name not in simple_run:
            raise ConfigError("config-unknown-key", f"unknown key run.{name}")
        run_kwargs[name] = simple_run[name](f"run.{name}", val)

    sweep_sect = _pop_section(kv, "sweep")
    sweep_kwargs = {}
    if "gamma" in sweep_sect:
        sweep_kwargs["sweep_gammas"] = _as_list("sweep.gamma", sweep_sect.pop("gamma"), _as_float)
    if "parallel" in sweep_sect:
        sweep_kwargs["sweep_parallel"] = _as_bool("sweep.parallel", sweep_sect.pop("parallel"))
    for stray in sweep_sect:
        raise ConfigError("config-unknown-key", f"unknown key sweep.{stray}")

    verify_sect = _pop_section(kv, "verify")
    verify_kwargs = {}
    amp_keys = {"amplitude": None, "amplitude.v": "amplitude_v",
                "amplitude.S": "amplitude_s", "amplitude.phi": "amplitude_phi"}
    for name, val in list(verify_sect.items()):
        if name == "amplitude":
            a = _as_float("verify.amplitude", val)
            verify_kwargs.update(amplitude_v=a, amplitude_s=a, amplitude_phi=a)
        elif name in amp_keys:
            verify_kwargs[amp_keys[name]] = _as_float(f"verify.{name}", val)
        elif name == "support":
            flat = _as_list("verify.support", val, _as_float)
            if len(flat) % 2 != 0:
                raise ConfigError("config-value", "verify.support needs 2 floats per axis")
            verify_kwargs["support"] = tuple(
                (flat[2 * i], flat[2 * i + 1]) for i in range(len(flat) // 2)
            )
        elif name == "family":
            verify_kwargs["family"] = val
        elif name == "frequency":
            verify_kwargs["frequency"] = _as_float("verify.frequency", val)
        elif name == "tol_factor":
            verify_kwargs["tol_factor"] = _as_float("verify.tol_factor", val)
        elif name == "enabled":
            verify_kwargs["enabled"] = _as_bool("verify.enabled", val)
        else:
            raise ConfigError("config-unknown-key", f"unknown key verify.{name}")

    top = {}
    simple_top = {"scenario": lambda k, v: v, "forcing": lambda k, v: v}
    for name, val in list(kv.items()):
        if name == "forcing.amplitude":
            top["forcing_amplitude"] = _as_float(name, val)
        elif name in simple_top:
            top[name] = simple_top[name](name, val)
        else:
            raise ConfigError("config-unknown-key", f"unknown key {name}")

    return RunConfig(
        grid_n=grid_n,
        grid_length=grid_length,
        material=material,
        plastic=plastic,
        spinodal=spinodal,
        shear=shear,
        solver=solver,
        verify=VerifySettings(**verify_kwargs),
        **run_kwargs,
        **sweep_kwargs,
        **top,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config-not-found", f"no config file at {path}")
    return parse_config(path.read_text())


def config_from_canonical(data: dict) -> RunConfig:
    """Rebuild a RunConfig from the canonical dict written into run
    directories (the inverse of RunConfig.canonical)."""

    def revive(obj):
        if obj == "inf":
            return np.inf
        if isinstance(obj, list):
            return tuple(revive(x) for x in obj)
        if isinstance(obj, dict):
            return {k: revive(v) for k, v in obj.items()}
        return obj

    data = revive(dict(data))
    try:
        return RunConfig(
            grid_n=data["grid_n"],
            grid_length=data["grid_length"],
            material=MaterialParams(**data["material"]),
            plastic=PlasticParams(**data["plastic"]),
            h=data["h"],
            n_steps=data["n_steps"],
            gamma=data["gamma"],
            seed=data["seed"],
            output=data["output"],
            checkpoint_every=data["checkpoint_every"],
            save_fields=data["save_fields"],
            scenario=data["scenario"],
            spinodal=SpinodalSettings(**data["spinodal"]),
            shear=ShearSettings(**data["shear"]),
            forcing=data["forcing"],
            forcing_amplitude=data["forcing_amplitude"],
            solver=StepperOptions(**data["solver"]),
            sweep_gammas=data["sweep_gammas"],
            sweep_parallel=data["sweep_parallel"],
            verify=VerifySettings(**data["verify"]),
        )
    except KeyError as exc:
        raise ConfigError("config-canonical-missing", f"stored config lacks field {exc}") from None
