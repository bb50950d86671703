"""Simulation state: one time level of all unknowns."""

from __future__ import annotations

from dataclasses import dataclass

from .grid import (
    Grid,
    ScalarField,
    SymTraceFreeTensorField,
    VectorField,
    load_fields,
    save_fields,
)


@dataclass
class State:
    """Velocity on faces, extra stress / order parameter / chemical potential
    / pressure at cells, plus the clock."""

    grid: Grid
    v: VectorField
    S: SymTraceFreeTensorField
    phi: ScalarField
    mu: ScalarField
    p: ScalarField
    t: float = 0.0
    step: int = 0

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(
            grid=grid,
            v=VectorField.zeros(grid),
            S=SymTraceFreeTensorField.zeros(grid),
            phi=ScalarField.zeros(grid),
            mu=ScalarField.zeros(grid),
            p=ScalarField.zeros(grid),
        )

    def copy(self) -> "State":
        return State(
            grid=self.grid,
            v=self.v.copy(),
            S=self.S.copy(),
            phi=self.phi.copy(),
            mu=self.mu.copy(),
            p=self.p.copy(),
            t=self.t,
            step=self.step,
        )

    def save(self, path, extra_meta: dict = None) -> None:
        fields = {"phi": (self.phi.data, "cell"), "mu": (self.mu.data, "cell"), "p": (self.p.data, "cell")}
        for a, comp in enumerate(self.v.comps):
            fields[f"v{a}"] = (comp, f"face{a}")
        for i, comp in enumerate(self.S.comps):
            fields[f"S{i}"] = (comp, "cell")
        meta = {"t": self.t, "step": self.step}
        if extra_meta:
            meta.update(extra_meta)
        save_fields(path, self.grid, fields, meta)

    @classmethod
    def load(cls, path) -> "State":
        grid, fields, meta = load_fields(path)
        d = grid.dim
        n_s = 2 if d == 2 else 5
        state = cls(
            grid=grid,
            v=VectorField(grid, tuple(fields[f"v{a}"][0] for a in range(d))),
            S=SymTraceFreeTensorField(grid, tuple(fields[f"S{i}"][0] for i in range(n_s))),
            phi=ScalarField(grid, fields["phi"][0]),
            mu=ScalarField(grid, fields["mu"][0]),
            p=ScalarField(grid, fields["p"][0]),
            t=float(meta.get("t", 0.0)),
            step=int(meta.get("step", 0)),
        )
        return state
