"""Rectangular structured grid with MAC staggering, field containers, and a
self-describing binary field format.

Layout conventions (index order is [ix, iy] / [ix, iy, iz] throughout):
  - scalars, pressure, chemical potential, stress components: cell centers,
    shape ``n``
  - velocity component along axis a: faces normal to axis a, shape
    ``n + e_a`` (one extra layer along a); boundary faces sit on the wall
  - quantities staggered in several axes (corner/edge values used by the
    strain machinery) have the extra layer along each staggered axis

Uniform spacing per axis. All arrays are float64.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

_MAGIC = b"VEPF1\n"

# staggering tags used by the serializer
_LOC_TAGS = {
    "cell": None,  # placeholder, handled specially
}


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid in 2 or 3 dimensions."""

    n: tuple
    length: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        length = tuple(float(v) for v in self.length)
        if len(n) not in (2, 3):
            raise ValueError("grid dimension must be 2 or 3")
        if len(length) != len(n):
            raise ValueError("n and length must have equal dimension")
        if any(v < 2 for v in n):
            raise ValueError("need at least 2 cells per axis")
        if any(v <= 0 for v in length):
            raise ValueError("domain lengths must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple:
        return tuple(L / m for L, m in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    def cell_count(self) -> int:
        return int(np.prod(self.n))

    def shape(self, staggered) -> tuple:
        """Array shape for a quantity staggered along the given axes.

        ``staggered`` is an iterable of bools, one per axis; True means the
        values sit on faces/planes of that axis (one extra layer).
        """
        return tuple(m + 1 if s else m for m, s in zip(self.n, staggered))

    def face_shape(self, axis: int) -> tuple:
        return self.shape(tuple(a == axis for a in range(self.dim)))

    def axis_coords(self, axis: int, staggered: bool) -> np.ndarray:
        h = self.h[axis]
        if staggered:
            return np.linspace(0.0, self.length[axis], self.n[axis] + 1)
        return (np.arange(self.n[axis]) + 0.5) * h

    def mesh(self, staggered):
        """Coordinate arrays (ij indexing) for the given staggering."""
        axes = [self.axis_coords(a, s) for a, s in enumerate(staggered)]
        return np.meshgrid(*axes, indexing="ij")

    def cell_mesh(self):
        return self.mesh((False,) * self.dim)

    def face_mesh(self, axis: int):
        return self.mesh(tuple(a == axis for a in range(self.dim)))


def _staggering_for(grid: Grid, loc: str) -> tuple:
    if loc == "cell":
        return (False,) * grid.dim
    if loc.startswith("face"):
        axis = int(loc[4:])
        return tuple(a == axis for a in range(grid.dim))
    if loc.startswith("stag:"):
        bits = loc[5:]
        return tuple(c == "1" for c in bits)
    raise ValueError(f"unknown field location tag {loc!r}")


@dataclass
class ScalarField:
    """Cell-centered scalar."""

    grid: Grid
    data: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray(fn(*grid.cell_mesh()), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy())

    def mean(self) -> float:
        return float(self.data.mean())


@dataclass
class VectorField:
    """MAC-staggered vector field; component a lives on faces normal to a."""

    grid: Grid
    comps: tuple

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, tuple(np.zeros(grid.face_shape(a)) for a in range(grid.dim)))

    @classmethod
    def from_function(cls, grid: Grid, fns) -> "VectorField":
        """Sample analytic components (one callable per axis) at face points."""
        comps = []
        for a in range(grid.dim):
            comps.append(np.asarray(fns[a](*grid.face_mesh(a)), dtype=float))
        return cls(grid, tuple(comps))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, tuple(c.copy() for c in self.comps))

    def zero_boundary_normal(self) -> None:
        """Zero the wall-normal boundary faces (no-penetration) in place."""
        for a, c in enumerate(self.comps):
            sl = [slice(None)] * self.grid.dim
            sl[a] = 0
            c[tuple(sl)] = 0.0
            sl[a] = -1
            c[tuple(sl)] = 0.0

    def max_abs(self) -> float:
        return max(float(np.abs(c).max()) for c in self.comps)


def _tensor_comp_names(dim: int):
    if dim == 2:
        return ("s11", "s12")
    return ("s11", "s22", "s12", "s13", "s23")


@dataclass
class SymTraceFreeTensorField:
    """Symmetric trace-free tensor at cell centers.

    Stored components: 2D ``(s11, s12)`` with s22 = -s11; 3D
    ``(s11, s22, s12, s13, s23)`` with s33 = -s11-s22.
    """

    grid: Grid
    comps: tuple

    @classmethod
    def zeros(cls, grid: Grid) -> "SymTraceFreeTensorField":
        k = 2 if grid.dim == 2 else 5
        return cls(grid, tuple(np.zeros(grid.n) for _ in range(k)))

    def copy(self) -> "SymTraceFreeTensorField":
        return SymTraceFreeTensorField(self.grid, tuple(c.copy() for c in self.comps))

    def frobenius_sq(self) -> np.ndarray:
        """Pointwise |S|^2 (full-tensor Frobenius norm squared)."""
        if self.grid.dim == 2:
            s11, s12 = self.comps
            return 2.0 * (s11**2 + s12**2)
        s11, s22, s12, s13, s23 = self.comps
        s33 = -s11 - s22
        return s11**2 + s22**2 + s33**2 + 2.0 * (s12**2 + s13**2 + s23**2)

    def full(self) -> np.ndarray:
        """Full tensor as an array of shape n + (d, d)."""
        d = self.grid.dim
        out = np.zeros(self.grid.n + (d, d))
        if d == 2:
            s11, s12 = self.comps
            out[..., 0, 0] = s11
            out[..., 1, 1] = -s11
            out[..., 0, 1] = s12
            out[..., 1, 0] = s12
        else:
            s11, s22, s12, s13, s23 = self.comps
            out[..., 0, 0] = s11
            out[..., 1, 1] = s22
            out[..., 2, 2] = -s11 - s22
            out[..., 0, 1] = out[..., 1, 0] = s12
            out[..., 0, 2] = out[..., 2, 0] = s13
            out[..., 1, 2] = out[..., 2, 1] = s23
        return out

    @classmethod
    def from_full(cls, grid: Grid, full: np.ndarray) -> "SymTraceFreeTensorField":
        if grid.dim == 2:
            return cls(grid, (full[..., 0, 0].copy(), full[..., 0, 1].copy()))
        return cls(
            grid,
            (
                full[..., 0, 0].copy(),
                full[..., 1, 1].copy(),
                full[..., 0, 1].copy(),
                full[..., 0, 2].copy(),
                full[..., 1, 2].copy(),
            ),
        )

    def trace(self) -> np.ndarray:
        """Trace of the reconstructed tensor; zero by construction."""
        return np.zeros(self.grid.n)

    def max_abs(self) -> float:
        """max over cells of the pointwise Frobenius norm."""
        return float(np.sqrt(self.frobenius_sq().max()))


@dataclass
class AntisymTensorField:
    """Antisymmetric tensor at cell centers: (w12,) in 2D, (w12, w13, w23) in 3D,
    where w_ab is the (a,b) entry (so entry (b,a) = -w_ab)."""

    grid: Grid
    comps: tuple

    @classmethod
    def zeros(cls, grid: Grid) -> "AntisymTensorField":
        k = 1 if grid.dim == 2 else 3
        return cls(grid, tuple(np.zeros(grid.n) for _ in range(k)))

    def full(self) -> np.ndarray:
        d = self.grid.dim
        out = np.zeros(self.grid.n + (d, d))
        if d == 2:
            (w12,) = self.comps
            out[..., 0, 1] = w12
            out[..., 1, 0] = -w12
        else:
            w12, w13, w23 = self.comps
            out[..., 0, 1] = w12
            out[..., 1, 0] = -w12
            out[..., 0, 2] = w13
            out[..., 2, 0] = -w13
            out[..., 1, 2] = w23
            out[..., 2, 1] = -w23
        return out


# ---------------------------------------------------------------------------
# serialization: magic line, JSON header line, then raw little-endian float64
# in column-major (Fortran) order, one block per field in header order.
# ---------------------------------------------------------------------------


def save_fields(path, grid: Grid, fields, meta=None) -> None:
    """Write named arrays to the container format.

    ``fields`` maps name -> (array, loc) where loc is one of "cell",
    "face<axis>", or "stag:<bits>" (one 0/1 per axis). ``meta`` is an optional
    JSON-serializable dict stored in the header.
    """
    entries = []
    blobs = []
    offset = 0
    for name, (arr, loc) in fields.items():
        arr = np.asarray(arr, dtype="<f8")
        want = grid.shape(_staggering_for(grid, loc))
        if arr.shape != want:
            raise ValueError(f"field {name!r}: shape {arr.shape} does not match location {loc} {want}")
        raw = arr.tobytes(order="F")
        entries.append(
            {
                "name": name,
                "loc": loc,
                "shape": list(arr.shape),
                "dtype": "<f8",
                "order": "F",
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format": "vepf-fields",
        "version": 1,
        "dim": grid.dim,
        "n": list(grid.n),
        "length": list(grid.length),
        "fields": entries,
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for raw in blobs:
            fh.write(raw)


def load_fields(path):
    """Read a container written by :func:`save_fields`.

    Returns ``(grid, fields, meta)`` with ``fields`` mapping name ->
    (array, loc).
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a vepf field container")
        header = json.loads(fh.readline().decode("utf-8"))
        body = fh.read()
    grid = Grid(tuple(header["n"]), tuple(header["length"]))
    fields = {}
    for ent in header["fields"]:
        raw = body[ent["offset"] : ent["offset"] + ent["nbytes"]]
        arr = np.frombuffer(raw, dtype=ent["dtype"]).reshape(ent["shape"], order=ent["order"]).copy()
        fields[ent["name"]] = (arr, ent["loc"])
    return grid, fields, header.get("meta", {})
