"""Uniform grids, dyadic lattices and cube averages.

Functions are sampled cellwise on a bounded hyperrectangle and extended by
zero outside it.  Cubes are addressed in cell units; a cube of level ``k``
spans ``2**k`` cells per axis.  Besides the standard lattice every grid
carries ``3**n`` shifted lattices (shift 0 or +-1/3 of the extent per axis)
whose union approximates the family of all cubes.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "GridSpec",
    "SampledFunction",
    "Cube",
    "DyadicLattice",
    "canonical_shifts",
    "resolve_scope",
    "scope_key",
    "block_sums",
    "block_means",
    "expand_blocks",
    "average",
    "lp_norm",
    "enumerate_cubes",
    "load_csv",
    "save_csv",
]


def _is_power_of_two(m: int) -> bool:
    return m >= 2 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell grid on ``prod_i [lo_i, hi_i)``."""

    dimension: int
    bounds: tuple
    resolution: tuple

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {self.dimension}")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        resolution = tuple(int(r) for r in self.resolution)
        if len(bounds) != self.dimension or len(resolution) != self.dimension:
            raise ParameterError("bounds and resolution need one entry per axis")
        for lo, hi in bounds:
            if not hi > lo:
                raise ParameterError(f"empty axis [{lo}, {hi})")
        for r in resolution:
            if not _is_power_of_two(r):
                raise ParameterError(f"resolution {r} is not a power of two >= 2")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "resolution", resolution)

    @classmethod
    def uniform(cls, n: int, resolution: int, lo: float = -1.0, hi: float = 1.0) -> "GridSpec":
        return cls(n, ((lo, hi),) * n, (resolution,) * n)

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def ncells(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def cell_sides(self) -> tuple:
        return tuple((hi - lo) / r for (lo, hi), r in zip(self.bounds, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.cell_sides))

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.bounds]))

    @property
    def max_level(self) -> int:
        return int(np.log2(min(self.resolution)))

    def axis_centers(self) -> list:
        return [lo + (np.arange(r) + 0.5) * h
                for (lo, hi), r, h in zip(self.bounds, self.resolution, self.cell_sides)]

    def centers(self) -> tuple:
        """Cell-center coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*self.axis_centers(), indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean norm of the cell centers."""
        return np.sqrt(sum(c ** 2 for c in self.centers()))

    def to_dict(self) -> dict:
        return {"dimension": self.dimension,
                "bounds": [list(b) for b in self.bounds],
                "resolution": list(self.resolution)}


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Cellwise samples of a real function; immutable after construction."""

    grid: GridSpec
    values: np.ndarray
    nonnegative: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.size != self.grid.ncells:
            raise DomainError(
                f"{values.size} values for a grid of {self.grid.ncells} cells")
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ParameterError("sampled values must be finite")
        if self.nonnegative and np.any(values < 0):
            raise ParameterError("negative sample in a function flagged nonnegative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def like(self, values, nonnegative: bool = False) -> "SampledFunction":
        return SampledFunction(self.grid, values, nonnegative)

    def __abs__(self) -> "SampledFunction":
        return SampledFunction(self.grid, np.abs(self.values), True)

    def scaled(self, c: float) -> "SampledFunction":
        return SampledFunction(self.grid, c * self.values, self.nonnegative and c >= 0)


@dataclass(frozen=True)
class Cube:
    """Cube of a dyadic lattice, stored by its first cell and level."""

    lattice_id: int
    level: int
    index: tuple
    start: tuple

    @property
    def side(self) -> int:
        return 1 << self.level

    @property
    def ncells(self) -> int:
        return self.side ** len(self.start)

    @property
    def slices(self) -> tuple:
        return tuple(slice(s, s + self.side) for s in self.start)

    def contains_cell(self, cell: Sequence[int]) -> bool:
        return all(s <= c < s + self.side for s, c in zip(self.start, cell))

    def contains(self, other: "Cube") -> bool:
        return (other.level <= self.level and
                all(s <= o and o + other.side <= s + self.side
                    for s, o in zip(self.start, other.start)))

    def extent(self, grid: GridSpec) -> tuple:
        """Physical ``(lo, hi)`` per axis."""
        return tuple((lo + s * h, lo + (s + self.side) * h)
                     for (lo, _), s, h in zip(grid.bounds, self.start, grid.cell_sides))

    def mask(self, grid: GridSpec) -> np.ndarray:
        m = np.zeros(grid.shape, dtype=bool)
        m[self.slices] = True
        return m


def canonical_shifts(n: int) -> list:
    """The ``3**n`` shift patterns; index 0 is the unshifted lattice."""
    return list(itertools.product((0, 1, -1), repeat=n))


@dataclass(frozen=True)
class DyadicLattice:
    """Dyadic lattice over ``grid`` translated by ``shift`` thirds of the extent.

    Only whole cubes inside the grid belong to the lattice, so shifted
    lattices leave a margin uncovered at coarse levels.
    """

    grid: GridSpec
    shift: tuple = None

    def __post_init__(self):
        shift = (0,) * self.grid.dimension if self.shift is None else tuple(int(s) for s in self.shift)
        if len(shift) != self.grid.dimension or any(s not in (-1, 0, 1) for s in shift):
            raise ParameterError(f"shift must be a tuple of -1/0/1 per axis, got {shift}")
        object.__setattr__(self, "shift", shift)

    @property
    def lattice_id(self) -> int:
        return canonical_shifts(self.grid.dimension).index(self.shift)

    @property
    def shift_cells(self) -> tuple:
        return tuple(int(round(s * r / 3)) for s, r in zip(self.shift, self.grid.resolution))

    @property
    def levels(self) -> range:
        return range(self.grid.max_level + 1)

    def offsets(self, level: int) -> tuple:
        side = 1 << level
        return tuple(s % side for s in self.shift_cells)

    def counts(self, level: int) -> tuple:
        side = 1 << level
        return tuple(max(0, (r - o) // side)
                     for r, o in zip(self.grid.resolution, self.offsets(level)))

    def region(self, level: int) -> tuple:
        """Slices of the cells covered by whole cubes at ``level``."""
        side = 1 << level
        return tuple(slice(o, o + c * side)
                     for o, c in zip(self.offsets(level), self.counts(level)))

    def cube(self, level: int, index: Sequence[int]) -> Cube:
        side = 1 << level
        index = tuple(int(i) for i in index)
        counts = self.counts(level)
        if any(not 0 <= i < c for i, c in zip(index, counts)):
            raise DomainError(f"cube index {index} outside level {level} (counts {counts})")
        start = tuple(o + i * side for o, i in zip(self.offsets(level), index))
        return Cube(self.lattice_id, level, index, start)

    def cubes(self, level: int) -> list:
        return [self.cube(level, idx)
                for idx in itertools.product(*(range(c) for c in self.counts(level)))]

    def cube_containing(self, cell: Sequence[int], level: int):
        side = 1 << level
        idx = []
        for c, o, cnt in zip(cell, self.offsets(level), self.counts(level)):
            i = (c - o) // side
            if c < o or i >= cnt:
                return None
            idx.append(i)
        return self.cube(level, idx)

    def children(self, Q: Cube) -> list:
        if Q.level == 0:
            return []
        half = Q.side // 2
        out = []
        for corner in itertools.product((0, 1), repeat=len(Q.start)):
            start = tuple(s + c * half for s, c in zip(Q.start, corner))
            idx = tuple((s - o) // half for s, o in zip(start, self.offsets(Q.level - 1)))
            out.append(Cube(self.lattice_id, Q.level - 1, idx, start))
        return out

    def roots(self) -> list:
        """Cubes of the lattice with no parent inside the grid."""
        out = []
        for k in reversed(self.levels):
            for Q in self.cubes(k):
                parent_level = k + 1
                if parent_level > self.grid.max_level:
                    out.append(Q)
                    continue
                cell = Q.start
                if self.cube_containing(cell, parent_level) is None:
                    out.append(Q)
        return out


ScopeLike = Union[str, DyadicLattice, Sequence[DyadicLattice]]


def resolve_scope(grid: GridSpec, scope: ScopeLike = "dyadic") -> tuple:
    """Turn a scope description into a tuple of lattices over ``grid``."""
    if isinstance(scope, str):
        if scope == "dyadic":
            return (DyadicLattice(grid),)
        if scope == "full":
            return tuple(DyadicLattice(grid, s) for s in canonical_shifts(grid.dimension))
        raise ParameterError(f"unknown scope {scope!r}; use 'dyadic' or 'full'")
    if isinstance(scope, DyadicLattice):
        scope = (scope,)
    lattices = tuple(scope)
    for L in lattices:
        if L.grid != grid:
            raise DomainError("lattice built over a different grid")
    return lattices


def scope_key(grid: GridSpec, scope: ScopeLike) -> tuple:
    return tuple(sorted(L.lattice_id for L in resolve_scope(grid, scope)))


def block_sums(values: np.ndarray, lattice: DyadicLattice, level: int) -> np.ndarray:
    """Sum of ``values`` over each whole cube of ``lattice`` at ``level``.

    Returned array has shape ``lattice.counts(level)``.
    """
    side = 1 << level
    counts = lattice.counts(level)
    if 0 in counts:
        return np.zeros(counts)
    sub = values[lattice.region(level)]
    shape = []
    for c in counts:
        shape += [c, side]
    return sub.reshape(shape).sum(axis=tuple(range(1, 2 * len(counts), 2)))


def block_means(values: np.ndarray, lattice: DyadicLattice, level: int) -> np.ndarray:
    return block_sums(values, lattice, level) / float((1 << level) ** values.ndim)


def expand_blocks(blocks: np.ndarray, lattice: DyadicLattice, level: int,
                  fill: float = np.nan) -> np.ndarray:
    """Broadcast per-cube values back onto cells; uncovered cells get ``fill``."""
    side = 1 << level
    out = np.full(lattice.grid.shape, fill, dtype=float)
    if blocks.size == 0:
        return out
    big = blocks
    for axis in range(blocks.ndim):
        big = np.repeat(big, side, axis=axis)
    out[lattice.region(level)] = big
    return out


def _check_cube(grid: GridSpec, Q: Cube):
    if len(Q.start) != grid.dimension:
        raise DomainError("cube dimension does not match the grid")
    for s, r in zip(Q.start, grid.resolution):
        if s < 0 or s + Q.side > r:
            raise DomainError(f"cube at {Q.start} of side {Q.side} leaves the grid")


def average(f: SampledFunction, Q: Cube) -> float:
    """Mean of ``f`` over the cells of ``Q``."""
    _check_cube(f.grid, Q)
    return float(f.values[Q.slices].mean())


def lp_norm(f: SampledFunction, w: SampledFunction = None, p: float = 2.0) -> float:
    """``(sum |f|^p w cellvol)^(1/p)``; ``w=None`` means Lebesgue measure."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if w is not None:
        if w.grid != f.grid:
            raise DomainError("f and w live on different grids")
        if np.any(w.values < 0):
            raise ParameterError("weight has negative values")
        wv = w.values
    else:
        wv = 1.0
    total = np.sum(np.abs(f.values) ** p * wv) * f.grid.cell_volume
    return float(total ** (1.0 / p))


def enumerate_cubes(lattice: DyadicLattice, min_cells: int = 1) -> Iterator[Cube]:
    """Every cube with at least ``min_cells`` cells, finest level first."""
    if min_cells < 1:
        raise ParameterError("min_cells must be >= 1")
    n = lattice.grid.dimension
    for k in lattice.levels:
        if (1 << k) ** n < min_cells:
            continue
        yield from lattice.cubes(k)


def save_csv(f: SampledFunction, path) -> None:
    """One value per line after a JSON header line carrying the grid."""
    path = Path(path)
    header = dict(f.grid.to_dict(), nonnegative=f.nonnegative)
    lines = ["# " + json.dumps(header, sort_keys=True)]
    lines += [repr(float(v)) for v in f.values.ravel()]
    path.write_text("\n".join(lines) + "\n")


def load_csv(path) -> SampledFunction:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise DomainError(f"{path}: missing '# {{grid json}}' header line")
    try:
        meta = json.loads(text[0][1:])
        grid = GridSpec(meta["dimension"], meta["bounds"], meta["resolution"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DomainError(f"{path}: bad header: {exc}") from exc
    values = [float(line) for line in text[1:] if line.strip() and not line.startswith("#")]
    return SampledFunction(grid, values, bool(meta.get("nonnegative", False)))
