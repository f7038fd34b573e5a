"""
Uniform box grids, cubes, the shifted dyadic lattices and midpoint quadrature.

All grid functions are sampled at cell midpoints and stored flat in C order,
so a grid with 2^J cells per axis carries (2^J)^n samples. Vector samples add
a trailing axis of length m, matrix samples two.
"""

import math
import logging
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np

from .errors import EmptyCube, GridConfigError, GridMismatch, NonFiniteSamples

logger = logging.getLogger(__name__)

ONE_THIRD = 1.0 / 3.0
CONTAINMENT_SLACK = 1e-12
CODOMAINS = ("scalar", "vector", "matrix")


@dataclass(frozen=True)
class Grid:
    """Cell-midpoint grid on the box [-box, box]^n with 2^J cells per axis"""

    n: int
    J: int
    box: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise GridConfigError("grid dimension must be 1 or 2", n=self.n)
        if self.J < 4:
            raise GridConfigError("grid needs at least 16 cells per axis", J=self.J)
        if self.box <= 0 or not float(math.log2(self.box)).is_integer():
            raise GridConfigError("box half-width must be a power of two", box=self.box)

    @property
    def per_axis(self) -> int:
        return 2 ** self.J

    @property
    def size(self) -> int:
        return self.per_axis ** self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.per_axis,) * self.n

    @property
    def h(self) -> float:
        return 2.0 * self.box / self.per_axis

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def volume(self) -> float:
        return (2.0 * self.box) ** self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.box + (np.arange(self.per_axis) + 0.5) * self.h

    @cached_property
    def points(self) -> np.ndarray:
        """Midpoints as an (size, n) array in C order"""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack([c.ravel() for c in mesh], axis=1)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Cells touching the box boundary"""
        idx = np.indices(self.shape).reshape(self.n, -1)
        return np.any((idx == 0) | (idx == self.per_axis - 1), axis=0)

    def reshape(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.shape + np.asarray(values).shape[1:])

    def flatten(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        return values.reshape((self.size,) + values.shape[self.n:])

    def refine(self) -> "Grid":
        return Grid(self.n, self.J + 1, self.box)

    def index_of(self, point: Iterable[float]) -> int:
        """Flat index of the cell containing a point"""
        coords = np.asarray(tuple(point), dtype=float)
        idx = np.floor((coords + self.box) / self.h).astype(int)
        idx = np.clip(idx, 0, self.per_axis - 1)
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "J": self.J, "L_box": self.box}


@dataclass(frozen=True)
class Cube:
    """Axis-parallel half-open cube; dyadic cubes also carry scale and lattice shift"""

    center: Tuple[float, ...]
    edge: float
    scale: Optional[int] = None
    shift: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.edge <= 0:
            raise GridConfigError("cube edge must be positive", edge=self.edge)

    @classmethod
    def from_lower(cls, lower: Iterable[float], edge: float) -> "Cube":
        lower = tuple(float(v) for v in lower)
        return cls(tuple(v + edge / 2.0 for v in lower), float(edge))

    @classmethod
    def dyadic(cls, k: int, m: Iterable[int], shift: Iterable[float]) -> "Cube":
        """The cube 2^k([0,1)^n + m + (-1)^k t)"""
        m = tuple(int(v) for v in m)
        shift = tuple(float(v) for v in shift)
        edge = 2.0 ** k
        sign = -1.0 if k % 2 else 1.0
        lower = tuple(edge * (mi + sign * ti) for mi, ti in zip(m, shift))
        center = tuple(v + edge / 2.0 for v in lower)
        return cls(center, edge, scale=-k, shift=shift)

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def is_dyadic(self) -> bool:
        return self.scale is not None

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - self.edge / 2.0

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center) + self.edge / 2.0

    @property
    def measure(self) -> float:
        return self.edge ** self.n

    def dilate(self, factor: float) -> "Cube":
        return Cube(self.center, self.edge * factor)

    def star(self) -> "Cube":
        return self.dilate(9.0 / 8.0)

    def mask(self, grid: Grid) -> np.ndarray:
        """Boolean mask of the midpoints inside the cube"""
        if grid.n != self.n:
            raise GridMismatch("cube and grid dimensions differ", cube_n=self.n, grid_n=grid.n)
        inside = np.ones(grid.size, dtype=bool)
        for axis in range(self.n):
            coord = grid.points[:, axis]
            inside &= (coord >= self.lower[axis]) & (coord < self.upper[axis])
        return inside

    def cell_count(self, grid: Grid) -> int:
        return int(np.count_nonzero(self.mask(grid)))

    def contains_point(self, point: Iterable[float]) -> bool:
        p = np.asarray(tuple(point), dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p < self.upper))

    def contains_cube(self, other: "Cube") -> bool:
        return bool(
            np.all(self.lower <= other.lower + CONTAINMENT_SLACK)
            and np.all(other.upper <= self.upper + CONTAINMENT_SLACK)
        )

    def intersects(self, other: "Cube") -> bool:
        return bool(np.all(self.lower < other.upper) and np.all(other.lower < self.upper))

    def inside_box(self, grid: Grid) -> bool:
        return bool(np.all(self.lower >= -grid.box - CONTAINMENT_SLACK)
                    and np.all(self.upper <= grid.box + CONTAINMENT_SLACK))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center": [float(c) for c in self.center],
            "edge": float(self.edge),
            "scale": self.scale,
            "shift": None if self.shift is None else [float(t) for t in self.shift]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Cube":
        shift = data.get("shift")
        return cls(
            tuple(float(c) for c in data["center"]),
            float(data["edge"]),
            scale=data.get("scale"),
            shift=None if shift is None else tuple(float(t) for t in shift)
        )


def lattice_shifts(n: int) -> Tuple[Tuple[float, ...], ...]:
    """All shifts t in {0, 1/3}^n, the unshifted lattice first"""
    return tuple(itertools.product((0.0, ONE_THIRD), repeat=n))


def dyadic_containing(k: int, lower: np.ndarray, shift: Tuple[float, ...]) -> Cube:
    """The cube of scale 2^k on lattice t whose closure-lower corner is at or below `lower`"""
    edge = 2.0 ** k
    sign = -1.0 if k % 2 else 1.0
    m = [math.floor(lower[i] / edge - sign * shift[i] + CONTAINMENT_SLACK) for i in range(len(shift))]
    return Cube.dyadic(k, m, shift)


def dyadic_cover(cube: Cube) -> Tuple[Tuple[float, ...], Cube]:
    """Smallest cube of one of the shifted dyadic lattices containing `cube`"""
    k0 = math.ceil(math.log2(cube.edge) - CONTAINMENT_SLACK)
    for k in range(k0, k0 + 4):
        for shift in lattice_shifts(cube.n):
            candidate = dyadic_containing(k, cube.lower, shift)
            if candidate.contains_cube(cube):
                return shift, candidate

    # unreachable for exact arithmetic; widen the search instead of failing
    logger.warning(f"dyadic_cover widened its search for cube {cube.to_dict()}")
    for k in range(k0 + 4, k0 + 64):
        for shift in lattice_shifts(cube.n):
            candidate = dyadic_containing(k, cube.lower, shift)
            if candidate.contains_cube(cube):
                return shift, candidate
    raise GridConfigError("no dyadic cover found", cube=cube.to_dict())


def dyadic_cubes(grid: Grid, edge: float, shift: Tuple[float, ...]) -> list:
    """All cubes of the given lattice and edge lying inside the box"""
    k = int(round(math.log2(edge)))
    sign = -1.0 if k % 2 else 1.0
    ranges = []
    for ti in shift:
        lo = math.ceil(-grid.box / edge - sign * ti - CONTAINMENT_SLACK)
        hi = math.floor(grid.box / edge - sign * ti - 1 + CONTAINMENT_SLACK)
        ranges.append(range(lo, hi + 1))
    return [Cube.dyadic(k, m, shift) for m in itertools.product(*ranges)]


@dataclass(eq=False)
class GridFunction:
    """Sampled scalar, vector or matrix valued function on a grid"""

    grid: Grid
    samples: np.ndarray
    codomain: str = "scalar"

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.codomain not in CODOMAINS:
            raise GridConfigError("unknown codomain", codomain=self.codomain)
        expected_ndim = {"scalar": 1, "vector": 2, "matrix": 3}[self.codomain]
        if self.samples.ndim != expected_ndim or self.samples.shape[0] != self.grid.size:
            raise GridMismatch(
                "samples do not match grid and codomain",
                shape=self.samples.shape, size=self.grid.size, codomain=self.codomain
            )
        bad = ~np.isfinite(self.samples)
        if np.any(bad):
            index = int(np.argwhere(bad.reshape(self.grid.size, -1).any(axis=1))[0][0])
            raise NonFiniteSamples("grid function has non-finite samples", sample=index)

    @classmethod
    def scalar(cls, grid: Grid, values: Union[np.ndarray, float]) -> "GridFunction":
        return cls(grid, np.broadcast_to(np.asarray(values, dtype=float), (grid.size,)).copy())

    @classmethod
    def vector(cls, grid: Grid, values: np.ndarray) -> "GridFunction":
        return cls(grid, np.asarray(values, dtype=float), "vector")

    @classmethod
    def indicator(cls, grid: Grid, cube: Cube) -> "GridFunction":
        return cls(grid, cube.mask(grid).astype(float))

    @property
    def m(self) -> int:
        return 1 if self.codomain == "scalar" else int(self.samples.shape[1])

    def magnitude(self) -> np.ndarray:
        """Pointwise |f(x)|: absolute value, Euclidean norm or spectral norm"""
        if self.codomain == "scalar":
            return np.abs(self.samples)
        if self.codomain == "vector":
            return np.linalg.norm(self.samples, axis=1)
        return np.linalg.norm(self.samples, ord=2, axis=(1, 2))

    def restrict(self, cube: Cube) -> "GridFunction":
        mask = cube.mask(self.grid)
        values = self.samples.copy()
        values[~mask] = 0
        return GridFunction(self.grid, values, self.codomain)

    def support_mask(self) -> np.ndarray:
        return self.magnitude() > 0

    def same_grid(self, other: "GridFunction") -> bool:
        return self.grid == other.grid

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _require_same_grid(self, other)
        return GridFunction(self.grid, self.samples + other.samples, self.codomain)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _require_same_grid(self, other)
        return GridFunction(self.grid, self.samples - other.samples, self.codomain)

    def __mul__(self, factor: float) -> "GridFunction":
        return GridFunction(self.grid, self.samples * factor, self.codomain)

    __rmul__ = __mul__


def _require_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatch("grid functions live on different grids",
                           left=f.grid.to_dict(), right=g.grid.to_dict())


def _values(f: Union[GridFunction, np.ndarray]) -> np.ndarray:
    return f.samples if isinstance(f, GridFunction) else np.asarray(f)


def integrate(f: Union[GridFunction, np.ndarray], cube: Cube, grid: Optional[Grid] = None) -> float:
    """Midpoint rule h^n * sum of the samples inside the cube"""
    grid = f.grid if isinstance(f, GridFunction) else grid
    mask = cube.mask(grid)
    if not mask.any():
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict(), h=grid.h)
    return float(grid.cell_volume * np.sum(_values(f)[mask], axis=0))


def average(f: Union[GridFunction, np.ndarray], cube: Cube, grid: Optional[Grid] = None):
    """Counting-measure average over the midpoints of the cube"""
    grid = f.grid if isinstance(f, GridFunction) else grid
    mask = cube.mask(grid)
    if not mask.any():
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict(), h=grid.h)
    return np.mean(_values(f)[mask], axis=0)


def discrete_measure(cube: Cube, grid: Grid) -> float:
    """|Q| under the counting convention"""
    count = cube.cell_count(grid)
    if count == 0:
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict(), h=grid.h)
    return count * grid.cell_volume


def pair(f: GridFunction, phi: GridFunction) -> float:
    """Discrete pairing h^n sum f(x).phi(x), without conjugation"""
    _require_same_grid(f, phi)
    product = f.samples * phi.samples
    return float(f.grid.cell_volume * np.sum(product))


def monomial_exponents(n: int, s: int) -> list:
    """Multi-indices with |beta| <= s ordered by degree"""
    exps = []
    for degree in range(s + 1):
        for beta in itertools.product(range(degree + 1), repeat=n):
            if sum(beta) == degree:
                exps.append(beta)
    return exps


def monomials(points: np.ndarray, s: int, center=None, scale: float = 1.0) -> np.ndarray:
    """Columns ((x - c)/scale)^beta for |beta| <= s, one row per point"""
    points = np.atleast_2d(points)
    n = points.shape[1]
    center = np.zeros(n) if center is None else np.asarray(center)
    y = (points - center) / scale
    exps = monomial_exponents(n, s)
    return np.stack([np.prod(y ** np.asarray(beta), axis=1) for beta in exps], axis=1)
