"""
Scalar and weighted maximal operators over a cube family.

Every supremum over cubes containing x is a maximum over a finite cube family;
the default family is every dyadic cube of every lattice that lies inside the
box, with edges from h to the box half-width.
"""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from ..convexbody.convexbody import CBGridFunction
from ..core.errors import GridMismatch, NotInP
from ..core.grid import Cube, Grid, GridFunction, dyadic_cubes, lattice_shifts
from ..core.parallel import get_cube_processor
from ..core.vexp import ExponentProfile, indicator_norm, vnorm_rows
from ..weights.reducing import reducing_operator
from ..weights.weights import MatrixWeight

logger = logging.getLogger(__name__)

PAIR_CHUNK = 1 << 21


@dataclass(eq=False)
class CubeFamily:
    """Cubes with the flat indices of the midpoints they contain"""

    grid: Grid
    cubes: List[Cube]
    members: List[np.ndarray]

    def __len__(self) -> int:
        return len(self.cubes)

    @classmethod
    def from_cubes(cls, grid: Grid, cubes: Sequence[Cube]) -> "CubeFamily":
        kept, members = [], []
        for cube in cubes:
            idx = np.flatnonzero(cube.mask(grid))
            if idx.size:
                kept.append(cube)
                members.append(idx)
        return cls(grid, kept, members)

    @classmethod
    def dyadic(cls, grid: Grid, min_edge: Optional[float] = None,
               max_edge: Optional[float] = None) -> "CubeFamily":
        """Every lattice cube inside the box with edge in [min_edge, max_edge]"""
        low = grid.h if min_edge is None else max(min_edge, grid.h)
        high = grid.box if max_edge is None else min(max_edge, grid.box)
        cubes, members = [], []
        k = int(math.ceil(math.log2(low) - 1e-12))
        while 2.0 ** k <= high * (1.0 + 1e-12):
            edge = 2.0 ** k
            for shift in lattice_shifts(grid.n):
                layer = dyadic_cubes(grid, edge, shift)
                cubes.extend(layer)
                members.extend(_layer_members(grid, layer, edge))
            k += 1
        return cls(grid, cubes, members)


def _layer_members(grid: Grid, layer: Sequence[Cube], edge: float) -> List[np.ndarray]:
    """Midpoint indices of disjoint same-edge cubes by integer labelling"""
    if not layer:
        return []
    origin = layer[0].lower
    cells = np.floor((grid.points - origin) / edge).astype(np.int64)
    lowers = np.stack([cube.lower for cube in layer])
    labels_of_cubes = np.rint((lowers - origin) / edge).astype(np.int64)

    base = np.minimum(cells.min(axis=0), labels_of_cubes.min(axis=0))
    span = np.maximum(cells.max(axis=0), labels_of_cubes.max(axis=0)) - base + 1
    weights = np.cumprod(np.concatenate([[1], span[:-1]]))
    point_keys = ((cells - base) * weights).sum(axis=1)
    cube_keys = ((labels_of_cubes - base) * weights).sum(axis=1)

    order = np.argsort(point_keys, kind="stable")
    sorted_keys = point_keys[order]
    starts = np.searchsorted(sorted_keys, cube_keys, side="left")
    stops = np.searchsorted(sorted_keys, cube_keys, side="right")
    return [np.sort(order[a:b]) for a, b in zip(starts, stops)]


@lru_cache(maxsize=8)
def default_family(grid: Grid) -> CubeFamily:
    return CubeFamily.dyadic(grid)


def _as_family(grid: Grid, catalog) -> CubeFamily:
    if catalog is None:
        return default_family(grid)
    if isinstance(catalog, CubeFamily):
        if catalog.grid != grid:
            raise GridMismatch("cube family belongs to another grid")
        return catalog
    return CubeFamily.from_cubes(grid, catalog)


def _sup_over_cubes(grid: Grid, family: CubeFamily, values: Sequence[float]) -> np.ndarray:
    out = np.zeros(grid.size)
    for idx, value in zip(family.members, values):
        np.maximum.at(out, idx, value)
    return out


def _magnitude(f) -> np.ndarray:
    if isinstance(f, GridFunction):
        return f.magnitude()
    if isinstance(f, CBGridFunction):
        return f.norms()
    return np.abs(np.asarray(f, dtype=float))


# ============================================================================
# SCALAR OPERATORS
# ============================================================================

def hl_maximal(f, alpha: float = 1.0, catalog=None, grid: Optional[Grid] = None) -> GridFunction:
    """max over cubes Q containing x of (avg_Q |f|^alpha)^(1/alpha)"""
    grid = grid or f.grid
    family = _as_family(grid, catalog)
    g = _magnitude(f) ** alpha
    values = [float(np.mean(g[idx])) ** (1.0 / alpha) for idx in family.members]
    return GridFunction.scalar(grid, _sup_over_cubes(grid, family, values))


def variable_maximal(f, q: ExponentProfile, catalog=None) -> GridFunction:
    """max over cubes Q containing x of vnorm(f 1_Q, q) / vnorm(1_Q, q)"""
    grid = q.grid
    family = _as_family(grid, catalog)
    magnitude = _magnitude(f)

    def per_cube(item) -> float:
        cube, idx = item
        mask = np.zeros(grid.size, dtype=bool)
        mask[idx] = True
        top = vnorm_rows(magnitude[idx][None, :], q, mask)[0]
        return float(top / indicator_norm(q, cube))

    values = get_cube_processor().map_cubes(per_cube, list(zip(family.cubes, family.members)))
    return GridFunction.scalar(grid, _sup_over_cubes(grid, family, values))


# ============================================================================
# MATRIX-WEIGHTED CONVEX-BODY OPERATORS
# ============================================================================

def _as_bodies(F, grid: Grid) -> CBGridFunction:
    if isinstance(F, CBGridFunction):
        return F
    if isinstance(F, GridFunction):
        samples = F.samples[:, None] if F.codomain == "scalar" else F.samples
        return CBGridFunction.from_vectors(grid, samples)
    return CBGridFunction.from_vectors(grid, np.asarray(F, dtype=float))


def _body_image_norms(matrices: np.ndarray, generators: np.ndarray) -> np.ndarray:
    """|A_x V_y| for every (x, y): max over generators of |A_x g|"""
    m = generators.shape[2]
    if m == 1:
        scale = np.abs(matrices[:, 0, 0])
        return scale[:, None] * np.abs(generators[:, :, 0]).max(axis=1)[None, :]
    rows = []
    chunk = max(1, PAIR_CHUNK // max(1, generators.shape[0] * generators.shape[1] * m))
    for start in range(0, matrices.shape[0], chunk):
        images = np.einsum("xij,ygj->xygi", matrices[start:start + chunk], generators)
        rows.append(np.linalg.norm(images, axis=3).max(axis=2))
    return np.concatenate(rows, axis=0)


def christ_goldberg(weight: MatrixWeight, F, alpha: float, catalog=None) -> GridFunction:
    """max over cubes Q containing x of (avg_{y in Q} |W(x) W^-1(y) F(y)|^alpha)^(1/alpha)"""
    grid = weight.grid
    family = _as_family(grid, catalog)
    bodies = _as_bodies(F, grid)
    if bodies.m != weight.m:
        raise GridMismatch("body dimension differs from the weight", m=bodies.m, weight_m=weight.m)
    pulled = np.einsum("yij,ygj->ygi", weight.inverse, bodies.generators)

    out = np.zeros(grid.size)
    for idx in family.members:
        norms = _body_image_norms(weight.samples[idx], pulled[idx])
        values = np.mean(norms ** alpha, axis=1) ** (1.0 / alpha)
        out[idx] = np.maximum(out[idx], values)
    return GridFunction.scalar(grid, out)


def reducing_cg(weight: MatrixWeight, F, u: float, p: ExponentProfile, catalog=None) -> GridFunction:
    """max over cubes Q containing x of (avg_{y in Q} |A_Q W^-1(y) F(y)|^u)^(1/u)"""
    grid = weight.grid
    family = _as_family(grid, catalog)
    bodies = _as_bodies(F, grid)
    if bodies.m != weight.m:
        raise GridMismatch("body dimension differs from the weight", m=bodies.m, weight_m=weight.m)
    pulled = np.einsum("yij,ygj->ygi", weight.inverse, bodies.generators)

    def per_cube(item) -> float:
        cube, idx = item
        if not np.any(pulled[idx]):
            return 0.0
        A = reducing_operator(weight, p, cube).matrix
        norms = np.linalg.norm(np.einsum("ij,ygj->ygi", A, pulled[idx]), axis=2).max(axis=1)
        return float(np.mean(norms ** u) ** (1.0 / u))

    values = get_cube_processor().map_cubes(per_cube, list(zip(family.cubes, family.members)))
    return GridFunction.scalar(grid, _sup_over_cubes(grid, family, values))


def weighted_body_norms(weight: MatrixWeight, F: CBGridFunction) -> np.ndarray:
    """|W(x) F(x)| per sample"""
    return F.transformed_norms(weight.samples)


def require_exponent_split(p: ExponentProfile, q: ExponentProfile) -> np.ndarray:
    """r = p/q, checked to satisfy r_- > 1"""
    if p.has_inf or q.has_inf:
        raise NotInP("exponent split needs finite exponents")
    r = p.values / q.values
    if r.min() <= 1.0:
        raise NotInP("p = r q requires r_- > 1", r_minus=float(r.min()))
    return r
