"""
Refined Whitney stopping collections on a grid.

S is the set of maximal lattice cubes L with 9L inside E. Cubes stop at a
minimum edge, so cells of E near its boundary may be covered by no selected
cube; they form the unresolved residue and are reported, never hidden.
All property checks are exact set tests on cell counts.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import NotOpen
from ..core.grid import CONTAINMENT_SLACK, Cube, Grid, dyadic_cubes
from .models import StoppingReport

logger = logging.getLogger(__name__)

SCALE_GAP = 8
OVERLAP_PERIOD = 256


# ============================================================================
# CELL-COUNT GEOMETRY
# ============================================================================

def summed_area(grid: Grid, mask: np.ndarray) -> np.ndarray:
    """Zero-padded summed-area table of a cell mask"""
    shaped = grid.reshape(np.asarray(mask, dtype=np.int64))
    table = np.zeros(tuple(s + 1 for s in shaped.shape), dtype=np.int64)
    cumulative = shaped
    for axis in range(grid.n):
        cumulative = np.cumsum(cumulative, axis=axis)
    table[(slice(1, None),) * grid.n] = cumulative
    return table


def index_ranges(grid: Grid, lowers: np.ndarray, uppers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-axis [lo, hi) index ranges of the midpoints inside half-open boxes, clipped to the grid"""
    lo = np.ceil((lowers + grid.box) / grid.h - 0.5 - CONTAINMENT_SLACK).astype(np.int64)
    hi = np.ceil((uppers + grid.box) / grid.h - 0.5 - CONTAINMENT_SLACK).astype(np.int64)
    lo = np.clip(lo, 0, grid.per_axis)
    hi = np.clip(hi, 0, grid.per_axis)
    return lo, np.maximum(hi, lo)


def box_counts(table: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mask counts inside index boxes via inclusion-exclusion"""
    if lo.shape[1] == 1:
        return table[hi[:, 0]] - table[lo[:, 0]]
    return (table[hi[:, 0], hi[:, 1]] - table[lo[:, 0], hi[:, 1]]
            - table[hi[:, 0], lo[:, 1]] + table[lo[:, 0], lo[:, 1]])


def _volumes(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.prod(hi - lo, axis=1)


def _inside_box(grid: Grid, lowers: np.ndarray, uppers: np.ndarray) -> np.ndarray:
    return np.all(lowers >= -grid.box - CONTAINMENT_SLACK, axis=1) & \
        np.all(uppers <= grid.box + CONTAINMENT_SLACK, axis=1)


def dilated_inside(grid: Grid, table: np.ndarray, centers: np.ndarray, edges: np.ndarray,
                   factor: float) -> np.ndarray:
    """factor*L inside the box with every midpoint in the mask"""
    half = 0.5 * factor * edges[:, None]
    lowers, uppers = centers - half, centers + half
    lo, hi = index_ranges(grid, lowers, uppers)
    full = box_counts(table, lo, hi) == _volumes(lo, hi)
    return _inside_box(grid, lowers, uppers) & full


def dilated_meets_complement(grid: Grid, table: np.ndarray, centers: np.ndarray,
                             edges: np.ndarray, factor: float) -> np.ndarray:
    """factor*L leaves the box or holds a midpoint outside the mask"""
    half = 0.5 * factor * edges[:, None]
    lowers, uppers = centers - half, centers + half
    lo, hi = index_ranges(grid, lowers, uppers)
    partial = box_counts(table, lo, hi) < _volumes(lo, hi)
    return ~_inside_box(grid, lowers, uppers) | partial


# ============================================================================
# COLLECTION
# ============================================================================

@dataclass(eq=False)
class StoppingCollection:
    """Maximal lattice cubes L with 9L in E, plus the unresolved residue"""

    grid: Grid
    shift: Tuple[float, ...]
    cubes: List[Cube]
    E: np.ndarray
    min_edge: float
    covered: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.covered is None:
            self.covered = np.zeros(self.grid.size, dtype=bool)
            for cube in self.cubes:
                self.covered |= cube.mask(self.grid)

    def __len__(self) -> int:
        return len(self.cubes)

    @property
    def residue(self) -> np.ndarray:
        return self.E & ~self.covered

    @property
    def residue_cells(self) -> int:
        return int(np.count_nonzero(self.residue))

    def centers(self) -> np.ndarray:
        if not self.cubes:
            return np.zeros((0, self.grid.n))
        return np.array([cube.center for cube in self.cubes])

    def edges(self) -> np.ndarray:
        return np.array([cube.edge for cube in self.cubes])

    def scales(self) -> np.ndarray:
        return np.array([cube.scale for cube in self.cubes])


def _as_open_mask(grid: Grid, E) -> np.ndarray:
    E = np.asarray(E)
    if E.shape != (grid.size,):
        raise NotOpen("set must be given as a cell mask of the grid", shape=E.shape, size=grid.size)
    if E.dtype != bool:
        if not np.all((E == 0) | (E == 1)):
            raise NotOpen("set is not a union of whole cells")
        E = E.astype(bool)
    return E


def admissible_edges(grid: Grid, min_edge: Optional[float] = None) -> List[float]:
    """Lattice edges from the largest with 9L fitting in the box down to min_edge"""
    low = grid.h if min_edge is None else max(min_edge, grid.h)
    k_high = math.floor(math.log2(2.0 * grid.box / 9.0) + CONTAINMENT_SLACK)
    k_low = math.ceil(math.log2(low) - CONTAINMENT_SLACK)
    return [2.0 ** k for k in range(k_high, k_low - 1, -1)]


def whitney_stopping(E, grid: Grid, shift: Optional[Sequence[float]] = None,
                     min_edge: Optional[float] = None) -> StoppingCollection:
    """Top-down selection of maximal lattice cubes L with 9L inside E"""
    E = _as_open_mask(grid, E)
    shift = tuple(float(t) for t in shift) if shift is not None else (0.0,) * grid.n
    min_edge = grid.h if min_edge is None else max(min_edge, grid.h)
    if not E.any():
        return StoppingCollection(grid, shift, [], E, min_edge)

    table = summed_area(grid, E)
    covered = grid.reshape(np.zeros(grid.size, dtype=bool))
    selected: List[Cube] = []
    for edge in admissible_edges(grid, min_edge):
        layer = dyadic_cubes(grid, edge, shift)
        if not layer:
            continue
        centers = np.array([cube.center for cube in layer])
        edges = np.full(len(layer), edge)
        candidates = dilated_inside(grid, table, centers, edges, 9.0)
        if not candidates.any():
            continue
        lo, hi = index_ranges(grid, centers - edge / 2.0, centers + edge / 2.0)
        for index in np.flatnonzero(candidates):
            if np.any(hi[index] <= lo[index]):
                continue
            if covered[tuple(lo[index])]:
                continue
            region = tuple(slice(a, b) for a, b in zip(lo[index], hi[index]))
            covered[region] = True
            selected.append(layer[index])

    collection = StoppingCollection(grid, shift, selected, E, min_edge, grid.flatten(covered))
    logger.debug(f"Whitney stopping: {len(selected)} cubes, {collection.residue_cells} residue cells")
    return collection


# ============================================================================
# PROPERTY CHECKS
# ============================================================================

def _pairwise_overlap(centers: np.ndarray, edges: np.ndarray, factor: float) -> np.ndarray:
    """Open intersection of factor*L and factor*L' for every pair"""
    reach = 0.5 * factor * (edges[:, None] + edges[None, :])
    gaps = np.abs(centers[:, None, :] - centers[None, :, :])
    return np.all(gaps < reach[:, :, None] - CONTAINMENT_SLACK, axis=2)


def _residue_resolvable(S: StoppingCollection, table: np.ndarray) -> bool:
    """True when some residue cell lies in an admissible lattice cube with 9L inside E"""
    residue = np.flatnonzero(S.residue)
    if residue.size == 0:
        return False
    grid = S.grid
    points = grid.points[residue]
    for edge in admissible_edges(grid, S.min_edge):
        k = int(round(math.log2(edge)))
        sign = -1.0 if k % 2 else 1.0
        offset = edge * sign * np.asarray(S.shift)
        lowers = np.unique(np.floor((points - offset) / edge), axis=0) * edge + offset
        centers = lowers + edge / 2.0
        if dilated_inside(grid, table, centers, np.full(len(centers), edge), 9.0).any():
            return True
    return False


def check_stopping_properties(S: StoppingCollection,
                              parents: Optional[Sequence[Cube]] = None) -> StoppingReport:
    """Exact set tests of the five stopping properties (residue form of the covering)"""
    grid = S.grid
    table = summed_area(grid, S.E)
    centers, edges = S.centers(), S.edges()

    disjoint = True
    covered_ok = True
    nine_fold_ok = True
    far_ok = True
    separation_ok = True
    parent_ok: Optional[bool] = None
    max_overlap = 0

    if S.cubes:
        masks = np.stack([cube.mask(grid) for cube in S.cubes])
        counts = masks.sum(axis=0)
        disjoint = bool(counts.max() <= 1)
        covered_ok = bool(np.array_equal(counts > 0, S.covered)) and not np.any(S.covered & ~S.E)
        nine_fold_ok = bool(dilated_inside(grid, table, centers, edges, 9.0).all())
        far_ok = bool(dilated_meets_complement(grid, table, centers, edges, 32.0).all())

        overlap = _pairwise_overlap(centers, edges, 7.0)
        scale_gap = np.abs(S.scales()[:, None] - S.scales()[None, :])
        separation_ok = bool(np.all(scale_gap[overlap] < SCALE_GAP))
        max_overlap = int((overlap & (scale_gap < SCALE_GAP)).sum(axis=1).max())

    if parents is not None:
        parent_ok = True
        for Q in parents:
            Q3 = Q.dilate(3.0)
            for L in S.cubes:
                if not L.star().intersects(Q.star()):
                    continue
                L32 = L.dilate(32.0)
                if not Q3.contains_cube(L32):
                    parent_ok = False
                    break
                lo, hi = index_ranges(grid, L32.lower[None, :], L32.upper[None, :])
                outside = _volumes(lo, hi)[0] - box_counts(table, lo, hi)[0]
                if outside <= 0:
                    parent_ok = False
                    break
            if not parent_ok:
                break

    resolvable = _residue_resolvable(S, table)
    report = StoppingReport(
        cube_count=len(S.cubes),
        residue_cells=S.residue_cells,
        disjoint=disjoint,
        covering=covered_ok and nine_fold_ok and not resolvable,
        residue_unresolvable=not resolvable,
        nine_fold_inside=nine_fold_ok,
        far_from_complement=far_ok,
        scale_separation=separation_ok,
        parent_nesting=parent_ok,
        max_overlap=max_overlap
    )
    if not report.passed:
        logger.warning(f"⚠️ Stopping properties failed: {report.failed()}")
    return report


# ============================================================================
# OVERLAP CONSTANT
# ============================================================================

def _axis_counts(shift: float, k: int) -> np.ndarray:
    """counts[k', m]: lattice cubes of scale k' whose 7-fold dilation meets 7Q, Q = m-th cube of scale k"""
    edge = 2.0 ** k
    sign = -1.0 if k % 2 else 1.0
    m = np.arange(OVERLAP_PERIOD)
    centers = edge * (m + sign * shift) + edge / 2.0
    rows = []
    for dk in range(-(SCALE_GAP - 1), SCALE_GAP):
        kk = k + dk
        e2 = 2.0 ** kk
        sign2 = -1.0 if kk % 2 else 1.0
        reach = 3.5 * (edge + e2)
        a = (centers - reach - e2 / 2.0) / e2 - sign2 * shift
        b = (centers + reach - e2 / 2.0) / e2 - sign2 * shift
        rows.append(np.maximum(0, np.ceil(b) - np.floor(a) - 1))
    return np.stack(rows)


def overlap_constant(n: int, shift: Optional[Sequence[float]] = None) -> int:
    """Exact max count of lattice cubes Q' with 7Q meeting 7Q' and scale gap below 8"""
    shift = tuple(shift) if shift is not None else (0.0,) * n
    best = 0
    for k in (0, 1):
        counts = [_axis_counts(shift[axis], k) for axis in range(n)]
        if n == 1:
            total = counts[0].sum(axis=0)
            best = max(best, int(total.max()))
        else:
            total = counts[0].T @ counts[1]
            best = max(best, int(total.max()))
    return best


def default_level_fraction(n: int, shift: Optional[Sequence[float]] = None) -> float:
    """C_cap^-1 2^(-12 n)"""
    return 1.0 / (overlap_constant(n, shift) * 2.0 ** (12 * n))
