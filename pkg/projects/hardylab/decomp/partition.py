"""
Smooth partitions of unity subordinate to a stopping collection.

eta_hat_L is a product of smooth plateaus equal to 1 on L and vanishing off
L*; eta_L = eta_hat_L / sum eta_hat wherever the sum is positive. The set
where it is positive is the resolved support, which contains every
selected cube and lies inside the union of the L*.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import expit

from ..core.grid import Cube, Grid
from .models import PartitionReport
from .stopping import StoppingCollection, index_ranges

logger = logging.getLogger(__name__)

PLATEAU_SLOPE = 16.0
STAR_HALF = 9.0 / 16.0


def smooth_step(tau: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for tau <= 0, 1 for tau >= 1"""
    tau = np.asarray(tau, dtype=float)
    out = np.where(tau >= 1.0, 1.0, 0.0)
    inner = (tau > 0.0) & (tau < 1.0)
    t = tau[inner]
    out[inner] = expit(1.0 / (1.0 - t) - 1.0 / t)
    return out


def plateau(points: np.ndarray, cube: Cube) -> np.ndarray:
    """prod_i step(16 (9/16 - |x_i - c_i| / l)): 1 on L, 0 off L*"""
    t = np.abs(points - np.asarray(cube.center)) / cube.edge
    return np.prod(smooth_step((STAR_HALF - t) * PLATEAU_SLOPE), axis=1)


def star_cells(grid: Grid, cube: Cube) -> np.ndarray:
    """Flat indices of the midpoints inside L*"""
    star = cube.star()
    lo, hi = index_ranges(grid, star.lower[None, :], star.upper[None, :])
    axes = [np.arange(a, b) for a, b in zip(lo[0], hi[0])]
    mesh = np.meshgrid(*axes, indexing="ij")
    if any(len(a) == 0 for a in axes):
        return np.zeros(0, dtype=np.int64)
    return np.ravel_multi_index(tuple(c.ravel() for c in mesh), grid.shape)


@dataclass(eq=False)
class PartitionOfUnity:
    """Sparse eta_L per cube with the resolved support"""

    collection: StoppingCollection
    cells: List[np.ndarray]
    values: List[np.ndarray]
    resolved: np.ndarray
    masses: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.masses is None:
            volume = self.collection.grid.cell_volume
            self.masses = np.array([volume * v.sum() for v in self.values])

    @property
    def grid(self) -> Grid:
        return self.collection.grid

    def __len__(self) -> int:
        return len(self.cells)

    def eta(self, index: int) -> np.ndarray:
        out = np.zeros(self.grid.size)
        out[self.cells[index]] = self.values[index]
        return out

    def normalized(self, index: int) -> np.ndarray:
        """eta_tilde_L on its cells"""
        return self.values[index] / self.masses[index]

    def total(self) -> np.ndarray:
        out = np.zeros(self.grid.size)
        for cells, values in zip(self.cells, self.values):
            np.add.at(out, cells, values)
        return out

    def report(self) -> PartitionReport:
        grid = self.grid
        total = self.total()
        identity = float(np.abs(total[self.resolved] - 1.0).max()) if self.resolved.any() else 0.0
        support_ok = True
        ratios, derivative = [], 0.0
        for i, cube in enumerate(self.collection.cubes):
            inside = cube.star()
            pts = grid.points[self.cells[i]]
            live = self.values[i] > 0
            support_ok &= bool(np.all(np.abs(pts[live] - np.asarray(inside.center)) < inside.edge / 2.0))
            ratios.append(self.masses[i] / cube.measure)
            gradient = np.gradient(grid.reshape(self.eta(i)), grid.h)
            gradient = [gradient] if grid.n == 1 else gradient
            slope = np.sqrt(sum(g ** 2 for g in gradient)).max()
            derivative = max(derivative, float(slope * cube.edge))
        return PartitionReport(
            cubes=len(self),
            identity_error=identity,
            support_ok=support_ok,
            mass_ratio_min=min(ratios, default=0.0),
            mass_ratio_max=max(ratios, default=0.0),
            derivative_constant=derivative
        )


def partition_of_unity(S: StoppingCollection) -> PartitionOfUnity:
    """Normalized smooth plateaus over the cubes of S"""
    grid = S.grid
    cells, raw = [], []
    total = np.zeros(grid.size)
    for cube in S.cubes:
        idx = star_cells(grid, cube)
        values = plateau(grid.points[idx], cube)
        cells.append(idx)
        raw.append(values)
        np.add.at(total, idx, values)

    resolved = total > 0.0
    values = [v / np.where(total[idx] > 0.0, total[idx], 1.0) for idx, v in zip(cells, raw)]
    logger.debug(f"Partition of unity: {len(cells)} cubes, {int(resolved.sum())} resolved cells")
    return PartitionOfUnity(S, cells, values, resolved)
