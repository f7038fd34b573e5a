"""
Cube catalogs standing in for "all cubes" in every supremum.
"""

import math
import logging
from typing import List, Optional

import numpy as np

from ..core.errors import ConfigInvalid
from ..core.grid import Cube, Grid, dyadic_cubes, lattice_shifts

logger = logging.getLogger(__name__)

DEFAULT_RANDOM_CUBES = 200


def catalog_edges(grid: Grid, min_edge: Optional[float] = None,
                  max_edge: Optional[float] = None) -> List[float]:
    """Dyadic edges from max(2^-4 * 2 L_box, 2h) up to 2 L_box"""
    low = min_edge if min_edge is not None else 2.0 ** -4 * 2.0 * grid.box
    low = max(low, 2.0 * grid.h)
    high = max_edge if max_edge is not None else 2.0 * grid.box
    edges = []
    k = math.ceil(math.log2(low) - 1e-12)
    while 2.0 ** k <= high + 1e-12:
        edges.append(2.0 ** k)
        k += 1
    return edges


def dyadic_catalog(grid: Grid, min_edge: Optional[float] = None,
                   max_edge: Optional[float] = None) -> List[Cube]:
    """All dyadic cubes of both lattice families with edges in the catalog range"""
    cubes = []
    for edge in catalog_edges(grid, min_edge, max_edge):
        for shift in lattice_shifts(grid.n):
            cubes.extend(dyadic_cubes(grid, edge, shift))
    return cubes


def random_cubes(grid: Grid, count: int, seed: int,
                 min_edge: Optional[float] = None) -> List[Cube]:
    """Seeded cubes with log-uniform edges, fully inside the box, holding >= 2^n midpoints"""
    rng = np.random.Generator(np.random.Philox(seed))
    low = max(min_edge if min_edge is not None else 2.0 * grid.h, 2.0 * grid.h)
    high = 2.0 * grid.box
    cubes = []
    attempts = 0
    while len(cubes) < count and attempts < 20 * max(count, 1):
        attempts += 1
        edge = float(math.exp(rng.uniform(math.log(low), math.log(high))))
        lower = rng.uniform(-grid.box, grid.box - edge, size=grid.n)
        cube = Cube.from_lower(lower, edge)
        if cube.cell_count(grid) >= 2 ** grid.n:
            cubes.append(cube)
    return cubes


def cube_catalog(grid: Grid, random_count: int = DEFAULT_RANDOM_CUBES, seed: int = 0,
                 min_edge: Optional[float] = None, max_edge: Optional[float] = None) -> List[Cube]:
    """Dyadic catalog followed by seeded random cubes"""
    cubes = dyadic_catalog(grid, min_edge, max_edge)
    cubes.extend(random_cubes(grid, random_count, seed, min_edge))
    logger.debug(f"Cube catalog: {len(cubes)} cubes on n={grid.n}, J={grid.J}")
    return cubes


def grid_interval_catalog(grid: Grid, min_cells: int = 1) -> List[Cube]:
    """Every grid-aligned interval of a 1D grid"""
    if grid.n != 1:
        raise ConfigInvalid("grid-aligned interval catalog is one-dimensional", n=grid.n)
    cubes = []
    for start in range(grid.per_axis):
        for stop in range(start + min_cells, grid.per_axis + 1):
            lower = -grid.box + start * grid.h
            cubes.append(Cube.from_lower([lower], (stop - start) * grid.h))
    return cubes


def catalog_masks(grid: Grid, catalog: List[Cube]) -> np.ndarray:
    """(len(catalog), size) membership matrix"""
    if not catalog:
        return np.zeros((0, grid.size), dtype=bool)
    return np.stack([cube.mask(grid) for cube in catalog])


def nonempty(grid: Grid, catalog: List[Cube], min_cells: int = 1) -> List[Cube]:
    return [cube for cube in catalog if cube.cell_count(grid) >= min_cells]
