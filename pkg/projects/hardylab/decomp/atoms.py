"""
Atoms, their validation and the coefficient functional.
"""

import math
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.grid import Cube, Grid, GridFunction, dyadic_cubes, lattice_shifts, monomials
from ..core.vexp import ExponentProfile, indicator_norm, vnorm, vnorm_rows
from ..weights.reducing import reducing_operator
from ..weights.weights import MatrixWeight
from .models import AtomReport

logger = logging.getLogger(__name__)

MOMENT_TOL = 1e-8
SIZE_SLACK = 1e-9


@dataclass(eq=False)
class Atom:
    """Vector samples supported in `cube`, with its coefficient"""

    samples: np.ndarray
    cube: Cube
    s: int
    lam: float = 1.0
    level: int = 0
    parent: Optional[Cube] = None
    q_exp: float = math.inf

    @property
    def m(self) -> int:
        return int(self.samples.shape[1])

    def scaled(self) -> np.ndarray:
        """lambda * a"""
        return self.lam * self.samples

    def as_grid_function(self, grid: Grid) -> GridFunction:
        return GridFunction.vector(grid, self.samples)


def moment_errors(samples: np.ndarray, grid: Grid, cube: Cube, s: int) -> Tuple[float, float]:
    """Largest |h^n sum a y^gamma| over |gamma| <= s and its scale h^n sum |a| |y^gamma|, y = (x - c)/l"""
    if s < 0:
        return 0.0, 0.0
    live = np.flatnonzero(np.any(samples != 0, axis=1))
    if live.size == 0:
        return 0.0, 0.0
    basis = monomials(grid.points[live], s, cube.center, cube.edge)
    values = samples[live]
    moments = grid.cell_volume * np.abs(basis.T @ values)
    scales = grid.cell_volume * (np.abs(basis).T @ np.abs(values))
    return float(moments.max()), float(scales.max())


def validate_atom(atom: Atom, weight: MatrixWeight, p: ExponentProfile,
                  C_atom: Optional[float] = None) -> AtomReport:
    """Support, vanishing moments, and the reducing-operator and weighted size bounds"""
    grid = weight.grid
    inside = atom.cube.mask(grid)
    live = np.any(atom.samples != 0, axis=1)
    support_ok = not np.any(live & ~inside)

    moment, scale = moment_errors(atom.samples, grid, atom.cube, atom.s)
    relative = moment / scale if scale > 0 else 0.0
    moments_ok = moment <= MOMENT_TOL * scale

    if not live.any():
        return AtomReport(support_ok=support_ok, max_moment=0.0, moments_ok=True,
                          a_size=0.0, w_size=0.0, C_atom=C_atom, size_ok=True)

    norm_1Q = indicator_norm(p, atom.cube)
    A = reducing_operator(weight, p, atom.cube).matrix
    a_size = float(np.linalg.norm(atom.samples[live] @ A.T, axis=1).max() * norm_1Q)

    images = np.einsum("yij,xj->xyi", weight.samples[inside], atom.samples[live & inside])
    rows = np.linalg.norm(images, axis=2) if images.size else np.zeros((0, int(inside.sum())))
    w_size = float(vnorm_rows(rows, p, inside).max()) if rows.shape[0] else 0.0

    size_ok = C_atom is None or a_size <= C_atom * (1.0 + SIZE_SLACK)
    report = AtomReport(support_ok=support_ok, max_moment=relative, moments_ok=moments_ok,
                        a_size=a_size, w_size=w_size, C_atom=C_atom, size_ok=size_ok)
    if not report.passed:
        logger.debug(f"Atom on {atom.cube.to_dict()} failed: support={support_ok}, "
                     f"moments={relative:.3g}, size={a_size:.4g}")
    return report


def coefficient_norm(entries: Iterable[Tuple[float, Cube]], r: float, p: ExponentProfile) -> float:
    """vnorm((sum_k (lambda_k / vnorm(1_Q_k))^r 1_Q_k)^(1/r), p)"""
    grid = p.grid
    inner = np.zeros(grid.size)
    for lam, cube in entries:
        if lam == 0.0:
            continue
        inner[cube.mask(grid)] += (lam / indicator_norm(p, cube)) ** r
    if not inner.any():
        return 0.0
    return vnorm(inner ** (1.0 / r), p)


# ============================================================================
# SYNTHETIC FAMILIES
# ============================================================================

def _random_cube(grid: Grid, rng: np.random.Generator, min_cells: int = 4,
                 room: float = 3.0) -> Cube:
    """Dyadic cube whose room-fold dilation stays in the box"""
    k_low = int(math.log2(grid.h * min_cells))
    k_high = int(math.floor(math.log2(2.0 * grid.box / room)))
    k = int(rng.integers(k_low, max(k_low, k_high) + 1))
    shift = lattice_shifts(grid.n)[int(rng.integers(0, 2 ** grid.n))]
    layer = [cube for cube in dyadic_cubes(grid, 2.0 ** k, shift) if cube.dilate(room).inside_box(grid)]
    if not layer:
        layer = dyadic_cubes(grid, 2.0 ** k_low, (0.0,) * grid.n)
    return layer[int(rng.integers(0, len(layer)))]


def bump_atom(grid: Grid, weight: MatrixWeight, p: ExponentProfile, cube: Cube, s: int,
              rng: np.random.Generator) -> Atom:
    """Smooth moment-free bump inside the cube, normalized to unit reducing-operator size"""
    inside = cube.mask(grid)
    y = (grid.points[inside] - np.asarray(cube.center)) / cube.edge
    r2 = np.sum((2.0 * y) ** 2, axis=1)
    b = np.where(r2 < 1.0, np.exp(-1.0 / np.maximum(1.0 - r2, 1e-300)), 0.0)
    P = monomials(grid.points[inside], max(s, 0), cube.center, cube.edge)
    quad = monomials(grid.points[inside], max(s, 0) + 1, cube.center, cube.edge)

    samples = np.zeros((grid.size, weight.m))
    for component in range(weight.m):
        a = quad @ rng.standard_normal(quad.shape[1])
        if s >= 0:
            G = (P * b[:, None]).T @ P
            a = a - P @ np.linalg.lstsq(G, (P * b[:, None]).T @ a, rcond=None)[0]
        samples[inside, component] = b * a

    atom = Atom(samples, cube, s)
    A = reducing_operator(weight, p, cube).matrix
    size = float(np.linalg.norm(samples[inside] @ A.T, axis=1).max()) * indicator_norm(p, cube)
    if size > 0:
        atom.samples = samples / size
    return atom


def synthetic_atom_family(grid: Grid, weight: MatrixWeight, p: ExponentProfile, s: int,
                          count: int, seed: int) -> List[Atom]:
    """Random atoms on random dyadic cubes with log-normal coefficients"""
    rng = np.random.Generator(np.random.Philox(seed))
    atoms = []
    for _ in range(count):
        cube = _random_cube(grid, rng)
        atom = bump_atom(grid, weight, p, cube, s, rng)
        atom.lam = float(np.exp(rng.normal(0.0, 1.0)))
        atoms.append(atom)
    return atoms


def superpose(grid: Grid, atoms: Sequence[Atom]) -> GridFunction:
    """sum lambda_k a_k"""
    m = atoms[0].m if atoms else 1
    total = np.zeros((grid.size, m))
    for atom in atoms:
        total += atom.scaled()
    return GridFunction.vector(grid, total)
