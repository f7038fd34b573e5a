"""
Convex-body level sets of the augmented grand maximal body.

The body M_N f is augmented by eps (1 + |x|)^-L times the unit ball so
every cube average is absorbing. For a cube Q the local level set is
{x in 3Q : |M_3Q^-1 body(x)| > C}, with C doubled from a Chebyshev seed
until the set is small relative to Q.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..convexbody.convexbody import CBGridFunction, augment_with_ball, cb_reducing_operator
from ..core.grid import Cube, GridFunction
from ..core.vexp import ExponentProfile, vnorm
from ..maximal.convex_maximal import MaximalKind, cb_maximal
from ..maximal.schwartz_catalog import TestFunctionCatalog
from ..weights.reducing import ReducingOperator
from ..weights.weights import MatrixWeight

logger = logging.getLogger(__name__)

MAX_DOUBLINGS = 200


@dataclass(frozen=True, eq=False)
class AugmentedBody:
    """Grand maximal body with its ball augmentation"""

    body: CBGridFunction
    epsilon: float
    L_dec: float
    hardy_value: float


@dataclass(frozen=True, eq=False)
class LevelSet:
    """E_Q with the threshold and reducing operator that produced it"""

    cube: Cube
    mask: np.ndarray
    threshold: float
    doublings: int
    operator: ReducingOperator
    u_moment: float

    @property
    def cells(self) -> int:
        return int(np.count_nonzero(self.mask))


def decay_exponent(d2: float, n: int, p: ExponentProfile) -> float:
    """L_dec = d2 + n/r + 1 with r = min(1, p_-)"""
    return d2 + n / p.r + 1.0


def choose_epsilon(weighted_body: np.ndarray, weight: MatrixWeight, p: ExponentProfile,
                   L_dec: float) -> float:
    """Largest dyadic eps with vnorm(eps |W| (1+|x|)^-L) <= vnorm(|W M_N f|)"""
    target = vnorm(weighted_body, p)
    if target == 0.0:
        return 0.0
    base = vnorm(weight.norms * (1.0 + weight.grid.radius) ** (-L_dec), p)
    return 2.0 ** math.floor(math.log2(target / base))


def augmented_body(f: GridFunction, weight: MatrixWeight, p: ExponentProfile, d2: float,
                   catalog: Optional[TestFunctionCatalog] = None,
                   scales: Optional[Sequence[float]] = None) -> AugmentedBody:
    """M_N f plus eps (1 + |x|)^-L_dec times the ball"""
    grid = f.grid
    body = cb_maximal(f, MaximalKind("grand_radial"), catalog, scales)
    weighted = body.transformed_norms(weight.samples)
    L_dec = decay_exponent(d2, grid.n, p)
    epsilon = choose_epsilon(weighted, weight, p, L_dec)
    hardy_value = vnorm(weighted, p)
    if epsilon == 0.0:
        return AugmentedBody(body, 0.0, L_dec, 0.0)
    radii = epsilon * (1.0 + grid.radius) ** (-L_dec)
    logger.debug(f"Augmented body: eps={epsilon:.4g}, L_dec={L_dec:.4g}")
    return AugmentedBody(augment_with_ball(body, radii), epsilon, L_dec, hardy_value)


def reduced_magnitudes(body: CBGridFunction, operator: ReducingOperator, mask: np.ndarray) -> np.ndarray:
    """|M^-1 body(x)| on the masked cells"""
    images = np.einsum("ij,cgj->cgi", operator.inverse, body.generators[mask])
    return np.linalg.norm(images, axis=2).max(axis=1)


def level_set(body: CBGridFunction, cube: Cube, u: float, level_fraction: float,
              threshold: Optional[float] = None,
              operator: Optional[ReducingOperator] = None) -> LevelSet:
    """E_Q = {x in 3Q : |M_3Q^-1 body(x)| > C}, doubling C until |E_Q| < level_fraction |Q|"""
    grid = body.grid
    triple = cube.dilate(3.0)
    if operator is None:
        operator = cb_reducing_operator(body, triple, u)
    inside = triple.mask(grid)
    values = reduced_magnitudes(body, operator, inside)
    u_moment = float(np.mean(values ** u) ** (1.0 / u))

    C = max(1.0, u_moment) if threshold is None else float(threshold)
    bound = level_fraction * cube.measure
    doublings = 0
    above = values > C
    while np.count_nonzero(above) * grid.cell_volume >= bound:
        if doublings >= MAX_DOUBLINGS:
            logger.warning(f"⚠️ Level-set threshold stuck at C={C:.4g} for cube {cube.to_dict()}")
            break
        C *= 2.0
        doublings += 1
        above = values > C

    mask = np.zeros(grid.size, dtype=bool)
    mask[np.flatnonzero(inside)[above]] = True
    return LevelSet(cube, mask, C, doublings, operator, u_moment)


def chebyshev_slack(level: LevelSet, body: CBGridFunction, u: float) -> float:
    """|E_Q| C^u divided by h^n sum_{3Q} |M^-1 body|^u; at most 1"""
    grid = body.grid
    inside = level.cube.dilate(3.0).mask(grid)
    values = reduced_magnitudes(body, level.operator, inside)
    moment = grid.cell_volume * float(np.sum(values ** u))
    if moment == 0.0:
        return 0.0
    return level.cells * grid.cell_volume * level.threshold ** u / moment
