"""
Weighted vector-valued inequalities that stand in for Fefferman-Stein
bounds, measured on random cube families.

Families are drawn in continuous terms (cube scale and position, constant
vectors, oscillation frequencies), so the same family can be replayed on
a refined grid.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.grid import Cube, Grid, dyadic_cubes, lattice_shifts
from ..core.vexp import ExponentProfile, vnorm
from ..maximal.operators import hl_maximal
from ..weights.models import WeightCertificate
from ..weights.reducing import reducing_operator, spectral_norms
from ..weights.weights import MatrixWeight
from .models import FSCheckReport, FSCheckRow

logger = logging.getLogger(__name__)

MAX_FAMILY = 5
OPERATOR_Q = 2.0


@dataclass(frozen=True)
class FamilyMember:
    """lambda 1_Q with a bounded oscillating vector function on Q"""

    lam: float
    cube: Cube
    vector: Tuple[float, ...]
    frequency: Tuple[float, ...]

    def samples(self, grid: Grid) -> np.ndarray:
        inside = self.cube.mask(grid)
        phase = (grid.points[inside] - np.asarray(self.cube.center)) / self.cube.edge
        wave = np.cos(2.0 * math.pi * phase @ np.asarray(self.frequency))
        out = np.zeros((grid.size, len(self.vector)))
        out[inside] = wave[:, None] * np.asarray(self.vector)[None, :]
        return out


def random_family(grid: Grid, m: int, rng: np.random.Generator) -> List[FamilyMember]:
    """One to five members on dyadic cubes of at least four cells per axis"""
    members = []
    k_low = int(math.log2(4 * grid.h))
    k_high = max(k_low, int(math.floor(math.log2(grid.box / 2.0))))
    for _ in range(int(rng.integers(1, MAX_FAMILY + 1))):
        k = int(rng.integers(k_low, k_high + 1))
        shift = lattice_shifts(grid.n)[int(rng.integers(0, 2 ** grid.n))]
        layer = dyadic_cubes(grid, 2.0 ** k, shift)
        cube = layer[int(rng.integers(0, len(layer)))]
        members.append(FamilyMember(
            lam=float(np.exp(rng.normal())),
            cube=cube,
            vector=tuple(float(v) for v in rng.uniform(-1.0, 1.0, size=m)),
            frequency=tuple(float(v) for v in rng.integers(0, 3, size=grid.n))
        ))
    return members


def _weighted_spread(weight: MatrixWeight, p: ExponentProfile, cube: Cube) -> np.ndarray:
    """x -> |W(x) A_Q^-1|"""
    inverse = reducing_operator(weight, p, cube).inverse
    return spectral_norms(np.einsum("xij,jk->xik", weight.samples, inverse))


def decay_sides(family: Sequence[FamilyMember], weight: MatrixWeight, p: ExponentProfile,
                L: float, r: float) -> Tuple[float, float]:
    """vnorm(sum lambda |W A_Q^-1| (l/(l+|x-c|))^L) against vnorm((sum lambda^r 1_Q)^(1/r))"""
    grid = weight.grid
    left = np.zeros(grid.size)
    right = np.zeros(grid.size)
    for member in family:
        if member.lam == 0.0:
            continue
        l = member.cube.edge
        distance = np.linalg.norm(grid.points - np.asarray(member.cube.center), axis=1)
        left += member.lam * _weighted_spread(weight, p, member.cube) * (l / (l + distance)) ** L
        right[member.cube.mask(grid)] += member.lam ** r
    return vnorm(left, p), vnorm(right ** (1.0 / r), p)


def operator_sides(family: Sequence[FamilyMember], weight: MatrixWeight, p: ExponentProfile,
                   r: float, q: float = OPERATOR_Q) -> Tuple[float, float]:
    """vnorm(sum lambda |W A_Q^-1| |T a| 1_(2 sqrt(n) Q)) against the L^q-averaged coefficient functional"""
    grid = weight.grid
    left = np.zeros(grid.size)
    right = np.zeros(grid.size)
    for member in family:
        if member.lam == 0.0:
            continue
        samples = member.samples(grid)
        image = hl_maximal(np.linalg.norm(samples, axis=1), grid=grid).samples
        near = member.cube.dilate(2.0 * math.sqrt(grid.n)).mask(grid)
        left += member.lam * _weighted_spread(weight, p, member.cube) * image * near
        lq = (grid.cell_volume * np.sum(np.linalg.norm(samples, axis=1) ** q)) ** (1.0 / q)
        coefficient = member.cube.measure ** (-1.0 / q) * member.lam * lq
        right[member.cube.mask(grid)] += coefficient ** r
    return vnorm(left, p), vnorm(right ** (1.0 / r), p)


def _ratio(top: float, bottom: float) -> float:
    if top == 0.0 and bottom == 0.0:
        return 0.0
    if bottom == 0.0:
        return float("inf")
    return top / bottom


def _rows(families: Sequence[Sequence[FamilyMember]], weight: MatrixWeight, p: ExponentProfile,
          L: float, r: float) -> List[FSCheckRow]:
    rows = []
    for index, family in enumerate(families):
        decay = _ratio(*decay_sides(family, weight, p, L, r))
        operator = _ratio(*operator_sides(family, weight, p, r))
        rows.append(FSCheckRow(family=index, decay_ratio=decay, operator_ratio=operator))
    return rows


def fs_substitute_checks(weight: MatrixWeight, p: ExponentProfile, certificate: WeightCertificate,
                         count: int = 20, seed: int = 0,
                         refined: Optional[Tuple[MatrixWeight, ExponentProfile]] = None,
                         families: Optional[Sequence[Sequence[FamilyMember]]] = None) -> FSCheckReport:
    """LHS/RHS ratios of both inequalities over random families, with L = d2 + n/r + 1"""
    grid = weight.grid
    r = p.r
    L = certificate.d2 + grid.n / r + 1.0
    if families is None:
        rng = np.random.Generator(np.random.Philox(seed))
        families = [random_family(grid, weight.m, rng) for _ in range(count)]

    logger.info(f"🔄 Vector-valued inequality checks over {len(families)} families (L={L:.3g})")
    report = FSCheckReport(L=L, r=r, rows=_rows(families, weight, p, L, r))
    if refined is not None:
        fine_weight, fine_p = refined
        report.refined_rows = _rows(families, fine_weight, fine_p, L, r)
    logger.info(f"✅ Decay ratio {report.max_decay_ratio:.4g}, operator ratio {report.max_operator_ratio:.4g}")
    return report
