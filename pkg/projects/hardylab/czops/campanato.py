"""
Matrix-weighted variable Campanato norm and the Hardy-Campanato pairing check.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.errors import NotInP
from ..core.grid import Cube, GridFunction, monomials, pair
from ..core.vexp import ExponentProfile, indicator_norm
from ..maximal.convex_maximal import hardy_norm
from ..maximal.schwartz_catalog import TestFunctionCatalog
from ..weights.reducing import reducing_operator
from ..weights.weights import MatrixWeight
from .models import DualityReport, DualityRow

logger = logging.getLogger(__name__)

CANCELLATION_TOL = 1e-12


def _vectors(g: GridFunction) -> np.ndarray:
    return g.samples[:, None] if g.codomain == "scalar" else g.samples


def natural_projection(values: np.ndarray, points: np.ndarray, cube: Cube, s: int) -> np.ndarray:
    """Least-squares fit in L2(Q) by polynomials of degree <= s, evaluated on the same points"""
    if s < 0:
        return np.zeros_like(values)
    basis = monomials(points, s, cube.center, cube.edge)
    coefficients, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return basis @ coefficients


def cube_oscillation(g: GridFunction, weight: MatrixWeight, p: ExponentProfile, cube: Cube,
                     q: float, s: int) -> float:
    """(|Q| / vnorm(1_Q)) (avg_Q |A_Q^-1 (g - Pi_Q g)|^q)^(1/q)"""
    grid = g.grid
    inside = cube.mask(grid)
    if not inside.any():
        return 0.0
    values = _vectors(g)[inside]
    residual = values - natural_projection(values, grid.points[inside], cube, s)
    inverse = reducing_operator(weight, p, cube).inverse
    magnitudes = np.linalg.norm(residual @ inverse.T, axis=1)
    average = float(np.mean(magnitudes ** q)) ** (1.0 / q)
    return cube.measure / indicator_norm(p, cube) * average


def campanato_norm(g: GridFunction, weight: MatrixWeight, p: ExponentProfile, q: float, s: int,
                   catalog: Sequence[Cube]) -> float:
    """max over the catalog of the weighted mean oscillation after removing Pi_Q^s g"""
    worst = 0.0
    for cube in catalog:
        worst = max(worst, cube_oscillation(g, weight, p, cube, q, s))
    return worst


def _pairing(f: GridFunction, g: GridFunction) -> float:
    return pair(GridFunction.vector(f.grid, _vectors(f)), GridFunction.vector(g.grid, _vectors(g)))


def duality_pairing_check(f_suite: Sequence[GridFunction], g_suite: Sequence[GridFunction],
                          weight: MatrixWeight, p: ExponentProfile, q: float, s: int,
                          catalog: Sequence[Cube],
                          maximal_catalog: Optional[TestFunctionCatalog] = None,
                          scales: Optional[Sequence[float]] = None) -> DualityReport:
    """max over pairs of |<f, g>| / (campanato(g) hardy(f)); needs p_+ <= 1"""
    if p.p_plus > 1.0:
        raise NotInP("Campanato duality needs p_+ <= 1", p_plus=p.p_plus)
    logger.info(f"🔄 Duality check over {len(f_suite)} x {len(g_suite)} pairs")

    hardy = [hardy_norm(f, weight, p, catalog=maximal_catalog, scales=scales) if np.any(f.samples) else 0.0
             for f in f_suite]
    campanato = [campanato_norm(g, weight, p, q, s, catalog) for g in g_suite]
    rows = []
    for i, f in enumerate(f_suite):
        for j, g in enumerate(g_suite):
            value = _pairing(f, g)
            bottom = hardy[i] * campanato[j]
            cancelled = False
            if hardy[i] == 0.0:
                ratio = 0.0
            elif campanato[j] <= CANCELLATION_TOL * max(1.0, float(np.abs(_vectors(g)).max())):
                cancelled = abs(value) <= CANCELLATION_TOL * max(1.0, hardy[i])
                ratio = 0.0 if cancelled else float("inf")
            else:
                ratio = abs(value) / bottom
            rows.append(DualityRow(f_index=i, g_index=j, pairing=value, campanato=campanato[j],
                                   hardy=hardy[i], ratio=ratio, cancelled=cancelled))

    report = DualityReport(s=s, q=q, rows=rows)
    logger.info(f"✅ Duality check: max ratio {report.max_ratio:.4g}")
    return report


def polynomial_suite(grid, m: int, s: int, count: int, seed: int) -> Tuple[GridFunction, ...]:
    """Random vector polynomials of degree <= s, annihilated by the Campanato norm"""
    rng = np.random.Generator(np.random.Philox(seed))
    basis = monomials(grid.points, max(s, 0), scale=grid.box)
    return tuple(GridFunction.vector(grid, basis @ rng.standard_normal((basis.shape[1], m)))
                 for _ in range(count))
