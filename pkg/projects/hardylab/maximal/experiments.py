"""
Equivalence, embedding and boundedness experiments for the maximal family,
plus the seeded input suites they run on.
"""

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..convexbody.convexbody import CBGridFunction
from ..core.grid import Grid, GridFunction, monomials
from ..core.vexp import ExponentProfile, vnorm
from ..weights.weights import MatrixWeight
from .convex_maximal import MaximalKind, cb_maximal, hardy_norm
from .models import BoundednessReport, EquivalenceReport, EquivalenceRow
from .operators import require_exponent_split, variable_maximal
from .schwartz_catalog import SchwartzMember, TestFunctionCatalog, build_catalog

logger = logging.getLogger(__name__)

ORDERING_SLACK = 1e-12
SUITE_REACH = 0.5


# ============================================================================
# SUITES
# ============================================================================

def _bump(grid: Grid, center: np.ndarray, radius: float) -> np.ndarray:
    r2 = np.sum((grid.points - center) ** 2, axis=1) / radius ** 2
    out = np.zeros(grid.size)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def smooth_suite(grid: Grid, m: int, count: int, seed: int, s: int = -1) -> List[GridFunction]:
    """
    Compactly supported smooth vector functions whose discrete moments of
    order <= s vanish (no cancellation when s < 0).

    Each component is b(x)(a(x) - pi(x)) with b a bump, a a random quadratic
    and pi the b-weighted least-squares projection of a onto degree <= s.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    suite = []
    for _ in range(count):
        center = rng.uniform(-SUITE_REACH, SUITE_REACH, size=grid.n) * grid.box * 0.5
        radius = rng.uniform(0.25, 0.45) * grid.box
        b = _bump(grid, center, radius)
        basis = monomials(grid.points, 2, center, radius)
        values = np.zeros((grid.size, m))
        for component in range(m):
            a = basis @ rng.standard_normal(basis.shape[1])
            if s >= 0:
                P = monomials(grid.points, s, center, radius)
                G = (P * b[:, None]).T @ P
                coef = np.linalg.solve(G, (P * b[:, None]).T @ a)
                a = a - P @ coef
            values[:, component] = b * a
        suite.append(GridFunction.vector(grid, values))
    return suite


def random_body_functions(grid: Grid, m: int, count: int, seed: int,
                          generators: int = 2) -> List[CBGridFunction]:
    """Random compactly supported body functions with a few generators per sample"""
    rng = np.random.Generator(np.random.Philox(seed))
    out = []
    for _ in range(count):
        center = rng.uniform(-0.5, 0.5, size=grid.n) * grid.box
        radius = rng.uniform(0.1, 0.4) * grid.box
        support = np.linalg.norm(grid.points - center, axis=1) < radius
        gens = rng.standard_normal((grid.size, generators, m)) * support[:, None, None]
        out.append(CBGridFunction(grid, gens))
    return out


# ============================================================================
# EQUIVALENCE AND EMBEDDING
# ============================================================================

def _safe_ratio(top: float, bottom: float) -> float:
    if top == 0.0 and bottom == 0.0:
        return 1.0
    if bottom == 0.0:
        return float("inf")
    return top / bottom


def equivalence_report(suite: Sequence[GridFunction], weight: MatrixWeight, p: ExponentProfile,
                       catalog: TestFunctionCatalog, a: float, l: float,
                       scales: Optional[Sequence[float]] = None) -> EquivalenceReport:
    """Norms of radial, non-tangential, Peetre and grand images with their ratios"""
    kinds = {
        "radial": MaximalKind("radial"),
        "nontangential": MaximalKind("nontangential", a=a),
        "peetre": MaximalKind("peetre", l=l),
        "grand_radial": MaximalKind("grand_radial"),
        "grand_peetre": MaximalKind("grand_peetre", l=l),
    }
    rows = []
    brackets = {name: 1.0 for name in kinds if name != "radial"}
    for index, f in enumerate(suite):
        images = {}
        for name, kind in kinds.items():
            body = cb_maximal(f, kind, catalog, scales)
            images[name] = body.transformed_norms(weight.samples)
        norms = {name: vnorm(values, p) for name, values in images.items()}

        ordering = bool(
            np.all(images["radial"] <= images["nontangential"] * (1 + ORDERING_SLACK) + ORDERING_SLACK)
            and np.all(images["nontangential"] <= (1.0 + a) ** l * images["peetre"] * (1 + ORDERING_SLACK)
                       + ORDERING_SLACK)
        )
        ratios = {name: _safe_ratio(norms[name], norms["radial"]) for name in brackets}
        for name, ratio in ratios.items():
            brackets[name] = max(brackets[name], ratio, 1.0 / ratio if ratio > 0 else float("inf"))
        rows.append(EquivalenceRow(index=index, ordering_holds=ordering, ratios=ratios, **norms))
        logger.debug(f"Equivalence row {index}: {ratios}")

    return EquivalenceReport(rows=rows, brackets=brackets, a=a, l=l, N=catalog.N)


def embedding_pairing_check(f: GridFunction, phi: SchwartzMember, weight: MatrixWeight,
                            p: ExponentProfile, catalog: TestFunctionCatalog,
                            scales: Optional[Sequence[float]] = None) -> float:
    """|<f, phi>| / (seminorm(phi) * hardy_norm(f))"""
    values = f.samples[:, None] if f.codomain == "scalar" else f.samples
    pairing = f.grid.cell_volume * (phi.evaluate(f.grid.points)[:, None] * values).sum(axis=0)
    top = float(np.linalg.norm(pairing))
    if top == 0.0:
        return 0.0
    return top / (phi.seminorm * hardy_norm(f, weight, p, catalog=catalog, scales=scales))


def catalog_sensitivity(f: GridFunction, weight: MatrixWeight, p: ExponentProfile,
                        catalog: TestFunctionCatalog, scales: Optional[Sequence[float]] = None,
                        extra_orders: int = 1) -> float:
    """Relative change of hardy_norm when the catalog order grows by extra_orders"""
    base = hardy_norm(f, weight, p, catalog=catalog, scales=scales)
    enlarged = build_catalog(catalog.n, catalog.N + extra_orders)
    wider = hardy_norm(f, weight, p, catalog=enlarged, scales=scales)
    if base == 0.0:
        return 0.0 if wider == 0.0 else float("inf")
    return abs(wider / base - 1.0)


# ============================================================================
# BOUNDEDNESS
# ============================================================================

def operator_norm_estimate(op: Callable[[CBGridFunction], GridFunction],
                           inputs: Sequence[CBGridFunction], p: ExponentProfile) -> float:
    """max over inputs of vnorm(op(F)) / vnorm(|F|)"""
    worst = 0.0
    for F in inputs:
        bottom = vnorm(F.norms(), p)
        if bottom == 0.0:
            continue
        worst = max(worst, vnorm(op(F), p) / bottom)
    return worst


def boundedness_report(name: str, op_coarse: Callable, inputs_coarse: Sequence[CBGridFunction],
                       p_coarse: ExponentProfile, op_fine: Optional[Callable] = None,
                       inputs_fine: Optional[Sequence[CBGridFunction]] = None,
                       p_fine: Optional[ExponentProfile] = None) -> BoundednessReport:
    coarse = operator_norm_estimate(op_coarse, inputs_coarse, p_coarse)
    fine = None
    if op_fine is not None:
        fine = operator_norm_estimate(op_fine, inputs_fine, p_fine)
    return BoundednessReport(operator=name, max_ratio=coarse, refined_ratio=fine, inputs=len(inputs_coarse))


def variable_maximal_bound(suite: Sequence, p: ExponentProfile, q: ExponentProfile,
                           catalog=None) -> float:
    """max over the suite of vnorm(M_q f, p) / vnorm(f, p), requiring p = r q with r_- > 1"""
    require_exponent_split(p, q)
    worst = 0.0
    for f in suite:
        magnitude = f.magnitude() if isinstance(f, GridFunction) else np.abs(np.asarray(f))
        bottom = vnorm(magnitude, p)
        if bottom == 0.0:
            continue
        worst = max(worst, vnorm(variable_maximal(magnitude, q, catalog), p) / bottom)
    return worst
