"""
Weight characteristics, reducing operators and the certificate that feeds the
maximal operators and the atomic decomposition.

Every supremum over cubes is a maximum over a declared catalog and is therefore
a lower bound for the quantity it estimates.
"""

import math
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.caching import array_fingerprint, get_operator_cache
from ..core.ellipsoid import direction_mesh, fit_symmetric_norm, john_bound
from ..core.errors import DegenerateNorm, EmptyCube, NoAlphaFound, NotInP
from ..core.grid import Cube, discrete_measure
from ..core.parallel import get_cube_processor
from ..core.vexp import ExponentProfile, conjugate, indicator_norm, vnorm_rows
from .models import ReverseHolderRow, WeightCertificate
from .weights import MatrixWeight, preset_exponents

logger = logging.getLogger(__name__)

ALPHA_LADDER = (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625)
RH_LADDER = (2.0, 1.5, 1.25, 1.1, 1.05)
DEFAULT_ALPHA_BUDGET = 100.0
RH_GROWTH = 0.10


@dataclass(frozen=True, eq=False)
class ReducingOperator:
    """Positive-definite A_Q with N_Q(z) <= |A_Q z| <= fit_ratio N_Q(z) on the mesh"""

    matrix: np.ndarray
    cube: Cube
    fit_ratio: float
    converged: bool = True

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.linalg.inv(self.matrix)
        return 0.5 * (inv + inv.T)

    @property
    def m(self) -> int:
        return int(self.matrix.shape[0])


def spectral_norms(M: np.ndarray) -> np.ndarray:
    """Operator 2-norms over the trailing two axes"""
    m = M.shape[-1]
    if m == 1:
        return np.abs(M[..., 0, 0])
    if m == 2:
        fro2 = np.sum(M * M, axis=(-2, -1))
        det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
        return np.sqrt(0.5 * (fro2 + disc))
    return np.linalg.norm(M, ord=2, axis=(-2, -1))


def _pair_norms(weight: MatrixWeight, x_mask: np.ndarray, y_mask: np.ndarray) -> np.ndarray:
    """K[x, y] = |W(x) W^-1(y)| for x in x_mask, y in y_mask"""
    Wx = weight.samples[x_mask]
    Winv_y = weight.inverse[y_mask]
    if weight.m == 1:
        return np.abs(Wx[:, 0, 0][:, None] * Winv_y[:, 0, 0][None, :])
    product = np.einsum("xij,yjk->xyik", Wx, Winv_y)
    return spectral_norms(product)


def _cube_mask(cube: Cube, weight: MatrixWeight) -> np.ndarray:
    mask = cube.mask(weight.grid)
    if not mask.any():
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict())
    return mask


# ============================================================================
# CHARACTERISTICS
# ============================================================================

def ap_characteristic(weight: MatrixWeight, p: ExponentProfile, catalog: Sequence[Cube]) -> float:
    """max_Q |Q|^-1 vnorm_x( vnorm_y(|W(x)W^-1(y)| 1_Q, p') 1_Q, p )"""
    if p.p_minus < 1.0:
        raise NotInP("A_p characteristic needs p >= 1", p_minus=p.p_minus)
    p_conj = conjugate(p)

    def per_cube(cube: Cube) -> float:
        mask = _cube_mask(cube, weight)
        K = _pair_norms(weight, mask, mask)
        inner = vnorm_rows(K, p_conj, mask)
        outer = vnorm_rows(inner[None, :], p, mask)[0]
        return outer / discrete_measure(cube, weight.grid)

    values = get_cube_processor().map_cubes(per_cube, catalog)
    return float(max(values))


def _log_average_ratio(weight: MatrixWeight, p: ExponentProfile,
                       norm_cube: Cube, average_cube: Cube) -> float:
    """exp of the y-average over average_cube of log(vnorm_x(K 1_norm_cube)/vnorm(1_norm_cube))"""
    x_mask = _cube_mask(norm_cube, weight)
    y_mask = _cube_mask(average_cube, weight)
    K = _pair_norms(weight, x_mask, y_mask)
    columns = vnorm_rows(K.T, p, x_mask)
    reference = indicator_norm(p, norm_cube)
    return float(np.exp(np.mean(np.log(columns / reference))))


def apinfty_characteristic(weight: MatrixWeight, p: ExponentProfile, catalog: Sequence[Cube]) -> float:
    """max_Q exp( avg_{y in Q} log( vnorm(|W(.)W^-1(y)| 1_Q, p) / vnorm(1_Q, p) ) )"""
    values = get_cube_processor().map_cubes(
        lambda cube: _log_average_ratio(weight, p, cube, cube), catalog)
    return float(max(values))


def weight_dimensions(weight: MatrixWeight, p: ExponentProfile, catalog: Sequence[Cube],
                      lambdas: Sequence[float] = (2.0, 4.0, 8.0),
                      apinfty: Optional[float] = None) -> Tuple[float, float]:
    """Lower and upper dimension estimates, clipped at 0"""
    if apinfty is None:
        apinfty = apinfty_characteristic(weight, p, catalog)
    scales = [float(lam) for lam in lambdas if lam > 1.0]

    def per_cube(cube: Cube) -> Tuple[float, float]:
        d1 = d2 = 0.0
        for lam in scales:
            big = cube.dilate(lam)
            lower = _log_average_ratio(weight, p, cube, big)
            upper = _log_average_ratio(weight, p, big, cube)
            d1 = max(d1, math.log(lower / apinfty) / math.log(lam))
            d2 = max(d2, math.log(upper / apinfty) / math.log(lam))
        return d1, d2

    values = get_cube_processor().map_cubes(per_cube, catalog)
    d1 = max((v[0] for v in values), default=0.0)
    d2 = max((v[1] for v in values), default=0.0)
    return max(0.0, d1), max(0.0, d2)


# ============================================================================
# REDUCING OPERATORS
# ============================================================================

def cube_norm_on_mesh(weight: MatrixWeight, p: ExponentProfile, cube: Cube,
                      directions: np.ndarray) -> np.ndarray:
    """N_Q(z) = vnorm(|W(.)z| 1_Q, p) / vnorm(1_Q, p) for every mesh direction z"""
    mask = _cube_mask(cube, weight)
    images = np.einsum("xij,dj->dxi", weight.samples[mask], directions)
    rows = np.linalg.norm(images, axis=2)
    return vnorm_rows(rows, p, mask) / indicator_norm(p, cube)


def reducing_operator(weight: MatrixWeight, p: ExponentProfile, cube: Cube,
                      density: int = 1) -> ReducingOperator:
    """Reducing operator of order p on Q, memoized by content"""
    cache = get_operator_cache()
    key = cache.make_key(
        "reducing", weight.fingerprint, array_fingerprint(p.values),
        array_fingerprint(p.inf_mask), cube.to_dict(), density
    )
    cached = cache.get(key)
    if cached is not None:
        return cached

    directions = direction_mesh(weight.m, density)
    norms = cube_norm_on_mesh(weight, p, cube, directions)
    try:
        fit = fit_symmetric_norm(directions, norms)
    except DegenerateNorm as e:
        raise DegenerateNorm(e.message, cube=cube.to_dict(), **e.details)
    operator = ReducingOperator(fit.matrix, cube, fit.fit_ratio, fit.converged)
    cache.set(key, operator)
    return operator


def reducing_operators(weight: MatrixWeight, p: ExponentProfile,
                       catalog: Sequence[Cube]) -> List[ReducingOperator]:
    return get_cube_processor().map_cubes(lambda cube: reducing_operator(weight, p, cube), catalog)


def reducing_matrix_norm_check(operator: ReducingOperator, weight: MatrixWeight,
                               p: ExponentProfile, cube: Cube, M: np.ndarray) -> float:
    """|A_Q M| / ( vnorm(|W(.)M| 1_Q, p) / vnorm(1_Q, p) )"""
    mask = _cube_mask(cube, weight)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    products = np.einsum("xij,jk->xik", weight.samples[mask], M)
    averaged = vnorm_rows(spectral_norms(products)[None, :], p, mask)[0] / indicator_norm(p, cube)
    return float(spectral_norms(operator.matrix @ M) / averaged)


def qp5_check(weight: MatrixWeight, p: ExponentProfile, pairs: Iterable[Tuple[Cube, Cube]],
              d1: float, d2: float) -> float:
    """max over (Q, R) of |A_Q A_R^-1| divided by the dimension envelope"""
    worst = 0.0
    for Q, R in pairs:
        A_Q = reducing_operator(weight, p, Q)
        A_R = reducing_operator(weight, p, R)
        lQ, lR = Q.edge, R.edge
        distance = float(np.linalg.norm(np.asarray(Q.center) - np.asarray(R.center)))
        envelope = max((lR / lQ) ** d1, (lQ / lR) ** d2) * (1.0 + distance / max(lQ, lR)) ** (d1 + d2)
        worst = max(worst, float(spectral_norms(A_Q.matrix @ A_R.inverse)) / envelope)
    return worst


# ============================================================================
# REVERSE HOLDER AND EXPONENT SELECTION
# ============================================================================

def _reverse_holder_ratio(weight: MatrixWeight, p: ExponentProfile, r: float,
                          catalog: Sequence[Cube], M_list: Sequence[np.ndarray]) -> float:
    p_r = p.scaled(r)

    def per_cube(cube: Cube) -> float:
        mask = _cube_mask(cube, weight)
        rows = np.stack([
            spectral_norms(np.einsum("xij,jk->xik", weight.samples[mask], M)) for M in M_list
        ])
        high = vnorm_rows(rows, p_r, mask) / indicator_norm(p_r, cube)
        low = vnorm_rows(rows, p, mask) / indicator_norm(p, cube)
        return float(np.max(high / low))

    return float(max(get_cube_processor().map_cubes(per_cube, catalog)))


def default_test_matrices(m: int, count: int = 4, seed: int = 0) -> List[np.ndarray]:
    rng = np.random.Generator(np.random.Philox(seed))
    matrices = [np.eye(m)]
    matrices.extend(rng.standard_normal((count - 1, m, m)))
    return matrices


def reverse_holder_check(weight: MatrixWeight, p: ExponentProfile, r: float,
                         catalog: Sequence[Cube], M_list: Optional[Sequence[np.ndarray]] = None,
                         refined: Optional[Tuple[MatrixWeight, ExponentProfile, Sequence[Cube]]] = None,
                         budget: float = math.inf) -> ReverseHolderRow:
    """Normalized reverse Holder ratio; passes when finite, within budget and refinement-stable"""
    if M_list is None:
        M_list = default_test_matrices(weight.m)
    ratio = _reverse_holder_ratio(weight, p, r, catalog, M_list)
    refined_ratio = None
    passed = math.isfinite(ratio) and ratio <= budget
    if refined is not None:
        fine_weight, fine_p, fine_catalog = refined
        refined_ratio = _reverse_holder_ratio(fine_weight, fine_p, r, fine_catalog, M_list)
        passed = passed and math.isfinite(refined_ratio) and refined_ratio <= ratio * (1.0 + RH_GROWTH)
    return ReverseHolderRow(r=r, max_ratio=ratio, refined_ratio=refined_ratio, passed=passed)


def estimate_reverse_holder_exponent(weight: MatrixWeight, p: ExponentProfile,
                                     catalog: Sequence[Cube], ladder: Sequence[float] = RH_LADDER,
                                     refined=None, budget: float = math.inf) -> Tuple[float, List[ReverseHolderRow]]:
    """Largest ladder exponent passing the reverse Holder check (1.0 when none does)"""
    rows = []
    best = 1.0
    for r in sorted(ladder, reverse=True):
        row = reverse_holder_check(weight, p, r, catalog, refined=refined, budget=budget)
        rows.append(row)
        if row.passed:
            best = r
            break
    return best, rows


def select_alpha_u(weight: MatrixWeight, p: ExponentProfile, catalog: Sequence[Cube],
                   budget: float = DEFAULT_ALPHA_BUDGET,
                   ladder: Sequence[float] = ALPHA_LADDER) -> Tuple[float, float]:
    """Largest alpha with sup_Q avg_Q |W^-1(x) A_Q|^(2 alpha) <= budget, and u below min(alpha, p_-)/2"""
    operators = reducing_operators(weight, p, catalog)
    spreads = []
    for cube, operator in zip(catalog, operators):
        mask = cube.mask(weight.grid)
        spreads.append(spectral_norms(np.einsum("xij,jk->xik", weight.inverse[mask], operator.matrix)))

    for alpha in ladder:
        worst = max(float(np.mean(s ** (2.0 * alpha))) for s in spreads)
        if worst <= budget:
            u = min(alpha / 2.0, p.p_minus / 2.0) * (1.0 - 1e-6)
            logger.debug(f"Selected alpha={alpha}, u={u:.6g} (spread {worst:.4g} <= {budget})")
            return alpha, u

    raise NoAlphaFound("no convexification exponent satisfies the budget",
                       smallest_alpha=ladder[-1], budget=budget)


# ============================================================================
# CERTIFICATE
# ============================================================================

def certify_weight(weight: MatrixWeight, p: ExponentProfile, catalog: Sequence[Cube],
                   lambdas: Sequence[float] = (2.0, 4.0, 8.0),
                   refined: Optional[Tuple[MatrixWeight, ExponentProfile, Sequence[Cube]]] = None,
                   alpha_budget: float = DEFAULT_ALPHA_BUDGET,
                   rh_ladder: Sequence[float] = RH_LADDER) -> WeightCertificate:
    """Estimate every characteristic and evaluate the certificate contracts"""
    n = weight.grid.n
    logger.info(f"🔄 Certifying weight {weight.preset} with exponent {p.preset} over {len(catalog)} cubes")

    ap_char = ap_characteristic(weight, p, catalog) if p.p_minus >= 1.0 else None
    apinfty = apinfty_characteristic(weight, p, catalog)
    d1, d2 = weight_dimensions(weight, p, catalog, lambdas, apinfty)
    r_W, rh_rows = estimate_reverse_holder_exponent(weight, p, catalog, rh_ladder, refined)
    alpha, u = select_alpha_u(weight, p, catalog, alpha_budget)
    fit_ratio = max(op.fit_ratio for op in reducing_operators(weight, p, catalog))

    guard = n / p.p_minus
    contracts = {
        "ap_char_at_least_one": ap_char is None or ap_char >= 1.0 - 1e-6,
        "apinfty_char_at_least_one": apinfty >= 1.0 - 1e-6,
        "d1_below_n_over_p_minus": d1 < guard,
        "r_W_above_one": r_W > 1.0,
        "alpha_in_unit_interval": 0.0 < alpha <= 1.0,
        "u_below_half_p_minus": 0.0 < u < p.p_minus / 2.0,
        "fit_within_john_bound": fit_ratio <= john_bound(weight.m),
        "class_guard": all(abs(a) < guard for a in preset_exponents(weight.preset, weight.params)),
    }

    certificate = WeightCertificate(
        weight_preset=weight.preset,
        exponent_preset=p.preset,
        n=n,
        m=weight.m,
        p_minus=p.p_minus,
        ap_char=ap_char,
        apinfty_char=apinfty,
        d1=d1,
        d2=d2,
        Delta=d1 + d2,
        r_W=r_W,
        alpha=alpha,
        u=u,
        max_fit_ratio=fit_ratio,
        catalog_size=len(catalog),
        reverse_holder=rh_rows,
        contracts=contracts
    )
    if certificate.passed:
        logger.info(f"✅ Weight certificate passed: apinfty={apinfty:.4f}, d1={d1:.3f}, d2={d2:.3f}")
    else:
        failed = [name for name, ok in contracts.items() if not ok]
        logger.warning(f"⚠️ Weight certificate contracts failed: {failed}")
    return certificate
