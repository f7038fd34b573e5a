"""
Variable exponents and variable Lebesgue norms.

The Luxemburg norm is computed by a vectorized bisection in log space over
many rows at once; characteristic computations evaluate thousands of nested
norms, so every hot path goes through vnorm_rows.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Any, Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ConfigInvalid, EmptyCube, NotInP
from .grid import Cube, Grid, GridFunction, discrete_measure

logger = logging.getLogger(__name__)

NORM_RTOL = 1e-12
MAX_BRACKET_STEPS = 2000
ROW_CHUNK_ELEMENTS = 1 << 22
LH_MAX_POINTS = 4096

ArrayLike = Union[GridFunction, np.ndarray]


@dataclass(eq=False)
class ExponentProfile:
    """A variable exponent sampled on a grid; infinite values are flagged, never stored"""

    grid: Grid
    values: np.ndarray
    inf_mask: np.ndarray
    p_inf: Optional[float] = None
    preset: str = "custom"
    lh_declared: bool = True
    C0: Optional[float] = None
    Cinf: Optional[float] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).copy()
        self.inf_mask = np.asarray(self.inf_mask, dtype=bool)
        if self.values.shape != (self.grid.size,) or self.inf_mask.shape != (self.grid.size,):
            raise ConfigInvalid("exponent samples do not match the grid", preset=self.preset)
        self.values[self.inf_mask] = 1.0
        finite = self.values[~self.inf_mask]
        if finite.size and (not np.all(np.isfinite(finite)) or finite.min() <= 0):
            raise NotInP("exponent must be positive and finite off the infinity set",
                         preset=self.preset)

    @classmethod
    def constant(cls, grid: Grid, p: float, preset: str = "constant") -> "ExponentProfile":
        if math.isinf(p):
            return cls(grid, np.ones(grid.size), np.ones(grid.size, dtype=bool), math.inf, preset)
        return cls(grid, np.full(grid.size, float(p)), np.zeros(grid.size, dtype=bool), float(p), preset)

    @property
    def has_inf(self) -> bool:
        return bool(self.inf_mask.any())

    @property
    def finite_values(self) -> np.ndarray:
        return self.values[~self.inf_mask]

    @property
    def p_minus(self) -> float:
        if self.inf_mask.all():
            return math.inf
        return float(self.finite_values.min())

    @property
    def p_plus(self) -> float:
        if self.has_inf:
            return math.inf
        return float(self.values.max())

    @property
    def r(self) -> float:
        return min(1.0, self.p_minus)

    def reciprocal(self) -> np.ndarray:
        """1/p(x) with 1/inf = 0"""
        out = 1.0 / self.values
        out[self.inf_mask] = 0.0
        return out

    def scaled(self, factor: float) -> "ExponentProfile":
        """The exponent factor*p(.)"""
        p_inf = None if self.p_inf is None else self.p_inf * factor
        return replace(self, values=self.values * factor, p_inf=p_inf,
                       preset=f"{self.preset}*{factor:g}", C0=None, Cinf=None)

    def with_constants(self, C0: float, Cinf: float, p_inf: float) -> "ExponentProfile":
        return replace(self, C0=C0, Cinf=Cinf, p_inf=p_inf)

    def sample(self, index: int) -> float:
        return math.inf if self.inf_mask[index] else float(self.values[index])


class LHConstants(NamedTuple):
    C0: float
    Cinf: float
    p_inf: float


# ============================================================================
# PRESETS
# ============================================================================

def exponent_from_preset(grid: Grid, preset: str, params: Optional[dict] = None) -> ExponentProfile:
    """Realize one of the reproducible exponent families on a grid"""
    params = dict(params or {})
    x = grid.points
    radius = grid.radius

    if preset == "constant":
        p = params.get("p", 2.0)
        p = math.inf if isinstance(p, str) and p.lower() in ("inf", "infinity") else float(p)
        return ExponentProfile.constant(grid, p)

    if preset == "log_decay":
        p_inf = float(params.get("p_inf", 2.0))
        c = float(params.get("c", 1.0))
        values = p_inf + c / np.log(math.e + radius)
        return ExponentProfile(grid, values, np.zeros(grid.size, dtype=bool), p_inf, preset)

    if preset == "two_level":
        p_a = float(params.get("p_a", 1.0))
        p_b = float(params.get("p_b", 2.0))
        split = float(params.get("split", 0.0))
        values = np.where(x[:, 0] < split, p_a, p_b)
        return ExponentProfile(grid, values, np.zeros(grid.size, dtype=bool), None, preset,
                               lh_declared=False)

    if preset == "smooth_step":
        p_a = float(params.get("p_a", 1.0))
        p_b = float(params.get("p_b", 2.0))
        width = float(params.get("width", 0.5))
        if width <= 0:
            raise ConfigInvalid("smooth_step width must be positive", width=width)
        values = p_a + (p_b - p_a) * np.tanh(radius / width) ** 2
        return ExponentProfile(grid, values, np.zeros(grid.size, dtype=bool), p_b, preset)

    raise ConfigInvalid("unknown exponent preset", preset=preset)


# ============================================================================
# MODULAR AND NORM
# ============================================================================

def _magnitudes(f: ArrayLike) -> np.ndarray:
    if isinstance(f, GridFunction):
        return f.magnitude()
    return np.abs(np.asarray(f, dtype=float))


def _modular_rows(F: np.ndarray, values: np.ndarray, inf_mask: np.ndarray,
                  cell_volume: float) -> np.ndarray:
    """Row-wise modular of nonnegative rows F restricted to the given cells"""
    finite = ~inf_mask
    with np.errstate(over="ignore", under="ignore"):
        total = cell_volume * np.sum(F[:, finite] ** values[finite], axis=1)
    if inf_mask.any():
        total = total + np.max(F[:, inf_mask], axis=1)
    return total


def modular(f: ArrayLike, p: ExponentProfile) -> float:
    """rho(f) = h^n sum_{p<inf} |f|^p + max_{p=inf} |f|"""
    F = _magnitudes(f)[None, :]
    return float(_modular_rows(F, p.values, p.inf_mask, p.grid.cell_volume)[0])


def _vnorm_chunk(F: np.ndarray, values: np.ndarray, inf_mask: np.ndarray,
                 cell_volume: float, start: float) -> np.ndarray:
    sup = F.max(axis=1)
    out = np.zeros(F.shape[0])
    live = sup > 0
    if not live.any():
        return out
    G = F[live] / sup[live, None]
    rows = G.shape[0]

    def rho(lam: np.ndarray) -> np.ndarray:
        return _modular_rows(G / lam[:, None], values, inf_mask, cell_volume)

    hi = np.full(rows, start)
    for _ in range(MAX_BRACKET_STEPS):
        bad = rho(hi) > 1.0
        if not bad.any():
            break
        hi[bad] *= 2.0

    lo = hi / 2.0
    for _ in range(MAX_BRACKET_STEPS):
        ok = rho(lo) <= 1.0
        if not ok.any():
            break
        hi[ok] = lo[ok]
        lo[ok] /= 2.0

    for _ in range(200):
        if np.all(hi / lo - 1.0 <= NORM_RTOL):
            break
        mid = np.sqrt(lo * hi)
        ok = rho(mid) <= 1.0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)

    out[live] = hi * sup[live]
    return out


def vnorm_rows(F: np.ndarray, p: ExponentProfile, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Luxemburg norms of many rows at once.

    Rows span the whole grid, or only the cells selected by `mask` when one is
    given (functions vanishing off the mask).
    """
    F = np.abs(np.atleast_2d(np.asarray(F, dtype=float)))
    if mask is None:
        values, inf_mask = p.values, p.inf_mask
    else:
        mask = np.asarray(mask, dtype=bool)
        values, inf_mask = p.values[mask], p.inf_mask[mask]
    if F.shape[1] != values.size:
        raise ConfigInvalid("row length does not match the exponent cells",
                            row_length=F.shape[1], cells=values.size)
    start = p.grid.volume + 1.0
    chunk = max(1, ROW_CHUNK_ELEMENTS // max(1, F.shape[1]))
    parts = [_vnorm_chunk(F[i:i + chunk], values, inf_mask, p.grid.cell_volume, start)
             for i in range(0, F.shape[0], chunk)]
    return np.concatenate(parts) if parts else np.zeros(0)


def vnorm(f: ArrayLike, p: ExponentProfile) -> float:
    """Luxemburg norm inf{lambda : rho(f/lambda) <= 1}"""
    return float(vnorm_rows(_magnitudes(f)[None, :], p)[0])


def indicator_norm(p: ExponentProfile, cube: Cube) -> float:
    """vnorm(1_Q, p)"""
    mask = cube.mask(p.grid)
    if not mask.any():
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict())
    return float(vnorm_rows(np.ones((1, int(mask.sum()))), p, mask)[0])


def indicator_norms(p: ExponentProfile, masks: np.ndarray) -> np.ndarray:
    return vnorm_rows(np.asarray(masks, dtype=float), p)


def p_harmonic(p: ExponentProfile, cube: Cube) -> float:
    """p_Q = (average of 1/p over Q)^-1, infinite when p = inf on Q"""
    mask = cube.mask(p.grid)
    if not mask.any():
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict())
    mean_reciprocal = float(np.mean(p.reciprocal()[mask]))
    return math.inf if mean_reciprocal == 0.0 else 1.0 / mean_reciprocal


def conjugate(p: ExponentProfile) -> ExponentProfile:
    """Pointwise conjugate exponent with 1' = inf and inf' = 1"""
    if p.p_minus < 1.0:
        raise NotInP("conjugate exponent needs p >= 1", p_minus=p.p_minus, preset=p.preset)
    values = p.values.copy()
    new_inf = (~p.inf_mask) & (values <= 1.0)
    finite = (~p.inf_mask) & ~new_inf
    values[finite] = values[finite] / (values[finite] - 1.0)
    values[p.inf_mask] = 1.0
    p_inf = None
    if p.p_inf is not None:
        p_inf = math.inf if p.p_inf <= 1.0 else (1.0 if math.isinf(p.p_inf) else p.p_inf / (p.p_inf - 1.0))
    return ExponentProfile(p.grid, values, new_inf, p_inf, f"{p.preset}'", p.lh_declared)


# ============================================================================
# LOG-HOLDER CERTIFICATION
# ============================================================================

def certify_lh(p: ExponentProfile) -> LHConstants:
    """Smallest log-Holder constants consistent with all sampled pairs"""
    grid = p.grid
    finite = ~p.inf_mask
    if not finite.any():
        return LHConstants(0.0, 0.0, math.inf)

    p_inf = p.p_inf
    if p_inf is None:
        ring = grid.boundary_mask & finite
        p_inf = float(np.mean(p.values[ring])) if ring.any() else float(np.mean(p.values[finite]))

    idx = np.flatnonzero(finite)
    if idx.size > LH_MAX_POINTS:
        stride = int(math.ceil(idx.size / LH_MAX_POINTS))
        idx = idx[::stride]

    C0 = 0.0
    if idx.size > 1:
        dist = pdist(grid.points[idx])
        diff = pdist(p.values[idx][:, None], "cityblock")
        close = (dist < 0.5) & (dist > 0)
        if close.any():
            C0 = float(np.max(diff[close] * -np.log(dist[close])))

    if math.isinf(p_inf):
        Cinf = math.inf
    else:
        deviation = np.abs(p.values[finite] - p_inf) * np.log(math.e + grid.radius[finite])
        Cinf = float(deviation.max())

    logger.debug(f"LH constants for {p.preset}: C0={C0:.6g}, Cinf={Cinf:.6g}, p_inf={p_inf}")
    return LHConstants(C0, Cinf, p_inf)


def lh_report_row(profile: ExponentProfile, constants: LHConstants) -> dict:
    return {
        "preset": profile.preset,
        "p_minus": profile.p_minus,
        "p_plus": profile.p_plus,
        "C0": constants.C0,
        "Cinf": constants.Cinf
    }


# ============================================================================
# NORM IDENTITIES AS CHECKS
# ============================================================================

def estq_ratio(p: ExponentProfile, cube: Cube) -> float:
    """vnorm(1_Q) / |Q|^(1/p_Q)"""
    p_q = p_harmonic(p, cube)
    measure = discrete_measure(cube, p.grid)
    reference = 1.0 if math.isinf(p_q) else measure ** (1.0 / p_q)
    return indicator_norm(p, cube) / reference


def estq_bracket(p: ExponentProfile, catalog: Sequence[Cube]) -> float:
    """Smallest B with every catalog ratio in [1/B, B]"""
    bracket = 1.0
    for cube in catalog:
        ratio = estq_ratio(p, cube)
        bracket = max(bracket, ratio, 1.0 / ratio)
    return bracket


def holder_ratio(f: ArrayLike, g: ArrayLike, p: ExponentProfile) -> float:
    """h^n sum |fg| / (vnorm(f, p) vnorm(g, p'))"""
    a = _magnitudes(f)
    b = _magnitudes(g)
    denom = vnorm(a, p) * vnorm(b, conjugate(p))
    if denom == 0.0:
        return 0.0
    return float(p.grid.cell_volume * np.sum(a * b) / denom)


def convexification_gap(f: ArrayLike, p: ExponentProfile, r: float) -> float:
    """Relative gap between vnorm(f, r p) and vnorm(|f|^r, p)^(1/r)"""
    a = _magnitudes(f)
    direct = vnorm(a, p.scaled(r))
    if direct == 0.0:
        return 0.0
    convexified = vnorm(a ** r, p) ** (1.0 / r)
    return abs(direct - convexified) / direct


def extremal_dual_function(f: ArrayLike, p: ExponentProfile) -> np.ndarray:
    """(|f|/||f||)^(p-1), the near-extremal element for the duality norm"""
    a = _magnitudes(f)
    norm = vnorm(a, p)
    if norm == 0.0:
        return np.zeros_like(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (a / norm) ** np.maximum(p.values - 1.0, 0.0)
    g[a == 0] = 0.0
    g[p.inf_mask] = 0.0
    return g


def duality_family(f: ArrayLike, p: ExponentProfile, count: int, seed: int) -> List[np.ndarray]:
    """Extremal dual element plus random nonnegative competitors"""
    rng = np.random.Generator(np.random.Philox(seed))
    family = [extremal_dual_function(f, p)]
    for _ in range(count):
        family.append(rng.random(p.grid.size) * (rng.random(p.grid.size) < 0.5))
    return family


def duality_norm(f: ArrayLike, p: ExponentProfile, g_family: Iterable[np.ndarray]) -> float:
    """sup over the family, normalized to vnorm(g, p') = 1, of h^n sum |fg|"""
    a = _magnitudes(f)
    p_conj = conjugate(p)
    best = 0.0
    for g in g_family:
        g = np.abs(np.asarray(g, dtype=float))
        norm = vnorm(g, p_conj)
        if norm == 0.0:
            continue
        best = max(best, float(p.grid.cell_volume * np.sum(a * g) / norm))
    return best
