"""
Finite stand-in for the unit ball of the Schwartz seminorm of order N.

Members are x^beta psi0 with psi0 the standard bump normalized to unit
integral. Every derivative of such a member has the closed form
psi0 * P(x) * q(x)^(-2k) with q = 1 - |x|^2, so seminorms are computed from
exact polynomial recursions evaluated on a fine reference grid.
"""

import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, signal

from ..core.errors import ConfigInvalid
from ..core.grid import Grid, monomial_exponents

logger = logging.getLogger(__name__)

REFERENCE_POINTS = {1: 8192, 2: 384}


# ============================================================================
# POLYNOMIAL ALGEBRA ON COEFFICIENT ARRAYS
# ============================================================================

def _unit(n: int, beta: Tuple[int, ...]) -> np.ndarray:
    coeffs = np.zeros(tuple(b + 1 for b in beta) if n > 1 else (beta[0] + 1,))
    coeffs[tuple(beta)] = 1.0
    return coeffs


def _q_poly(n: int) -> np.ndarray:
    """1 - |x|^2"""
    q = np.zeros((3,) * n)
    q[(0,) * n] = 1.0
    for axis in range(n):
        index = [0] * n
        index[axis] = 2
        q[tuple(index)] = -1.0
    return q


def _x_poly(n: int, axis: int) -> np.ndarray:
    x = np.zeros((2,) * n)
    index = [0] * n
    index[axis] = 1
    x[tuple(index)] = 1.0
    return x


def poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return signal.convolve(a, b, method="direct")


def poly_add(*terms: np.ndarray) -> np.ndarray:
    shape = tuple(max(t.shape[d] for t in terms) for d in range(terms[0].ndim))
    out = np.zeros(shape)
    for t in terms:
        out[tuple(slice(0, s) for s in t.shape)] += t
    return out


def poly_eval(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    if coeffs.ndim == 1:
        return npoly.polyval(points[:, 0], coeffs)
    return npoly.polyval2d(points[:, 0], points[:, 1], coeffs)


# ============================================================================
# BUMP AND DERIVATIVES
# ============================================================================

@lru_cache(maxsize=4)
def bump_integral(n: int) -> float:
    """Integral of exp(-1/(1-|x|^2)) over the unit ball"""
    if n == 1:
        value, _ = integrate.quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0,
                                  epsabs=1e-14, epsrel=1e-13)
        return value
    if n == 2:
        value, _ = integrate.quad(lambda r: r * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0,
                                  epsabs=1e-14, epsrel=1e-13)
        return 2.0 * math.pi * value
    raise ConfigInvalid("bump is defined for n = 1 or 2", n=n)


def _bump_factor(points: np.ndarray, k: int) -> np.ndarray:
    """exp(-1/q) q^(-2k) inside the unit ball, 0 outside"""
    q = 1.0 - np.sum(points * points, axis=1)
    out = np.zeros(points.shape[0])
    inside = q > 0
    qi = q[inside]
    out[inside] = np.exp(-1.0 / qi - 2.0 * k * np.log(qi))
    return out


def derivative_term(n: int, beta: Tuple[int, ...], alpha: Tuple[int, ...]) -> Tuple[np.ndarray, int]:
    """(P, k) with d^alpha (x^beta psi) = psi P q^(-2k), psi the unnormalized bump"""
    return _derivative_term(n, tuple(beta), tuple(alpha))


@lru_cache(maxsize=512)
def _derivative_term(n: int, beta: Tuple[int, ...], alpha: Tuple[int, ...]) -> Tuple[np.ndarray, int]:
    if sum(alpha) == 0:
        return _unit(n, beta), 0
    axis = next(i for i, a in enumerate(alpha) if a > 0)
    lower = list(alpha)
    lower[axis] -= 1
    P, k = _derivative_term(n, beta, tuple(lower))

    x_i = _x_poly(n, axis)
    q = _q_poly(n)
    dP = npoly.polyder(P, axis=axis) if P.shape[axis] > 1 else np.zeros_like(P)
    term_a = -2.0 * poly_mul(x_i, P)
    term_b = poly_mul(poly_mul(q, q), dP)
    term_c = 4.0 * k * poly_mul(poly_mul(x_i, q), P)
    return poly_add(term_a, term_b, term_c), k + 1


def reference_points(n: int) -> np.ndarray:
    """Midpoints of a fine grid of [-1, 1]^n restricted to the open unit ball"""
    count = REFERENCE_POINTS[n]
    axis = -1.0 + (np.arange(count) + 0.5) * (2.0 / count)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    points = np.stack([c.ravel() for c in mesh], axis=1)
    return points[np.sum(points * points, axis=1) < 1.0]


def multi_indices(n: int, order: int) -> List[Tuple[int, ...]]:
    return [tuple(beta) for beta in monomial_exponents(n, order)]


# ============================================================================
# CATALOG
# ============================================================================

@dataclass(frozen=True)
class SchwartzMember:
    """x^beta psi0 / scale, with psi0 of unit integral"""

    beta: Tuple[int, ...]
    scale: float
    seminorm: float

    @property
    def n(self) -> int:
        return len(self.beta)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        monomial = np.prod(points ** np.asarray(self.beta), axis=1)
        return monomial * _bump_factor(points, 0) / (bump_integral(self.n) * self.scale)

    def derivative(self, alpha: Tuple[int, ...], points: np.ndarray) -> np.ndarray:
        P, k = derivative_term(self.n, self.beta, alpha)
        values = poly_eval(P, points) * _bump_factor(points, k)
        return values / (bump_integral(self.n) * self.scale)

    def sampled_kernel(self, grid: Grid, t: float) -> np.ndarray:
        """t^-n phi(k h / t) on integer offsets |k| <= ceil(t/h), shaped for n-D convolution"""
        reach = int(math.ceil(t / grid.h))
        offsets = np.arange(-reach, reach + 1) * grid.h
        mesh = np.meshgrid(*([offsets] * grid.n), indexing="ij")
        points = np.stack([c.ravel() for c in mesh], axis=1) / t
        values = self.evaluate(points) / t ** grid.n
        return values.reshape((2 * reach + 1,) * grid.n)


def schwartz_seminorm(n: int, beta: Tuple[int, ...], N: int, points: np.ndarray = None) -> float:
    """sup (1+|x|)^(N+n+1) |d^alpha (x^beta psi0)| over |alpha| <= N+1 on the reference grid"""
    if points is None:
        points = reference_points(n)
    envelope = (1.0 + np.linalg.norm(points, axis=1)) ** (N + n + 1)
    member = SchwartzMember(tuple(beta), 1.0, math.nan)
    best = 0.0
    for alpha in multi_indices(n, N + 1):
        best = max(best, float(np.max(envelope * np.abs(member.derivative(alpha, points)))))
    return best


@dataclass
class TestFunctionCatalog:
    """Normalized members {x^beta psi0 : |beta| <= N} together with psi0 itself"""

    __test__ = False

    n: int
    N: int
    members: List[SchwartzMember] = field(default_factory=list)
    psi: SchwartzMember = None

    @property
    def size(self) -> int:
        return len(self.members)

    def integral_error(self) -> float:
        """|integral of psi0 - 1| on the reference grid"""
        points = reference_points(self.n)
        cell = (2.0 / REFERENCE_POINTS[self.n]) ** self.n
        return abs(float(np.sum(self.psi.evaluate(points))) * cell - 1.0)

    def max_seminorm(self) -> float:
        return max((m.seminorm for m in self.members), default=0.0)

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "N": self.N,
            "members": [{"beta": list(m.beta), "scale": m.scale} for m in self.members]
        }


@lru_cache(maxsize=16)
def build_catalog(n: int, N: int, max_degree: int = None) -> TestFunctionCatalog:
    """Catalog with every member rescaled to seminorm 1"""
    if N < 0:
        raise ConfigInvalid("grand maximal order must be nonnegative", N=N)
    degree = N if max_degree is None else min(N, max_degree)
    points = reference_points(n)
    members = []
    for beta in multi_indices(n, degree):
        seminorm = schwartz_seminorm(n, beta, N, points)
        members.append(SchwartzMember(beta, seminorm, 1.0))
    psi = SchwartzMember((0,) * n, 1.0, schwartz_seminorm(n, (0,) * n, N, points))
    logger.debug(f"Test function catalog: n={n}, N={N}, {len(members)} members")
    return TestFunctionCatalog(n, N, members, psi)


def required_order(n: int, alpha: float) -> int:
    """Smallest admissible grand maximal order ceil(n/alpha) + 1"""
    return int(math.ceil(n / alpha - 1e-12)) + 1


def scale_ladder(grid: Grid, max_scale: float = None) -> List[float]:
    """t = 2^j h for j = 0, 1, ... capped at the box half-width"""
    cap = grid.box if max_scale is None else min(max_scale, grid.box)
    scales = []
    t = grid.h
    while t <= cap * (1.0 + 1e-12):
        scales.append(t)
        t *= 2.0
    return scales
