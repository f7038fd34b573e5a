"""
Orthonormal polynomial bases under eta_tilde_L and the projections P_L.

Polynomials are kept in coefficient form over the scaled monomials
((x - c_L) / l(L))^beta, so a basis can be evaluated anywhere.
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.errors import IllConditioned
from ..core.grid import Cube, Grid, monomial_exponents, monomials

logger = logging.getLogger(__name__)

MAX_GRAM_CONDITION = 1e10
ORTHO_PASSES = 2


@dataclass(frozen=True, eq=False)
class PolyBasis:
    """e_i = sum_j coefficients[i, j] ((x - c)/l)^beta_j, orthonormal under eta_tilde"""

    cube: Cube
    s: int
    coefficients: np.ndarray
    cells: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    gram_condition: float
    cell_volume: float

    @property
    def size(self) -> int:
        return int(self.coefficients.shape[0])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """(points, M) matrix of basis values"""
        return monomials(points, self.s, self.cube.center, self.cube.edge) @ self.coefficients.T

    def orthonormality_error(self) -> float:
        gram = self.values.T @ (self.values * self.weights[:, None])
        return float(np.abs(gram - np.eye(self.size)).max())

    def derivative_constant(self, points: np.ndarray, order: int = 1) -> float:
        """max over |alpha| = order of l^|alpha| sup |d^alpha e_i| at the given points"""
        n = len(self.cube.center)
        y = (np.atleast_2d(points) - np.asarray(self.cube.center)) / self.cube.edge
        exps = np.asarray(monomial_exponents(n, self.s))
        worst = 0.0
        for alpha in monomial_exponents(n, order):
            if sum(alpha) != order:
                continue
            alpha = np.asarray(alpha)
            reduced = exps - alpha
            live = np.all(reduced >= 0, axis=1)
            factor = np.array([
                np.prod([math.perm(int(b), int(a)) for b, a in zip(beta, alpha)]) for beta in exps
            ], dtype=float)
            columns = np.zeros((y.shape[0], len(exps)))
            for j in np.flatnonzero(live):
                columns[:, j] = factor[j] * np.prod(y ** reduced[j], axis=1)
            worst = max(worst, float(np.abs(columns @ self.coefficients.T).max()))
        return worst


@dataclass(frozen=True, eq=False)
class ProjectedPolynomial:
    """P_L h in coefficient form, one column per component"""

    basis: PolyBasis
    coefficients: np.ndarray

    def on_cells(self) -> np.ndarray:
        return self.basis.values @ self.coefficients

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(points) @ self.coefficients


def _inner(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(a * b * w))


def poly_basis(grid: Grid, cube: Cube, cells: np.ndarray, eta_tilde: np.ndarray, s: int) -> PolyBasis:
    """Gram-Schmidt on scaled monomials under <f, g> = h^n sum f g eta_tilde, re-orthogonalized once"""
    weights = grid.cell_volume * np.asarray(eta_tilde, dtype=float)
    V = monomials(grid.points[cells], s, cube.center, cube.edge)
    M = V.shape[1]

    gram = V.T @ (V * weights[:, None])
    condition = float(np.linalg.cond(gram)) if M > 1 else 1.0
    if not np.isfinite(condition) or condition > MAX_GRAM_CONDITION:
        raise IllConditioned("moment order too large for the grid resolution of the cube",
                             cube=cube.to_dict(), s=s, condition=condition, cells=int(len(cells)))

    Q = V.copy()
    C = np.eye(M)
    for j in range(M):
        for _ in range(ORTHO_PASSES):
            for i in range(j):
                r = _inner(Q[:, j], Q[:, i], weights)
                Q[:, j] -= r * Q[:, i]
                C[:, j] -= r * C[:, i]
        norm = math.sqrt(max(_inner(Q[:, j], Q[:, j], weights), 0.0))
        if norm <= 1e-14:
            raise IllConditioned("monomials are dependent on the cube support", cube=cube.to_dict(), s=s)
        Q[:, j] /= norm
        C[:, j] /= norm

    return PolyBasis(cube, s, C.T, np.asarray(cells), weights, Q, condition, grid.cell_volume)


def _cell_samples(h: np.ndarray, basis: PolyBasis, on_cells: bool) -> np.ndarray:
    values = np.asarray(h, dtype=float)
    if not on_cells:
        values = values[basis.cells]
    return values[:, None] if values.ndim == 1 else values


def projection_PL(h: np.ndarray, basis: PolyBasis, on_cells: bool = False) -> ProjectedPolynomial:
    """P_L h = sum_i <h, e_i eta_tilde> e_i from full samples, or from samples on the basis cells"""
    values = _cell_samples(h, basis, on_cells)
    coefficients = basis.values.T @ (values * basis.weights[:, None])
    return ProjectedPolynomial(basis, coefficients)


def projection_residual(h: np.ndarray, projected: ProjectedPolynomial,
                        on_cells: bool = False) -> Tuple[float, float]:
    """max_i |<(h - P h) eta_tilde, e_i>| and the L1 mass of h on L*"""
    basis = projected.basis
    values = _cell_samples(h, basis, on_cells)
    residual = values - projected.on_cells()
    moments = basis.values.T @ (residual * basis.weights[:, None])
    mass = float(basis.cell_volume * np.linalg.norm(values, axis=1).sum())
    return float(np.abs(moments).max()), mass
