"""
Ellipsoid fitting of symmetric norms in R^m, m <= 3.

A norm N sampled on a direction mesh is replaced by the Euclidean norm
|A z| of a positive-definite A. The centered minimum-volume ellipsoid
enclosing the boundary points z/N(z) is found by coordinate ascent on the
dual weights (Khachiyan steps plus Todd-Yildirim away steps), then A is
rescaled so that N(z) <= |A z| on every mesh direction with equality at one.
"""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConfigInvalid, DegenerateNorm

logger = logging.getLogger(__name__)

PLANAR_DIRECTIONS = 64
SPHERE_DIRECTIONS = 242
FIT_TOLERANCE = 1e-7
FIT_MAX_ITERATIONS = 20000


@dataclass(frozen=True, eq=False)
class EllipsoidFit:
    """Fitted operator A with the achieved equivalence ratio on the mesh"""

    matrix: np.ndarray
    fit_ratio: float
    iterations: int
    converged: bool


@lru_cache(maxsize=16)
def _mesh(m: int, density: int) -> np.ndarray:
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        count = PLANAR_DIRECTIONS * density
        angles = np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if m == 3:
        count = SPHERE_DIRECTIONS * density
        k = np.arange(count) + 0.5
        polar = np.arccos(1.0 - 2.0 * k / count)
        azimuth = np.pi * (1.0 + math.sqrt(5.0)) * k
        return np.stack([
            np.cos(azimuth) * np.sin(polar),
            np.sin(azimuth) * np.sin(polar),
            np.cos(polar)
        ], axis=1)
    raise ConfigInvalid("value dimension m must be 1, 2 or 3", m=m)


def direction_mesh(m: int, density: int = 1) -> np.ndarray:
    """Unit probe directions (K, m); one representative per antipodal pair in 2D"""
    mesh = _mesh(m, density)
    mesh.setflags(write=False)
    return mesh


def _khachiyan_centered(points: np.ndarray, tol: float, max_iter: int):
    count, m = points.shape
    u = np.full(count, 1.0 / count)
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        X = (points.T * u) @ points
        X_inv = np.linalg.inv(X)
        M = np.einsum("ij,jk,ik->i", points, X_inv, points)

        j = int(np.argmax(M))
        support = np.flatnonzero(u > 0)
        k = int(support[np.argmin(M[support])])

        if M[j] <= m * (1.0 + tol):
            converged = True
            break

        if M[j] - m >= m - M[k] or u[k] >= 1.0 - 1e-15:
            beta = (M[j] - m) / (m * (M[j] - 1.0))
            u = (1.0 - beta) * u
            u[j] += beta
        else:
            floor = -u[k] / (1.0 - u[k])
            beta = (M[k] - m) / (m * (M[k] - 1.0)) if M[k] > 1.0 else floor
            beta = max(beta, floor)
            u = (1.0 - beta) * u
            u[k] += beta
            u[k] = max(u[k], 0.0)
    return u, iteration, converged


def fit_symmetric_norm(directions: np.ndarray, norms: np.ndarray,
                       tol: float = FIT_TOLERANCE,
                       max_iter: int = FIT_MAX_ITERATIONS) -> EllipsoidFit:
    """Fit A with N(z) <= |A z| <= sqrt(m)(1+eps) N(z) on the given directions"""
    directions = np.asarray(directions, dtype=float)
    norms = np.asarray(norms, dtype=float)
    bad = ~np.isfinite(norms) | (norms <= 0)
    if bad.any():
        index = int(np.flatnonzero(bad)[0])
        raise DegenerateNorm("norm vanishes or is not finite on a probe direction",
                             direction=directions[index].tolist(), value=float(norms[index]))

    m = directions.shape[1]
    if m == 1:
        value = float(np.max(norms / np.abs(directions[:, 0])))
        return EllipsoidFit(np.array([[value]]), 1.0, 0, True)

    points = directions / norms[:, None]
    u, iterations, converged = _khachiyan_centered(points, tol, max_iter)
    if not converged:
        logger.warning(f"Ellipsoid fit stopped after {iterations} iterations without reaching tol={tol}")

    X = (points.T * u) @ points
    G = np.linalg.inv(X) / m
    G = 0.5 * (G + G.T)
    eigval, eigvec = np.linalg.eigh(G)
    A = (eigvec * np.sqrt(np.maximum(eigval, 0.0))) @ eigvec.T
    A = 0.5 * (A + A.T)

    ratios = np.linalg.norm(directions @ A.T, axis=1) / norms
    A = A / ratios.min()
    A = 0.5 * (A + A.T)
    ratios = np.linalg.norm(directions @ A.T, axis=1) / norms
    logger.debug(f"Ellipsoid fit: m={m}, iterations={iterations}, ratio={ratios.max():.6f}")
    return EllipsoidFit(A, float(ratios.max()), iterations, converged)


def fit_norm(norm: Callable[[np.ndarray], np.ndarray], m: int, density: int = 1) -> EllipsoidFit:
    """Sample a vectorized norm on the direction mesh and fit it"""
    directions = direction_mesh(m, density)
    return fit_symmetric_norm(directions, norm(directions))


def equivalence_ratios(A: np.ndarray, directions: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """|A z| / N(z) per direction"""
    return np.linalg.norm(np.asarray(directions) @ np.asarray(A).T, axis=1) / np.asarray(norms)


def john_bound(m: int, eps_fit: float = 1e-3) -> float:
    return math.sqrt(m) * (1.0 + eps_fit)
