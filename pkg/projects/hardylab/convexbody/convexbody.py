"""
Symmetric convex bodies given by finite generator sets, body-valued grid
functions and the u-th convex-body reducing operator.

A body is conv{lambda g : g a generator, |lambda| <= 1}. Its radius and its
support functional are exact maxima over the generators, so hull unions and
linear images stay exact.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..core.ellipsoid import direction_mesh, fit_symmetric_norm
from ..core.errors import EmptyCube, GridMismatch, NotAbsorbing
from ..core.grid import Cube, Grid
from ..weights.reducing import ReducingOperator

logger = logging.getLogger(__name__)

GENERATOR_CAP = 256
PRUNE_TOL = 1e-12


@dataclass(eq=False)
class ConvexBody:
    """Symmetric body spanned by the rows of `generators` (k, m)"""

    generators: np.ndarray

    def __post_init__(self):
        self.generators = np.atleast_2d(np.asarray(self.generators, dtype=float))

    @property
    def m(self) -> int:
        return int(self.generators.shape[1])

    def norm(self) -> float:
        """|K| = max |g|"""
        if self.generators.shape[0] == 0:
            return 0.0
        return float(np.linalg.norm(self.generators, axis=1).max())

    def support(self, z: np.ndarray) -> np.ndarray:
        """rho_K(z) = max |<z, g>| for one probe (m,) or many (P, m)"""
        z = np.asarray(z, dtype=float)
        if self.generators.shape[0] == 0:
            return np.zeros(z.shape[:-1]) if z.ndim > 1 else 0.0
        values = np.abs(z @ self.generators.T)
        return values.max(axis=-1)


def segment(v: np.ndarray) -> ConvexBody:
    return ConvexBody(np.asarray(v, dtype=float)[None, :])


def transform(A: np.ndarray, body: ConvexBody) -> ConvexBody:
    """AK: every generator mapped through A"""
    return ConvexBody(body.generators @ np.asarray(A, dtype=float).T)


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Indices of generators that are vertices of conv(+-points)"""
    norms = np.linalg.norm(points, axis=1)
    live = np.flatnonzero(norms > PRUNE_TOL * max(1.0, norms.max(initial=0.0)))
    if live.size <= 1:
        return live
    basis_points = points[live]
    _, sing, vt = np.linalg.svd(basis_points, full_matrices=False)
    rank = int(np.sum(sing > PRUNE_TOL * sing[0]))
    if rank == 1:
        return live[[int(np.argmax(norms[live]))]]
    coords = basis_points @ vt[:rank].T
    symmetric = np.vstack([coords, -coords])
    try:
        hull = ConvexHull(symmetric)
    except QhullError:
        return live
    vertices = np.unique(hull.vertices % live.size)
    return live[vertices]


def prune_generators(generators: np.ndarray, cap: int = GENERATOR_CAP) -> np.ndarray:
    """Drop generators interior to the symmetric hull; enforce the cap on the probe mesh"""
    generators = np.atleast_2d(generators)
    if generators.shape[0] <= 1:
        return generators
    if generators.shape[1] == 1:
        return generators[[int(np.argmax(np.abs(generators[:, 0])))]]
    kept = generators[_hull_vertices(generators)]
    if kept.shape[0] == 0:
        return generators[:1] * 0.0
    if kept.shape[0] > cap:
        hull_count = kept.shape[0]
        probes = direction_mesh(kept.shape[1])
        values = np.abs(probes @ kept.T)
        winners = np.unique(np.argmax(values, axis=1))
        kept = kept[winners[:cap]]
        logger.warning(f"⚠️ Generator cap {cap} hit: kept {kept.shape[0]} of {hull_count} hull vertices; "
                       f"the body is now an inner approximation")
    return kept


def hull_union(bodies: Sequence[ConvexBody], cap: int = GENERATOR_CAP) -> ConvexBody:
    """Closed symmetric convex hull of the union"""
    stacked = np.vstack([body.generators for body in bodies])
    return ConvexBody(prune_generators(stacked, cap))


# ============================================================================
# BODY-VALUED GRID FUNCTIONS
# ============================================================================

@dataclass(eq=False)
class CBGridFunction:
    """Convex-body samples as a zero-padded generator array (size, G, m)"""

    grid: Grid
    generators: np.ndarray

    def __post_init__(self):
        self.generators = np.asarray(self.generators, dtype=float)
        if self.generators.ndim != 3 or self.generators.shape[0] != self.grid.size:
            raise GridMismatch("generator array must have shape (size, G, m)",
                               shape=self.generators.shape, size=self.grid.size)

    @classmethod
    def from_vectors(cls, grid: Grid, vectors: np.ndarray) -> "CBGridFunction":
        """Pointwise segment bodies K(f(x))"""
        return cls(grid, np.asarray(vectors, dtype=float)[:, None, :])

    @classmethod
    def from_bodies(cls, grid: Grid, bodies: Sequence[ConvexBody]) -> "CBGridFunction":
        width = max(1, max(body.generators.shape[0] for body in bodies))
        m = bodies[0].m
        out = np.zeros((grid.size, width, m))
        for i, body in enumerate(bodies):
            out[i, :body.generators.shape[0]] = body.generators
        return cls(grid, out)

    @property
    def m(self) -> int:
        return int(self.generators.shape[2])

    @property
    def width(self) -> int:
        return int(self.generators.shape[1])

    def body(self, index: int) -> ConvexBody:
        gens = self.generators[index]
        live = np.linalg.norm(gens, axis=1) > 0
        return ConvexBody(gens[live] if live.any() else gens[:1])

    def norms(self) -> np.ndarray:
        """|F(x)| per sample"""
        return np.linalg.norm(self.generators, axis=2).max(axis=1)

    def transformed_norms(self, matrices: np.ndarray) -> np.ndarray:
        """|A(x) F(x)| for per-sample matrices (size, m, m)"""
        images = np.einsum("xij,xgj->xgi", matrices, self.generators)
        return np.linalg.norm(images, axis=2).max(axis=1)

    def support(self, probes: np.ndarray) -> np.ndarray:
        """rho_F(x)(z) for probes (P, m) -> (size, P)"""
        return np.abs(np.einsum("xgj,pj->xpg", self.generators, probes)).max(axis=2)

    def scaled(self, factors: np.ndarray) -> "CBGridFunction":
        return CBGridFunction(self.grid, self.generators * np.asarray(factors)[:, None, None])


def body_norms(F: CBGridFunction) -> np.ndarray:
    return F.norms()


def body_support(F: CBGridFunction, z: np.ndarray) -> np.ndarray:
    return F.support(np.atleast_2d(z))[:, 0] if np.ndim(z) == 1 else F.support(z)


def ball_generators(m: int) -> np.ndarray:
    """Probe-mesh generators whose symmetric hull approximates the unit ball"""
    if m == 1:
        return np.ones((1, 1))
    return np.asarray(direction_mesh(m))


def augment_with_ball(F: CBGridFunction, radii: np.ndarray, cap: int = GENERATOR_CAP) -> CBGridFunction:
    """Hull of each sample with radius(x) times the mesh ball"""
    ball = ball_generators(F.m)
    radii = np.asarray(radii, dtype=float)
    bodies = []
    for index in range(F.grid.size):
        gens = np.vstack([F.generators[index], radii[index] * ball])
        bodies.append(ConvexBody(prune_generators(gens, cap)))
    return CBGridFunction.from_bodies(F.grid, bodies)


def cb_reducing_operator(F: CBGridFunction, cube: Cube, u: float, density: int = 1) -> ReducingOperator:
    """Ellipsoid fit to z -> (avg_Q rho_F(x)(z)^u)^(1/u)"""
    mask = cube.mask(F.grid)
    if not mask.any():
        raise EmptyCube("cube contains no cell midpoint", cube=cube.to_dict())
    directions = direction_mesh(F.m, density)
    values = np.abs(np.einsum("xgj,pj->xpg", F.generators[mask], directions)).max(axis=2)
    zero = (values <= 0).any(axis=0)
    if zero.any():
        raise NotAbsorbing("body function has a zero support value", cube=cube.to_dict(),
                           direction=directions[int(np.flatnonzero(zero)[0])].tolist())
    norms = np.mean(values ** u, axis=0) ** (1.0 / u)
    fit = fit_symmetric_norm(directions, norms)
    return ReducingOperator(fit.matrix, cube, fit.fit_ratio, fit.converged)
