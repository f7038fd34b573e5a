"""
Convex-body valued maximal functions and the Hardy quasi-norm.

For every x the body is the hull of the segments spanned by psi_t * f(y)
over the kind's finite index set: scales, catalog members, and for the
non-tangential and Peetre kinds the points y around x.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import signal
from scipy.spatial.distance import cdist

from ..convexbody.convexbody import GENERATOR_CAP, CBGridFunction, prune_generators
from ..core.errors import ConfigInvalid
from ..core.grid import Grid, GridFunction
from ..core.vexp import ExponentProfile, vnorm
from ..weights.weights import MatrixWeight
from .schwartz_catalog import (SchwartzMember, TestFunctionCatalog, build_catalog,
                               required_order, scale_ladder)

logger = logging.getLogger(__name__)

BODY_KINDS = ("radial", "grand_radial", "nontangential", "peetre", "grand_peetre")
GRAND_KINDS = ("grand_radial", "grand_peetre")
SUPPORT_FRACTION = 0.75
PEETRE_ROW_CHUNK = 256


@dataclass(frozen=True)
class MaximalKind:
    """One member of the convex-body maximal family"""

    name: str
    a: float = 1.0
    l: Optional[float] = None

    def __post_init__(self):
        if self.name not in BODY_KINDS:
            raise ConfigInvalid("unknown convex-body maximal kind", kind=self.name)
        if self.a <= 0:
            raise ConfigInvalid("aperture must be positive", a=self.a)
        if self.name in ("peetre", "grand_peetre") and (self.l is None or self.l <= 0):
            raise ConfigInvalid("Peetre kinds need a positive decay l", l=self.l)

    @property
    def is_grand(self) -> bool:
        return self.name in GRAND_KINDS

    def validate_for(self, n: int, alpha: float) -> None:
        """l must exceed n/alpha for the Peetre kinds"""
        if self.l is not None and self.l <= n / alpha:
            raise ConfigInvalid("Peetre decay must exceed n/alpha", l=self.l, n=n, alpha=alpha)


def _vector_samples(f: GridFunction) -> np.ndarray:
    return f.samples[:, None] if f.codomain == "scalar" else f.samples


def _check_support(f: GridFunction) -> None:
    live = f.support_mask()
    if live.any():
        reach = float(np.abs(f.grid.points[live]).max())
        if reach >= SUPPORT_FRACTION * f.grid.box:
            logger.warning(f"⚠️ Input reaches |x|={reach:.3g}, beyond 3/4 of the box; "
                           "boundary truncation affects the maximal function")


def convolve_member(vectors: np.ndarray, grid: Grid, member: SchwartzMember, t: float) -> np.ndarray:
    """(phi_t * f)(x) = h^n sum_y phi_t(x - y) f(y), componentwise"""
    kernel = member.sampled_kernel(grid, t) * grid.cell_volume
    out = np.empty_like(vectors)
    for component in range(vectors.shape[1]):
        shaped = grid.reshape(vectors[:, component])
        out[:, component] = signal.convolve(shaped, kernel, mode="same").ravel()
    return out


def _neighbour_offsets(grid: Grid, radius: float) -> np.ndarray:
    """Integer offsets k with |k| h < radius"""
    reach = int(np.ceil(radius / grid.h))
    axis = np.arange(-reach, reach + 1)
    mesh = np.meshgrid(*([axis] * grid.n), indexing="ij")
    offsets = np.stack([c.ravel() for c in mesh], axis=1)
    return offsets[np.linalg.norm(offsets, axis=1) * grid.h < radius]


def _shifted(values: np.ndarray, grid: Grid, offset: Sequence[int]) -> np.ndarray:
    """out[x] = values[x + offset h], zero when x + offset h leaves the grid"""
    shaped = grid.reshape(values)
    out = np.zeros_like(shaped)
    size = grid.per_axis
    if any(abs(k) >= size for k in offset):
        return grid.flatten(out)
    src, dst = [], []
    for k in offset:
        if k >= 0:
            src.append(slice(k, size))
            dst.append(slice(0, size - k))
        else:
            src.append(slice(0, size + k))
            dst.append(slice(-k, size))
    out[tuple(dst)] = shaped[tuple(src)]
    return grid.flatten(out)


def _prune_stack(stack: np.ndarray, cap: int) -> np.ndarray:
    """Per-sample hull pruning once the generator count passes the cap"""
    size, width, m = stack.shape
    if width <= cap:
        return stack
    if m == 1:
        best = np.argmax(np.abs(stack[:, :, 0]), axis=1)
        return stack[np.arange(size), best][:, None, :]
    return _pad_rows([prune_generators(stack[i], cap) for i in range(size)], m)


def _pad_rows(rows: List[np.ndarray], m: int) -> np.ndarray:
    width = max(1, max(row.shape[0] for row in rows))
    out = np.zeros((len(rows), width, m))
    for i, row in enumerate(rows):
        out[i, :row.shape[0]] = row
    return out


def _concat(stack: Optional[np.ndarray], chunk: np.ndarray, cap: int) -> np.ndarray:
    merged = chunk if stack is None else np.concatenate([stack, chunk], axis=1)
    return _prune_stack(merged, cap)


def _peetre_chunk(grid: Grid, u: np.ndarray, t: float, l: float, cap: int) -> np.ndarray:
    """Generators (1 + |x - y|/t)^-l psi_t*f(y) over all y, pruned per x"""
    rows = []
    for start in range(0, grid.size, PEETRE_ROW_CHUNK):
        x = grid.points[start:start + PEETRE_ROW_CHUNK]
        decay = (1.0 + cdist(x, grid.points) / t) ** (-l)
        rows.append(_prune_stack(decay[:, :, None] * u[None, :, :], cap))
    width = max(r.shape[1] for r in rows)
    return np.concatenate([np.pad(r, ((0, 0), (0, width - r.shape[1]), (0, 0))) for r in rows])


def cb_maximal(f: GridFunction, kind: MaximalKind, catalog: Optional[TestFunctionCatalog] = None,
               scales: Optional[Sequence[float]] = None, cap: int = GENERATOR_CAP) -> CBGridFunction:
    """Convex-body valued maximal function of the given kind"""
    grid = f.grid
    vectors = _vector_samples(f)
    _check_support(f)
    if catalog is None:
        catalog = build_catalog(grid.n, 0)
    scales = list(scales) if scales is not None else scale_ladder(grid)
    members = catalog.members if kind.is_grand else [catalog.psi]

    stack = None
    for member in members:
        for t in scales:
            u = convolve_member(vectors, grid, member, t)
            if kind.name in ("radial", "grand_radial"):
                chunk = u[:, None, :]
            elif kind.name == "nontangential":
                offsets = _neighbour_offsets(grid, kind.a * t)
                chunk = np.stack([_shifted(u, grid, k) for k in offsets], axis=1)
            else:
                chunk = _peetre_chunk(grid, u, t, kind.l, cap)
            stack = _concat(stack, chunk, cap)

    logger.debug(f"cb_maximal {kind.name}: {len(members)} members x {len(scales)} scales, "
                 f"width {stack.shape[1]}")
    return CBGridFunction(grid, stack)


def weighted_maximal(f: GridFunction, weight: MatrixWeight, kind: MaximalKind,
                     catalog: Optional[TestFunctionCatalog] = None,
                     scales: Optional[Sequence[float]] = None) -> np.ndarray:
    """x -> |W(x) K(x)| for the body maximal function K of the given kind"""
    body = cb_maximal(f, kind, catalog, scales)
    return body.transformed_norms(weight.samples)


def resolve_catalog(n: int, N: Optional[int] = None, alpha: Optional[float] = None,
                    max_degree: Optional[int] = None) -> TestFunctionCatalog:
    """Catalog of order N, defaulting to and checked against ceil(n/alpha) + 1"""
    minimum = required_order(n, alpha) if alpha is not None else 0
    order = minimum if N is None else N
    if order < minimum:
        raise ConfigInvalid("grand maximal order below ceil(n/alpha) + 1", N=order, required=minimum)
    return build_catalog(n, order, max_degree)


def hardy_norm(f: GridFunction, weight: MatrixWeight, p: ExponentProfile,
               N: Optional[int] = None, catalog: Optional[TestFunctionCatalog] = None,
               alpha: Optional[float] = None, scales: Optional[Sequence[float]] = None) -> float:
    """vnorm of |W(x) M_N^K f(x)| with the grand radial body maximal function"""
    if catalog is None:
        catalog = resolve_catalog(f.grid.n, N, alpha)
    elif alpha is not None and catalog.N < required_order(f.grid.n, alpha):
        raise ConfigInvalid("catalog order below ceil(n/alpha) + 1", N=catalog.N, alpha=alpha)
    if not np.any(f.samples):
        return 0.0
    values = weighted_maximal(f, weight, MaximalKind("grand_radial"), catalog, scales)
    return vnorm(values, p)
