"""
Matrix weights: validated symmetric positive-definite samples on a grid,
the preset families used by experiments, and weighted norms.
"""

import math
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..core.caching import array_fingerprint
from ..core.errors import ConfigInvalid, InvalidWeight, SingularSample
from ..core.grid import Grid, GridFunction
from ..core.vexp import ExponentProfile, vnorm

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
MAX_CONDITION = 1e12


@dataclass(eq=False)
class MatrixWeight:
    """m x m symmetric positive-definite samples, one per cell midpoint"""

    grid: Grid
    samples: np.ndarray
    preset: str = "custom"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 3 or self.samples.shape[0] != self.grid.size \
                or self.samples.shape[1] != self.samples.shape[2]:
            raise InvalidWeight("weight samples must have shape (size, m, m)",
                                shape=self.samples.shape, preset=self.preset)
        finite = np.isfinite(self.samples).all(axis=(1, 2))
        if not finite.all():
            raise InvalidWeight("weight has non-finite samples",
                                sample=int(np.flatnonzero(~finite)[0]), preset=self.preset)

        scale = np.maximum(1.0, np.abs(self.samples).max(axis=(1, 2)))
        asym = np.abs(self.samples - np.swapaxes(self.samples, 1, 2)).max(axis=(1, 2))
        bad = asym > SYMMETRY_TOL * scale
        if bad.any():
            index = int(np.flatnonzero(bad)[0])
            raise InvalidWeight("weight sample is not symmetric", sample=index,
                                point=self.grid.points[index].tolist(), asymmetry=float(asym[index]))

        eig = np.linalg.eigvalsh(self.samples)
        if np.any(eig[:, 0] <= 0):
            index = int(np.flatnonzero(eig[:, 0] <= 0)[0])
            raise InvalidWeight("weight sample is not positive definite", sample=index,
                                point=self.grid.points[index].tolist(), eigenvalue=float(eig[index, 0]))
        condition = eig[:, -1] / eig[:, 0]
        if np.any(condition >= MAX_CONDITION):
            index = int(np.flatnonzero(condition >= MAX_CONDITION)[0])
            raise SingularSample("weight sample condition number too large", sample=index,
                                 point=self.grid.points[index].tolist(), condition=float(condition[index]))
        self._eig = eig

    @property
    def m(self) -> int:
        return int(self.samples.shape[1])

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.linalg.inv(self.samples)
        return 0.5 * (inv + np.swapaxes(inv, 1, 2))

    @cached_property
    def norms(self) -> np.ndarray:
        """Spectral norm |W(x)| per sample"""
        return self._eig[:, -1].copy()

    @cached_property
    def inverse_norms(self) -> np.ndarray:
        return 1.0 / self._eig[:, 0]

    @cached_property
    def fingerprint(self) -> str:
        return array_fingerprint(self.samples)

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.samples, "matrix")

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """W(x) v(x) for vector samples (size, m)"""
        return np.einsum("kij,kj->ki", self.samples, vectors)

    def apply_inverse(self, vectors: np.ndarray) -> np.ndarray:
        return np.einsum("kij,kj->ki", self.inverse, vectors)

    def inverse_weight(self) -> "MatrixWeight":
        return MatrixWeight(self.grid, self.inverse, f"{self.preset}^-1", dict(self.params))

    def restricted_samples(self, mask: np.ndarray) -> np.ndarray:
        return self.samples[mask]


def _rotation(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    R = np.empty(np.shape(theta) + (2, 2))
    R[..., 0, 0] = c
    R[..., 0, 1] = -s
    R[..., 1, 0] = s
    R[..., 1, 1] = c
    return R


def _power_diag(radius: np.ndarray, exponents: Sequence[float]) -> np.ndarray:
    diag = np.stack([radius ** a for a in exponents], axis=1)
    out = np.zeros((radius.size, len(exponents), len(exponents)))
    idx = np.arange(len(exponents))
    out[:, idx, idx] = diag
    return out


def weight_from_preset(grid: Grid, preset: str, params: Optional[dict] = None) -> MatrixWeight:
    """Realize a weight preset; |x|^a factors are only ever evaluated at midpoints"""
    params = dict(params or {})
    radius = grid.radius

    if preset == "identity":
        m = int(params.get("m", 2))
        samples = np.broadcast_to(np.eye(m), (grid.size, m, m)).copy()
        return MatrixWeight(grid, samples, preset, params)

    if preset == "constant":
        matrix = np.asarray(params.get("matrix", [[2.0, 0.5], [0.5, 1.0]]), dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ConfigInvalid("constant weight needs a square matrix", shape=matrix.shape)
        samples = np.broadcast_to(matrix, (grid.size,) + matrix.shape).copy()
        return MatrixWeight(grid, samples, preset, params)

    if preset == "scalar_power":
        a = float(params.get("a", 0.5))
        m = int(params.get("m", 2))
        samples = (radius ** a)[:, None, None] * np.eye(m)[None]
        return MatrixWeight(grid, samples, preset, params)

    if preset == "diag_power":
        exponents = [float(a) for a in params.get("a", [0.5, 0.25])]
        return MatrixWeight(grid, _power_diag(radius, exponents), preset, params)

    if preset in ("rotated_diag", "bump_conjugated"):
        a1 = float(params.get("a1", 0.5))
        a2 = float(params.get("a2", 0.25))
        D = _power_diag(radius, [a1, a2])
        if preset == "rotated_diag":
            theta = np.full(grid.size, float(params.get("theta", math.pi / 6)))
        else:
            theta = float(params.get("twist", 1.0)) * np.exp(-radius ** 2)
        R = _rotation(theta)
        samples = R @ D @ np.swapaxes(R, 1, 2)
        samples = 0.5 * (samples + np.swapaxes(samples, 1, 2))
        return MatrixWeight(grid, samples, preset, params)

    raise ConfigInvalid("unknown weight preset", preset=preset)


def preset_exponents(preset: str, params: Optional[dict] = None) -> list:
    """Power exponents a_i of a preset, used by the class-plausibility guard"""
    params = dict(params or {})
    if preset == "scalar_power":
        return [float(params.get("a", 0.5))]
    if preset == "diag_power":
        return [float(a) for a in params.get("a", [0.5, 0.25])]
    if preset in ("rotated_diag", "bump_conjugated"):
        return [float(params.get("a1", 0.5)), float(params.get("a2", 0.25))]
    return []


def weighted_vnorm(vectors: np.ndarray, weight: MatrixWeight, p: ExponentProfile) -> float:
    """vnorm(|W(.) f(.)|, p)"""
    return vnorm(np.linalg.norm(weight.apply(np.asarray(vectors, dtype=float)), axis=1), p)
