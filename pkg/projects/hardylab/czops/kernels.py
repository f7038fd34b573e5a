"""
Odd convolution kernels K(x, y) = k(x - y): Hilbert on the line, Riesz in the plane.

Derivatives in x are closed form up to second order (all orders for the
Hilbert kernel); higher orders fall back to central differences of the
second-order expressions.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.errors import ConfigInvalid
from .models import KernelCertificate, KernelConstantRow

logger = logging.getLogger(__name__)

RIESZ_CONSTANT = 1.0 / (2.0 * math.pi)
FD_STEP = 1e-4
CERTIFY_SAMPLES = 4096


@dataclass(frozen=True)
class Kernel:
    """Standard kernel of a convolution-type operator"""

    name: str
    n: int
    s: int = 2
    delta: float = 1.0

    def __post_init__(self):
        expected = {"hilbert": 1, "riesz_1": 2, "riesz_2": 2}
        if self.name not in expected:
            raise ConfigInvalid("unknown kernel", kernel=self.name)
        if expected[self.name] != self.n:
            raise ConfigInvalid("kernel does not live in this dimension", kernel=self.name, n=self.n)

    @property
    def component(self) -> int:
        return 0 if self.name == "hilbert" else int(self.name[-1]) - 1

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """k(z) for offsets z = x - y of shape (..., n); zero at the origin"""
        return self.derivative((0,) * self.n, z)

    def derivative(self, gamma: Sequence[int], z: np.ndarray) -> np.ndarray:
        """d^gamma_x k(x - y) at z = x - y"""
        gamma = tuple(int(g) for g in gamma)
        z = np.asarray(z, dtype=float)
        if self.name == "hilbert":
            return _hilbert_derivative(gamma[0], z[..., 0])
        if sum(gamma) <= 2:
            return _riesz_derivative(self.component, gamma, z)
        return self._finite_difference(gamma, z)

    def has_closed_form(self, order: int) -> bool:
        return self.name == "hilbert" or order <= 2

    def _finite_difference(self, gamma: Tuple[int, ...], z: np.ndarray) -> np.ndarray:
        axis = next(i for i, g in enumerate(gamma) if g > 0)
        lower = tuple(g - (1 if i == axis else 0) for i, g in enumerate(gamma))
        step = FD_STEP * np.maximum(np.linalg.norm(z, axis=-1), 1e-300)[..., None]
        unit = np.zeros(self.n)
        unit[axis] = 1.0
        plus = self.derivative(lower, z + step * unit)
        minus = self.derivative(lower, z - step * unit)
        return (plus - minus) / (2.0 * step[..., 0])


def _hilbert_derivative(order: int, z: np.ndarray) -> np.ndarray:
    """d^j/dx^j 1/(pi (x - y)) = (-1)^j j! / (pi z^(j+1))"""
    out = np.zeros_like(z, dtype=float)
    live = z != 0
    out[live] = (-1.0) ** order * math.factorial(order) / (math.pi * z[live] ** (order + 1))
    return out


def _riesz_derivative(j: int, gamma: Tuple[int, ...], z: np.ndarray) -> np.ndarray:
    """Derivatives of c z_j / |z|^3 up to second order"""
    r = np.linalg.norm(z, axis=-1)
    live = r > 0
    safe = np.where(live, r, 1.0)
    axes = [i for i, g in enumerate(gamma) for _ in range(g)]
    zj = z[..., j]

    def delta(a: int, b: int) -> float:
        return 1.0 if a == b else 0.0

    if not axes:
        value = zj / safe ** 3
    elif len(axes) == 1:
        k = axes[0]
        value = delta(j, k) / safe ** 3 - 3.0 * zj * z[..., k] / safe ** 5
    else:
        k, l = axes
        value = (-3.0 * (delta(j, k) * z[..., l] + delta(j, l) * z[..., k] + delta(k, l) * zj) / safe ** 5
                 + 15.0 * zj * z[..., k] * z[..., l] / safe ** 7)
    return np.where(live, RIESZ_CONSTANT * value, 0.0)


def kernel_by_name(name: str) -> Kernel:
    return Kernel(name, 1 if name == "hilbert" else 2)


def sample_offsets(n: int, count: int = CERTIFY_SAMPLES, seed: int = 0,
                   radii: Tuple[float, float] = (1e-2, 1e2)) -> np.ndarray:
    """Offsets with log-uniform length and uniform direction"""
    rng = np.random.Generator(np.random.Philox(seed))
    lengths = np.exp(rng.uniform(math.log(radii[0]), math.log(radii[1]), size=count))
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * lengths[:, None]


def _orders(n: int, order: int):
    if n == 1:
        return [(order,)]
    return [(a, order - a) for a in range(order + 1)]


def kernel_certify(kernel: Kernel, gamma_max: int = 2, offsets: Optional[np.ndarray] = None,
                   seed: int = 0) -> KernelCertificate:
    """Sampled size, smoothness and Holder constants of the kernel"""
    z = sample_offsets(kernel.n, seed=seed) if offsets is None else np.asarray(offsets, dtype=float)
    r = np.linalg.norm(z, axis=1)
    rows = []
    for order in range(gamma_max + 1):
        worst = 0.0
        for gamma in _orders(kernel.n, order):
            values = np.abs(kernel.derivative(gamma, z)) * r ** (kernel.n + order)
            worst = max(worst, float(values.max()))
        rows.append(KernelConstantRow(order=order, constant=worst, closed_form=kernel.has_closed_form(order)))

    rng = np.random.Generator(np.random.Philox(seed + 1))
    moves = rng.standard_normal(z.shape)
    moves *= (rng.uniform(0.0, 0.5, size=len(z)) * r / np.linalg.norm(moves, axis=1))[:, None]
    # K(x, y) - K(x, y') with |y - y'| <= |x - y| / 2
    quotient = np.abs(kernel.evaluate(z) - kernel.evaluate(z - moves)) * r ** (kernel.n + kernel.delta) \
        / np.maximum(np.linalg.norm(moves, axis=1), 1e-300) ** kernel.delta
    antisymmetry = float(np.abs(kernel.evaluate(z) + kernel.evaluate(-z)).max())

    logger.debug(f"Kernel {kernel.name}: constants {[row.constant for row in rows]}")
    return KernelCertificate(kernel=kernel.name, n=kernel.n, delta=kernel.delta, rows=rows,
                             holder_constant=float(quotient.max()), antisymmetry_error=antisymmetry,
                             samples=int(len(z)))
