"""
Truncated convolution CZ operators on grid functions, their action on
atoms, moment preservation and the H->L / H->H benchmarks.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from ..core.errors import GridMismatch, InsufficientFarField
from ..core.grid import Grid, GridFunction, monomials
from ..core.parallel import get_cube_processor
from ..core.vexp import ExponentProfile, indicator_norm, vnorm
from ..decomp.atoms import Atom
from ..maximal.convex_maximal import hardy_norm
from ..maximal.schwartz_catalog import TestFunctionCatalog
from ..weights.reducing import reducing_operator, spectral_norms
from ..weights.weights import MatrixWeight
from .kernels import Kernel
from .models import CZBenchReport, CZBenchRow, DecayFit, MomentReport

logger = logging.getLogger(__name__)

MIN_FAR_RADII = 8


@dataclass(frozen=True)
class CZOperator:
    """T_eta f(x) = sum over cells with |x - y| >= eta of K(x - y) f(y) h^n"""

    kernel: Kernel
    truncation: float = 0.5

    def eta(self, grid: Grid) -> float:
        return self.truncation * grid.h

    def sampled_kernel(self, grid: Grid) -> np.ndarray:
        """Kernel on all offsets k h, |k_i| < 2^J, zero inside the truncation radius"""
        reach = grid.per_axis - 1
        axis = np.arange(-reach, reach + 1) * grid.h
        mesh = np.meshgrid(*([axis] * grid.n), indexing="ij")
        z = np.stack([c for c in mesh], axis=-1)
        values = self.kernel.evaluate(z)
        values[np.linalg.norm(z, axis=-1) < self.eta(grid)] = 0.0
        return values * grid.cell_volume


def _vectors(f: GridFunction) -> np.ndarray:
    return f.samples[:, None] if f.codomain == "scalar" else f.samples


def apply(T: CZOperator, f: GridFunction) -> GridFunction:
    """Principal-value quadrature of T f, componentwise"""
    grid = f.grid
    if T.kernel.n != grid.n:
        raise GridMismatch("kernel and grid dimensions differ", kernel=T.kernel.name, n=grid.n)
    kernel = T.sampled_kernel(grid)
    vectors = _vectors(f)
    out = np.zeros_like(vectors, dtype=float)
    for component in range(vectors.shape[1]):
        shaped = grid.reshape(vectors[:, component])
        if np.any(shaped):
            out[:, component] = signal.convolve(shaped, kernel, mode="same").ravel()
    if f.codomain == "scalar":
        return GridFunction.scalar(f.grid, out[:, 0])
    return GridFunction.vector(f.grid, out)


# ============================================================================
# MOMENTS AND DECAY
# ============================================================================

def _moments(values: np.ndarray, grid: Grid, s: int) -> Tuple[np.ndarray, float]:
    basis = monomials(grid.points, s)
    moments = grid.cell_volume * np.abs(basis.T @ values)
    scale = grid.cell_volume * float((np.abs(basis).T @ np.abs(values)).max())
    return moments.max(axis=1), scale


def embed(f: GridFunction) -> GridFunction:
    """f on the grid of twice the box and the same h"""
    grid = f.grid
    wide = Grid(grid.n, grid.J + 1, 2.0 * grid.box)
    start = grid.per_axis // 2
    region = tuple(slice(start, start + grid.per_axis) for _ in range(grid.n))
    values = _vectors(f)
    out = np.zeros(wide.shape + (values.shape[1],))
    out[region] = grid.reshape(values)
    return GridFunction.vector(wide, wide.flatten(out))


def moment_preservation(T: CZOperator, f: GridFunction, s: int, tolerance: float = 1e-8) -> MomentReport:
    """Moments of T f up to order s over the box; the tail is their change on the doubled window"""
    if s < 0:
        return MomentReport(s=s, moments=[], scale=0.0, tail=0.0, tolerance=tolerance)
    Tf = _vectors(apply(T, f))
    moments, scale = _moments(Tf, f.grid, s)
    wide = embed(f)
    wide_moments, _ = _moments(_vectors(apply(T, wide)), wide.grid, s)
    tail = float(np.abs(wide_moments - moments).max())
    return MomentReport(s=s, moments=[float(v) for v in moments], scale=scale, tail=tail, tolerance=tolerance)


def radius_ladder(start: float, stop: float, per_octave: int = 4) -> np.ndarray:
    count = int(math.floor(per_octave * math.log2(stop / start))) + 1 if stop > start else 0
    return start * 2.0 ** (np.arange(count) / per_octave)


def atom_image_decay(T: CZOperator, atom: Atom, weight: MatrixWeight, p: ExponentProfile,
                     per_octave: int = 4) -> DecayFit:
    """Regression of log envelope(|W T a| vnorm(1_Q) / |W A_Q^-1|) on log |x - c_Q| beyond 4 r_Q"""
    grid = weight.grid
    n, s = grid.n, max(atom.s, 0)
    target = -(n + s + T.kernel.delta)
    if not np.any(atom.samples):
        return DecayFit(target_slope=target)

    cube = atom.cube
    center = np.asarray(cube.center)
    r_Q = 0.5 * math.sqrt(n) * cube.edge
    reach = float(np.min(grid.box - np.abs(center)))
    radii = radius_ladder(4.0 * r_Q, reach, per_octave)
    if len(radii) < MIN_FAR_RADII:
        raise InsufficientFarField("too few far-field radii for a decay fit",
                                   cube=cube.to_dict(), radii=int(len(radii)), required=MIN_FAR_RADII)

    image = apply(T, GridFunction.vector(grid, atom.samples)).samples
    inverse = reducing_operator(weight, p, cube).inverse
    spread = spectral_norms(np.einsum("xij,jk->xik", weight.samples, inverse))
    ratio = np.linalg.norm(weight.apply(image), axis=1) * indicator_norm(p, cube) / spread
    distance = np.linalg.norm(grid.points - center, axis=1)

    used, envelope = [], []
    for low, high in zip(radii[:-1], radii[1:]):
        shell = (distance >= low) & (distance < high)
        if shell.any() and ratio[shell].max() > 0:
            used.append(float(low))
            envelope.append(float(ratio[shell].max()))
    if len(used) < 2:
        return DecayFit(radii=used, envelope=envelope, target_slope=target)
    slope, intercept = np.polyfit(np.log(used), np.log(envelope), 1)
    return DecayFit(slope=float(slope), intercept=float(intercept), radii=used,
                    envelope=envelope, target_slope=target)


# ============================================================================
# BENCHMARKS
# ============================================================================

def isometry_ratio(T: CZOperator, f: GridFunction) -> float:
    """|T f|_2 / |f|_2, close to 1 for the Hilbert transform"""
    top = float(np.sqrt(np.sum(_vectors(apply(T, f)) ** 2)))
    bottom = float(np.sqrt(np.sum(_vectors(f) ** 2)))
    return top / bottom if bottom > 0 else 0.0


def _bench_row(index: int, T: CZOperator, f: GridFunction, weight: MatrixWeight, p: ExponentProfile,
               s: int, catalog: Optional[TestFunctionCatalog],
               scales: Optional[Sequence[float]]) -> CZBenchRow:
    if not np.any(f.samples):
        return CZBenchRow(index=index, hardy_norm=0.0, h_to_l=0.0, h_to_h=0.0, moments_preserved=True)
    hardy = hardy_norm(f, weight, p, catalog=catalog, scales=scales)
    Tf = apply(T, f)
    h_to_l = vnorm(np.linalg.norm(weight.apply(_vectors(Tf)), axis=1), p) / hardy
    preserved = moment_preservation(T, f, s).passed
    h_to_h = None
    if preserved:
        h_to_h = hardy_norm(Tf, weight, p, catalog=catalog, scales=scales) / hardy
    return CZBenchRow(index=index, hardy_norm=hardy, h_to_l=h_to_l, h_to_h=h_to_h,
                      moments_preserved=preserved)


def cz_bench(T: CZOperator, weight: MatrixWeight, p: ExponentProfile, suite: Sequence[GridFunction],
             s: int, catalog: Optional[TestFunctionCatalog] = None,
             scales: Optional[Sequence[float]] = None,
             refined: Optional[Tuple[MatrixWeight, ExponentProfile, Sequence[GridFunction]]] = None
             ) -> CZBenchReport:
    """H->L ratios for every member, and H->H where T keeps the vanishing moments"""
    logger.info(f"🔄 CZ benchmark {T.kernel.name} over {len(suite)} inputs")

    def rows_for(w: MatrixWeight, q: ExponentProfile, members: Sequence[GridFunction],
                 ladder: Optional[Sequence[float]]) -> List[CZBenchRow]:
        return get_cube_processor().map_cubes(
            lambda item: _bench_row(item[0], T, item[1], w, q, s, catalog, ladder),
            list(enumerate(members)))

    report = CZBenchReport(kernel=T.kernel.name, rows=rows_for(weight, p, suite, scales))
    if refined is not None:
        report.refined_rows = rows_for(*refined, None)
    logger.info(f"✅ CZ benchmark: max H->L {report.max_h_to_l:.4g}")
    return report
