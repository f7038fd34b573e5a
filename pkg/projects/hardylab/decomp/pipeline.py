"""
Level-by-level atomic decomposition.

Level 0 emits g = f - b_1 on the dyadic cube Q0 holding the support of f.
Level k >= 1 emits, for every Q in F_k,

    A_kQ = f eta_Q - P_Q(f) eta_Q
           - sum_{L in G(Q)} [f - P_L f] eta_L eta_Q
           + sum_{L in G(Q)} P_L([f - P_L f] eta_Q) eta_L

with G(Q) the cubes L of F_(k+1) whose L* meets Q*. E_(k+1) is kept inside
the resolved support of F_k, so sum_Q A_kQ = b_k - b_(k+1) holds exactly
and f = A_0 + sum_k sum_Q A_kQ + b_K on the grid.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import ResolutionExhausted
from ..core.grid import Cube, Grid, GridFunction, dyadic_cover, lattice_shifts
from ..core.parallel import get_cube_processor
from ..core.vexp import ExponentProfile, indicator_norm
from ..maximal.schwartz_catalog import TestFunctionCatalog
from ..weights.models import WeightCertificate
from ..weights.reducing import reducing_operator, spectral_norms
from ..weights.weights import MatrixWeight
from .atoms import Atom, coefficient_norm, moment_errors, validate_atom
from .level_sets import AugmentedBody, LevelSet, augmented_body, level_set
from .models import (AtomRecord, AtomReport, DecompositionParams, DecompositionSummary,
                     LevelDiagnostics)
from .partition import PartitionOfUnity, partition_of_unity
from .polynomials import PolyBasis, ProjectedPolynomial, poly_basis, projection_PL
from .stopping import (StoppingCollection, check_stopping_properties, overlap_constant,
                       whitney_stopping)

logger = logging.getLogger(__name__)

PREMISE_ROUNDS = 60
INPUT_MOMENT_TOL = 1e-10


@dataclass(eq=False)
class _Stage:
    """F_k with its partition, bases and the projections P_L f"""

    collection: StoppingCollection
    partition: PartitionOfUnity
    bases: List[PolyBasis]
    projections: List[ProjectedPolynomial]
    defects: List[np.ndarray]

    def b(self, grid: Grid, m: int) -> np.ndarray:
        """b = sum_L [f - P_L f] eta_L"""
        out = np.zeros((grid.size, m))
        for cells, eta, defect in zip(self.partition.cells, self.partition.values, self.defects):
            out[cells] += defect * eta[:, None]
        return out


@dataclass(eq=False)
class Decomposition:
    """Atoms with coefficients, the truncation residual and per-level diagnostics"""

    f: GridFunction
    s: int
    atoms: List[Atom] = field(default_factory=list)
    residual: Optional[np.ndarray] = None
    levels: List[LevelDiagnostics] = field(default_factory=list)
    collections: List[StoppingCollection] = field(default_factory=list)
    root: Optional[Cube] = None
    epsilon: float = 0.0
    L_dec: float = 0.0
    level_fraction: float = 0.0
    overlap: int = 0
    hardy_value: float = 0.0
    exhausted: bool = False

    @property
    def grid(self) -> Grid:
        return self.f.grid

    def __len__(self) -> int:
        return len(self.atoms)

    def entries(self, up_to_level: Optional[int] = None) -> List[Tuple[float, Cube]]:
        return [(atom.lam, atom.cube) for atom in self.atoms
                if up_to_level is None or atom.level <= up_to_level]

    def summary(self, r: float, p: ExponentProfile,
                reports: Optional[Sequence[AtomReport]] = None) -> DecompositionSummary:
        reports = list(reports) if reports is not None else [None] * len(self.atoms)
        records, offset = [], 0
        for atom, report in zip(self.atoms, reports):
            records.append(AtomRecord(level=atom.level, cube=atom.cube.to_dict(),
                                      parent=(atom.parent or atom.cube).to_dict(),
                                      lam=atom.lam, offset=offset, report=report))
            offset += 1
        _, error = reconstruct(self)
        return DecompositionSummary(
            s=self.s,
            K_levels=max(1, len(self.levels)),
            levels_used=len(self.levels),
            atom_count=len(self.atoms),
            epsilon=self.epsilon,
            L_dec=self.L_dec,
            level_fraction=self.level_fraction,
            overlap_constant=self.overlap,
            relative_error=error,
            coefficient_norm=coefficient_norm(self.entries(), r, p) if self.atoms else 0.0,
            hardy_norm=self.hardy_value,
            exhausted=self.exhausted,
            levels=self.levels,
            atoms=records
        )


# ============================================================================
# HELPERS
# ============================================================================

def _vectors(f: GridFunction) -> np.ndarray:
    return f.samples[:, None] if f.codomain == "scalar" else f.samples


def l2_norm(values: np.ndarray, grid: Grid) -> float:
    return float(math.sqrt(grid.cell_volume * np.sum(np.asarray(values) ** 2)))


def support_root(f: GridFunction) -> Cube:
    """Smallest shifted dyadic cube holding the support of f"""
    grid = f.grid
    pts = grid.points[f.support_mask()]
    lower = pts.min(axis=0) - grid.h / 2.0
    upper = pts.max(axis=0) + grid.h / 2.0
    _, root = dyadic_cover(Cube.from_lower(lower, float((upper - lower).max())))
    return root


def minimum_edge(grid: Grid, s: int) -> float:
    """Smallest stopping edge whose cubes hold s + 2 cells per axis"""
    return grid.h * 2.0 ** math.ceil(math.log2(s + 2))


def _stage(collection: StoppingCollection, vectors: np.ndarray, s: int) -> _Stage:
    grid = collection.grid
    partition = partition_of_unity(collection)

    def build(index: int) -> Tuple[PolyBasis, ProjectedPolynomial, np.ndarray]:
        cells = partition.cells[index]
        basis = poly_basis(grid, collection.cubes[index], cells, partition.normalized(index), s)
        projected = projection_PL(vectors, basis)
        return basis, projected, vectors[cells] - projected.on_cells()

    built = get_cube_processor().map_cubes(build, range(len(collection)))
    return _Stage(collection, partition,
                  [b[0] for b in built], [b[1] for b in built], [b[2] for b in built])


def _lambda(weight: MatrixWeight, p: ExponentProfile, cube: Cube, level: LevelSet) -> float:
    """vnorm(1_3Q, p) |A_3Q M_3Q|"""
    triple = cube.dilate(3.0)
    A = reducing_operator(weight, p, triple).matrix
    return indicator_norm(p, triple) * float(spectral_norms(A @ level.operator.matrix))


def _premise_offenders(parents: Sequence[Cube], E: np.ndarray, grid: Grid) -> List[int]:
    """Parents Q with |E cap 3Q| >= 2^-4n |Q|"""
    out = []
    for i, Q in enumerate(parents):
        inside = Q.dilate(3.0).mask(grid)
        if np.count_nonzero(E & inside) * grid.cell_volume >= 2.0 ** (-4 * grid.n) * Q.measure:
            out.append(i)
    return out


def _union(levels: Sequence[LevelSet], grid: Grid, resolved: Optional[np.ndarray]) -> np.ndarray:
    E = np.zeros(grid.size, dtype=bool)
    for level in levels:
        E |= level.mask
    return E if resolved is None else E & resolved


def _level_sets(body, parents: Sequence[Cube], u: float, level_fraction: float,
                resolved: Optional[np.ndarray]) -> Tuple[List[LevelSet], np.ndarray, bool]:
    """Level sets of every parent, re-doubled until the measure premise holds"""
    grid = body.grid
    levels = get_cube_processor().map_cubes(
        lambda Q: level_set(body, Q, u, level_fraction), parents)
    E = _union(levels, grid, resolved)
    for _ in range(PREMISE_ROUNDS):
        offenders = _premise_offenders(parents, E, grid)
        if not offenders:
            return levels, E, True
        for i in offenders:
            inside = parents[i].dilate(3.0).mask(grid)
            for j, level in enumerate(levels):
                if np.any(level.mask & inside):
                    levels[j] = level_set(body, level.cube, u, level_fraction,
                                          threshold=2.0 * level.threshold, operator=level.operator)
        E = _union(levels, grid, resolved)
    logger.warning("⚠️ Level-set measure premise still violated after re-doubling")
    return levels, E, False


def _level_atom(index: int, previous: _Stage, following: _Stage, vectors: np.ndarray,
                grid: Grid) -> np.ndarray:
    """A_kQ for the index-th cube of F_k"""
    m = vectors.shape[1]
    out = np.zeros((grid.size, m))
    Q = previous.collection.cubes[index]
    cells_Q = previous.partition.cells[index]
    eta_Q = previous.partition.values[index]
    out[cells_Q] += previous.defects[index] * eta_Q[:, None]

    dense_eta_Q = np.zeros(grid.size)
    dense_eta_Q[cells_Q] = eta_Q
    star_Q = Q.star()
    for j, L in enumerate(following.collection.cubes):
        if not L.star().intersects(star_Q):
            continue
        cells_L = following.partition.cells[j]
        eta_L = following.partition.values[j][:, None]
        localized = following.defects[j] * dense_eta_Q[cells_L][:, None]
        correction = projection_PL(localized, following.bases[j], on_cells=True)
        out[cells_L] += (correction.on_cells() - localized) * eta_L
    return out


# ============================================================================
# PIPELINE
# ============================================================================

def atomic_decompose(f: GridFunction, weight: MatrixWeight, p: ExponentProfile,
                     certificate: WeightCertificate, params: Optional[DecompositionParams] = None,
                     catalog: Optional[TestFunctionCatalog] = None,
                     scales: Optional[Sequence[float]] = None) -> Decomposition:
    """Atoms a_kQ with coefficients lambda_kQ reproducing f up to the level-K residual"""
    params = params or DecompositionParams()
    grid = f.grid
    vectors = _vectors(f)
    s = params.s if params.s is not None else certificate.minimal_moment_order()
    if not np.any(vectors):
        logger.info("✅ Zero input: empty decomposition")
        return Decomposition(f, s, residual=np.zeros_like(vectors))

    shift = lattice_shifts(grid.n)[params.shift_index % 2 ** grid.n]
    overlap = overlap_constant(grid.n, shift)
    level_fraction = params.level_fraction or 1.0 / (overlap * 2.0 ** (12 * grid.n))
    root = support_root(f)

    moment, scale = moment_errors(vectors, grid, root, s)
    if moment > INPUT_MOMENT_TOL * max(scale, 1e-300):
        logger.warning(f"⚠️ Input moments up to order {s} do not vanish (relative {moment / scale:.3g})")

    augmented: AugmentedBody = augmented_body(f, weight, p, certificate.d2, catalog, scales)
    body, u = augmented.body, certificate.u
    min_edge = minimum_edge(grid, s)
    f_norm = l2_norm(vectors, grid)
    logger.info(f"🚀 Decomposing on {grid.n}D grid J={grid.J}: s={s}, root edge {root.edge:g}, "
                f"level fraction {level_fraction:.3g}")

    decomposition = Decomposition(f, s, root=root, epsilon=augmented.epsilon, L_dec=augmented.L_dec,
                                  level_fraction=level_fraction, overlap=overlap,
                                  hardy_value=augmented.hardy_value)
    parents: List[Cube] = [root]
    previous: Optional[_Stage] = None
    E_measure = root.cell_count(grid) * grid.cell_volume

    for k in range(params.K_levels):
        resolved = previous.partition.resolved if previous is not None else None
        levels, E_next, premise_ok = _level_sets(body, parents, u, level_fraction, resolved)

        collection = whitney_stopping(E_next, grid, shift, min_edge)
        stopping = check_stopping_properties(collection, parents)
        if collection.residue_cells:
            decomposition.exhausted = True
            if params.strict:
                raise ResolutionExhausted("stopping cubes below the minimum edge would be required",
                                          level=k + 1, residue_cells=collection.residue_cells)
        following = _stage(collection, vectors, s)
        b_next = following.b(grid, vectors.shape[1])

        if previous is None:
            pieces = [vectors - b_next]
        else:
            pieces = get_cube_processor().map_cubes(
                lambda i: _level_atom(i, previous, following, vectors, grid), range(len(parents)))

        for Q, level, A in zip(parents, levels, pieces):
            if not np.any(A):
                continue
            lam = _lambda(weight, p, Q, level)
            decomposition.atoms.append(Atom(A / lam, Q.dilate(3.0), s, lam, k, Q))

        decomposition.collections.append(collection)
        decomposition.levels.append(LevelDiagnostics(
            level=k,
            cubes=len(parents),
            E_measure=E_measure,
            residue_measure=collection.residue_cells * grid.cell_volume,
            thresholds=[level.threshold for level in levels],
            b_norm=l2_norm(b_next, grid),
            residual_error=l2_norm(b_next, grid) / f_norm,
            premise_ok=premise_ok,
            stopping=stopping
        ))
        logger.debug(f"Level {k}: {len(parents)} cubes, |E_next|={np.count_nonzero(E_next)} cells, "
                     f"|b|={l2_norm(b_next, grid):.3g}")

        decomposition.residual = b_next
        if not len(collection):
            break
        parents = list(collection.cubes)
        previous = following
        E_measure = np.count_nonzero(E_next) * grid.cell_volume

    logger.info(f"✅ Decomposition: {len(decomposition.atoms)} atoms over {len(decomposition.levels)} levels, "
                f"residual {decomposition.levels[-1].residual_error:.3g}")
    return decomposition


def reconstruct(decomposition: Decomposition, up_to_level: Optional[int] = None) -> Tuple[GridFunction, float]:
    """sum over levels <= up_to_level of lambda a, with the relative L2 error against f"""
    grid = decomposition.grid
    vectors = _vectors(decomposition.f)
    total = np.zeros_like(vectors, dtype=float)
    for atom in decomposition.atoms:
        if up_to_level is None or atom.level <= up_to_level:
            total += atom.scaled()
    norm = l2_norm(vectors, grid)
    error = l2_norm(vectors - total, grid) / norm if norm > 0 else 0.0
    return GridFunction.vector(grid, total), error


def validate_decomposition(decomposition: Decomposition, weight: MatrixWeight,
                           p: ExponentProfile) -> Tuple[List[AtomReport], float]:
    """Reports for every atom and the recorded constant C_atom = max size"""
    reports = get_cube_processor().map_cubes(
        lambda atom: validate_atom(atom, weight, p), decomposition.atoms)
    C_atom = max((report.a_size for report in reports), default=0.0)
    return [r.model_copy(update={"C_atom": C_atom}) for r in reports], C_atom
