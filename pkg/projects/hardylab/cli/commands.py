"""
Command dispatch for the hardylab CLI.

Each command takes a CommandContext, writes its outputs through the
context's OutputWriter and records named contracts on it. `run` wraps a
command with seeding, thread configuration, metrics and the manifest.
"""

import math
import time
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ..core.environment_utils import get_environment_info, get_output_root
from ..core.errors import ConfigInvalid, InsufficientFarField
from ..core.grid import GridFunction, dyadic_containing
from ..core.parallel import configure_processor, get_cube_processor
from ..core.persistence import load_block, read_json, sha256_file
from ..core.vexp import ExponentProfile, certify_lh, estq_bracket, lh_report_row
from ..czops.campanato import campanato_norm, duality_pairing_check, polynomial_suite
from ..czops.kernels import kernel_by_name, kernel_certify
from ..czops.operators import CZOperator, atom_image_decay, cz_bench, moment_preservation
from ..decomp.atoms import Atom, bump_atom, coefficient_norm, superpose, synthetic_atom_family, validate_atom
from ..decomp.inequalities import fs_substitute_checks
from ..decomp.pipeline import atomic_decompose, reconstruct, validate_decomposition
from ..maximal.convex_maximal import hardy_norm
from ..maximal.experiments import (
    boundedness_report,
    catalog_sensitivity,
    equivalence_report,
    random_body_functions,
    smooth_suite,
    variable_maximal_bound,
)
from ..maximal.operators import christ_goldberg, reducing_cg
from ..weights.models import WeightCertificate
from ..weights.reducing import certify_weight
from ..weights.weights import weighted_vnorm
from .config import Experiment, ExperimentConfig, config_hash
from .manifest import OutputWriter, RunManifest, write_manifest
from .metrics import get_metrics_collector

logger = logging.getLogger(__name__)

CERTIFICATE_FILE = "certificate.json"
STABILITY_TOL = 0.20
BOUNDEDNESS_TOL = 0.15
DECAY_PASS_FRACTION = 0.9
POLYNOMIAL_TOL = 1e-9
ANTISYMMETRY_TOL = 1e-9
DECAY_EDGES = 3
PIPELINE_MEMBERS = 3


@dataclass(eq=False)
class CommandContext:
    """What a command works on and where it writes"""

    experiment: Experiment
    writer: OutputWriter
    out_dir: Path
    config_hash: str

    @property
    def config(self) -> ExperimentConfig:
        return self.experiment.config

    @property
    def seed(self) -> int:
        return self.config.suite.seed


def _derived_seed(seed: int, offset: int) -> int:
    return (seed + offset) % (2 ** 64)


def _relative_change(coarse: Optional[float], fine: Optional[float]) -> Optional[float]:
    if coarse is None or fine is None:
        return None
    if coarse == 0.0:
        return 0.0 if fine == 0.0 else math.inf
    return abs(fine / coarse - 1.0)


def _certify(experiment: Experiment, refine: bool) -> WeightCertificate:
    refined = None
    if refine:
        fine = experiment.refined()
        refined = (fine.weight, fine.p, fine.cubes)
    return certify_weight(experiment.weight, experiment.p, experiment.cubes, refined=refined)


def _certificate(ctx: CommandContext) -> WeightCertificate:
    """Certificate from an earlier certify-weight run of the same config, or a fresh one"""
    path = ctx.out_dir / CERTIFICATE_FILE
    if path.exists():
        stored = read_json(path)
        if stored.get("config_hash") == ctx.config_hash:
            logger.info(f"🔄 Reusing weight certificate from {path}")
            return WeightCertificate.model_validate(stored["data"])
    return _certify(ctx.experiment, refine=False)


def _moment_order(ctx: CommandContext, certificate: WeightCertificate) -> int:
    s = ctx.config.decomposition.s
    if s is None:
        return certificate.minimal_moment_order()
    if s < certificate.minimal_moment_order():
        logger.warning(f"⚠️ Moment order s={s} is below the admissible order {certificate.minimal_moment_order()}")
    return s


def _alpha(ctx: CommandContext, certificate: WeightCertificate) -> float:
    return ctx.config.maximal.alpha or certificate.alpha


# ============================================================================
# WEIGHTS AND NORMS
# ============================================================================

def certify_weight_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    certificate = _certify(experiment, ctx.config.refine)
    ctx.writer.json(CERTIFICATE_FILE, certificate)
    ctx.writer.csv("certificate.csv", [certificate.summary_row()])
    ctx.writer.csv("reverse_holder.csv", [row.model_dump() for row in certificate.reverse_holder])
    ctx.writer.csv("lh.csv", [lh_report_row(experiment.p, certify_lh(experiment.p))])
    for name, passed in certificate.contracts.items():
        ctx.writer.contract(name, passed)


def _norm_rows(experiment: Experiment, certificate: WeightCertificate, count: int, seed: int) -> List[Dict]:
    catalog = experiment.test_functions(certificate.alpha)
    rows = []
    for index, f in enumerate(smooth_suite(experiment.grid, experiment.m, count, seed)):
        lebesgue = weighted_vnorm(f.samples, experiment.weight, experiment.p)
        hardy = hardy_norm(f, experiment.weight, experiment.p, catalog=catalog, scales=experiment.scales)
        rows.append({"index": index, "weighted_lebesgue": lebesgue, "hardy_norm": hardy,
                     "ratio": hardy / lebesgue if lebesgue > 0 else 0.0})
    return rows


def _sensitivities(experiment: Experiment, certificate: WeightCertificate, count: int, seed: int) -> List[float]:
    catalog = experiment.test_functions(certificate.alpha)
    return [catalog_sensitivity(f, experiment.weight, experiment.p, catalog, experiment.scales)
            for f in smooth_suite(experiment.grid, experiment.m, count, seed)]


def _ratio_bracket(rows: List[Dict]) -> float:
    ratios = [row["ratio"] for row in rows if row["ratio"] > 0]
    if not ratios:
        return 1.0
    return max(ratios) / min(ratios)


def norm_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    certificate = _certificate(ctx)
    rows = _norm_rows(experiment, certificate, ctx.config.suite.count, ctx.seed)
    sensitivities = _sensitivities(experiment, certificate, ctx.config.suite.count, ctx.seed)
    for row, change in zip(rows, sensitivities):
        row["catalog_sensitivity"] = change
    bracket = estq_bracket(experiment.p, experiment.cubes)
    summary = {"estq_bracket": bracket, "ratio_bracket": _ratio_bracket(rows),
               "max_ratio": max(row["ratio"] for row in rows), "members": len(rows),
               "max_catalog_sensitivity": max(sensitivities)}
    ctx.writer.csv("norm.csv", rows)
    ctx.writer.json("norm.json", summary)
    ctx.writer.contract("hardy_norm_finite", all(math.isfinite(row["hardy_norm"]) for row in rows))
    ctx.writer.contract("estq_bracket_finite", math.isfinite(bracket))


# ============================================================================
# MAXIMAL OPERATORS
# ============================================================================

def _equivalence(experiment: Experiment, certificate: WeightCertificate, ctx: CommandContext):
    params = ctx.config.maximal
    alpha = _alpha(ctx, certificate)
    l = params.l or 2.0 * experiment.grid.n / alpha
    suite = smooth_suite(experiment.grid, experiment.m, ctx.config.suite.count, ctx.seed)
    catalog = experiment.test_functions(alpha)
    return equivalence_report(suite, experiment.weight, experiment.p, catalog, params.a, l, experiment.scales)


def _boundedness_operators(experiment: Experiment, certificate: WeightCertificate,
                           ctx: CommandContext) -> Dict[str, Callable]:
    alpha = _alpha(ctx, certificate)
    u = ctx.config.maximal.u or certificate.u
    weight, p = experiment.weight, experiment.p
    return {
        "christ_goldberg": lambda F: christ_goldberg(weight, F, alpha),
        "reducing_cg": lambda F: reducing_cg(weight, F, u, p),
    }


def maximal_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    certificate = _certificate(ctx)
    report = _equivalence(experiment, certificate, ctx)
    ctx.writer.csv("maximal_equivalence.csv", report.table())
    ctx.writer.json("maximal_equivalence.json", {"brackets": report.brackets, "a": report.a,
                                                 "l": report.l, "N": report.N,
                                                 "ordering_holds": report.ordering_holds})
    ctx.writer.contract("pointwise_ordering", report.ordering_holds)

    count, seed = ctx.config.suite.count, _derived_seed(ctx.seed, 1)
    coarse_inputs = random_body_functions(experiment.grid, experiment.m, count, seed)
    coarse_ops = _boundedness_operators(experiment, certificate, ctx)
    fine = experiment.refined() if ctx.config.refine else None
    fine_ops = _boundedness_operators(fine, certificate, ctx) if fine is not None else {}
    fine_inputs = random_body_functions(fine.grid, fine.m, count, seed) if fine is not None else None

    rows = []
    for name, op in coarse_ops.items():
        bounded = boundedness_report(name, op, coarse_inputs, experiment.p, fine_ops.get(name),
                                     fine_inputs, fine.p if fine is not None else None)
        rows.append(bounded.model_dump() | {"growth": bounded.growth})
        ctx.writer.contract(f"{name}_finite", math.isfinite(bounded.max_ratio))
        if bounded.growth is not None:
            ctx.writer.contract(f"{name}_stable", abs(bounded.growth) < BOUNDEDNESS_TOL)

    q = ctx.config.maximal.q
    if q is not None:
        suite = smooth_suite(experiment.grid, experiment.m, count, ctx.seed)
        inner = ExponentProfile.constant(experiment.grid, q)
        bound = variable_maximal_bound(suite, experiment.p, inner)
        rows.append({"operator": "variable", "max_ratio": bound, "refined_ratio": None,
                     "inputs": len(suite), "growth": None})
        ctx.writer.contract("variable_finite", math.isfinite(bound))
    ctx.writer.csv("maximal_boundedness.csv", rows)


# ============================================================================
# ATOMIC DECOMPOSITION
# ============================================================================

def _stem(index: int) -> str:
    return f"{index:03d}"


def _errors_monotone(errors: List[float]) -> bool:
    return all(b <= a * (1.0 + 1e-9) + 1e-15 for a, b in zip(errors, errors[1:]))


def decompose_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    certificate = _certificate(ctx)
    s = _moment_order(ctx, certificate)
    catalog = experiment.test_functions(certificate.alpha)
    suite = smooth_suite(experiment.grid, experiment.m, ctx.config.suite.count, ctx.seed, s)
    params = ctx.config.decomposition

    rows, all_valid, monotone = [], True, True
    for index, f in enumerate(suite):
        decomposition = atomic_decompose(f, experiment.weight, experiment.p, certificate, params,
                                         catalog, experiment.scales)
        reports, C_atom = validate_decomposition(decomposition, experiment.weight, experiment.p)
        summary = decomposition.summary(experiment.p.r, experiment.p, reports)
        offsets = ctx.writer.blocks(f"atoms_{_stem(index)}.bin", [atom.samples for atom in decomposition.atoms])
        ctx.writer.json(f"decomposition_{_stem(index)}.json",
                        {"summary": summary.model_dump(mode="json"), "blocks": offsets,
                         "m": experiment.m, "C_atom": C_atom})
        total, error = reconstruct(decomposition)
        ctx.writer.grid_function(f"reconstruction_{_stem(index)}", total)

        level_errors = [level.residual_error for level in decomposition.levels]
        all_valid &= all(report.passed for report in reports)
        monotone &= _errors_monotone(level_errors)
        rows.append({
            "index": index,
            "atoms": len(decomposition),
            "levels": len(decomposition.levels),
            "relative_error": error,
            "C_atom": C_atom,
            "coefficient_norm": summary.coefficient_norm,
            "hardy_norm": summary.hardy_norm,
            "C_coef": (summary.coefficient_norm / summary.hardy_norm) if summary.hardy_norm else 0.0,
            "exhausted": decomposition.exhausted
        })

    ctx.writer.csv("decompose.csv", rows)
    ctx.writer.contract("atoms_valid", all_valid)
    ctx.writer.contract("level_errors_monotone", monotone)


def reconstruct_command(ctx: CommandContext) -> None:
    """Rebuild every decomposition from its atom dump and compare with the stored reconstruction"""
    grid = ctx.experiment.grid
    summaries = sorted(ctx.out_dir.glob("decomposition_*.json"))
    if not summaries:
        raise ConfigInvalid("no decomposition outputs found; run decompose first", out_dir=str(ctx.out_dir))

    rows, bit_exact = [], True
    for path in summaries:
        stored = read_json(path)
        if stored.get("config_hash") != ctx.config_hash:
            raise ConfigInvalid("decomposition outputs belong to another configuration", path=str(path))
        data = stored["data"]
        stem = path.stem.split("_")[-1]
        blocks = ctx.out_dir / f"atoms_{stem}.bin"
        m = int(data["m"])
        total = np.zeros((grid.size, m))
        for record, (offset, count) in zip(data["summary"]["atoms"], data["blocks"]):
            total += record["lam"] * load_block(blocks, offset, count).reshape(grid.size, m)
        ctx.writer.grid_function(f"reconstruct_{stem}", GridFunction.vector(grid, total))

        original = ctx.out_dir / f"reconstruction_{stem}.bin"
        rebuilt = ctx.out_dir / f"reconstruct_{stem}.bin"
        same = original.exists() and sha256_file(original) == sha256_file(rebuilt)
        bit_exact &= same
        rows.append({"index": int(stem), "atoms": len(data["blocks"]), "bit_exact": same})

    ctx.writer.csv("reconstruct.csv", rows)
    ctx.writer.contract("reconstruction_bit_exact", bit_exact)


def validate_atoms_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    certificate = _certificate(ctx)
    s = _moment_order(ctx, certificate)
    count = ctx.config.suite.count
    atoms = synthetic_atom_family(experiment.grid, experiment.weight, experiment.p, s, count, ctx.seed)
    reports = get_cube_processor().map_cubes(
        lambda atom: validate_atom(atom, experiment.weight, experiment.p), atoms)
    C_atom = max((report.a_size for report in reports), default=0.0)
    rows = [{"index": i, "lam": atom.lam, "edge": atom.cube.edge, **report.model_dump()}
            for i, (atom, report) in enumerate(zip(atoms, reports))]
    ctx.writer.csv("atoms.csv", rows)

    catalog = experiment.test_functions(certificate.alpha)
    combined = superpose(experiment.grid, atoms)
    hardy = hardy_norm(combined, experiment.weight, experiment.p, catalog=catalog, scales=experiment.scales)
    coefficients = coefficient_norm([(atom.lam, atom.cube) for atom in atoms], experiment.p.r, experiment.p)
    ctx.writer.json("atoms.json", {"C_atom": C_atom, "hardy_norm": hardy, "coefficient_norm": coefficients,
                                   "C_rec": hardy / coefficients if coefficients > 0 else 0.0, "s": s})

    refined = None
    if ctx.config.refine:
        fine = experiment.refined()
        refined = (fine.weight, fine.p)
    fs = fs_substitute_checks(experiment.weight, experiment.p, certificate, count=count,
                              seed=_derived_seed(ctx.seed, 2), refined=refined)
    ctx.writer.csv("fs_checks.csv", [row.model_dump() for row in fs.rows])
    ctx.writer.json("fs_checks.json", {"L": fs.L, "r": fs.r, "max_decay_ratio": fs.max_decay_ratio,
                                       "max_operator_ratio": fs.max_operator_ratio,
                                       "refinement_growth": fs.refinement_growth})

    ctx.writer.contract("atoms_valid", all(report.passed for report in reports))
    ctx.writer.contract("vector_inequalities", fs.passed)


# ============================================================================
# CALDERON-ZYGMUND OPERATORS AND DUALITY
# ============================================================================

def _pipeline_atoms(experiment: Experiment, ctx: CommandContext, certificate: WeightCertificate,
                    suite: List[GridFunction]) -> List[Atom]:
    """Atoms produced by decomposing the first few moment-free suite members"""
    catalog = experiment.test_functions(certificate.alpha)
    atoms = []
    for f in suite[:PIPELINE_MEMBERS]:
        decomposition = atomic_decompose(f, experiment.weight, experiment.p, certificate,
                                         ctx.config.decomposition, catalog, experiment.scales)
        atoms.extend(decomposition.atoms)
    return atoms


def _synthetic_atoms(experiment: Experiment, s: int, seed: int) -> List[Atom]:
    """Bumps on small cubes at the origin, then random synthetic atoms"""
    grid = experiment.grid
    rng = np.random.Generator(np.random.Philox(seed))
    origin = (0.0,) * grid.n
    k_low = int(math.log2(4 * grid.h))
    atoms = []
    for k in range(k_low, k_low + DECAY_EDGES):
        cube = dyadic_containing(k, np.full(grid.n, -0.5 * 2.0 ** k), origin)
        atoms.append(bump_atom(grid, experiment.weight, experiment.p, cube, s, rng))
    atoms.extend(synthetic_atom_family(grid, experiment.weight, experiment.p, s,
                                       experiment.config.suite.count, seed))
    return atoms


def _decay_row(T: CZOperator, atom: Atom, index: int, source: str, experiment: Experiment,
               per_octave: int) -> Dict:
    row = {"index": index, "source": source, "level": atom.level, "edge": atom.cube.edge,
           "slope": None, "target_slope": None, "passed": None, "exemption": ""}
    try:
        fit = atom_image_decay(T, atom, experiment.weight, experiment.p, per_octave)
    except InsufficientFarField as e:
        logger.debug(f"Skipping decay fit for {source} atom {index}: {e}")
        row["exemption"] = f"far field too short: {e.details.get('radii')} radii < {e.details.get('required')}"
        return row
    row.update(slope=fit.slope, target_slope=fit.target_slope, passed=fit.passed)
    if fit.slope is None:
        row["exemption"] = f"envelope vanished beyond 4 r_Q ({len(fit.radii)} usable shells)"
    elif not fit.passed:
        row["exemption"] = (f"envelope at grid noise: min {min(fit.envelope):.3e} over "
                            f"{len(fit.radii)} shells up to r = {max(fit.radii):.3f}")
    return row


def cz_bench_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    spec = ctx.config.kernel
    kernel = kernel_by_name(spec.name)
    T = CZOperator(kernel, spec.truncation)
    kernel_certificate = kernel_certify(kernel, spec.gamma_max, seed=ctx.seed)
    ctx.writer.json("kernel_certificate.json", kernel_certificate)
    ctx.writer.contract("kernel_antisymmetric", kernel_certificate.antisymmetry_error <= ANTISYMMETRY_TOL)

    certificate = _certificate(ctx)
    s = _moment_order(ctx, certificate)
    count = ctx.config.suite.count
    suite = smooth_suite(experiment.grid, experiment.m, count, ctx.seed, s)
    refined = None
    if ctx.config.refine:
        fine = experiment.refined()
        refined = (fine.weight, fine.p, smooth_suite(fine.grid, fine.m, count, ctx.seed, s))
    report = cz_bench(T, experiment.weight, experiment.p, suite, s,
                      experiment.test_functions(certificate.alpha), experiment.scales, refined)
    ctx.writer.csv("cz_bench.csv", [row.model_dump() for row in report.rows])
    ctx.writer.contract("h_to_l_finite", math.isfinite(report.max_h_to_l))
    if report.growth is not None:
        ctx.writer.contract("h_to_l_stable", report.growth < STABILITY_TOL)

    pipeline = _pipeline_atoms(experiment, ctx, certificate, suite)
    logger.info(f"🔬 Checking {len(pipeline)} pipeline atoms under {spec.name}")
    moment_rows = []
    for index, atom in enumerate(pipeline):
        moments = moment_preservation(T, GridFunction.vector(experiment.grid, atom.samples), atom.s)
        moment_rows.append({"index": index, "level": atom.level, "edge": atom.cube.edge, "s": atom.s,
                            "max_moment": moments.max_moment, "scale": moments.scale,
                            "tail": moments.tail, "passed": moments.passed})
    ctx.writer.csv("cz_moments.csv", moment_rows)
    ctx.writer.contract("moments_preserved", all(row["passed"] for row in moment_rows))

    decay_rows = [_decay_row(T, atom, index, "pipeline", experiment, spec.radii_per_octave)
                  for index, atom in enumerate(pipeline)]
    synthetic = _synthetic_atoms(experiment, s, _derived_seed(ctx.seed, 3))
    decay_rows.extend(_decay_row(T, atom, index, "synthetic", experiment, spec.radii_per_octave)
                      for index, atom in enumerate(synthetic))
    ctx.writer.csv("cz_decay.csv", decay_rows)

    fitted = [row for row in decay_rows if row["source"] == "pipeline" and row["slope"] is not None]
    if not fitted:
        fitted = [row for row in decay_rows if row["slope"] is not None]
        logger.warning("⚠️ No pipeline atom left room for a far-field decay fit; using synthetic atoms")
    if fitted:
        passed = sum(1 for row in fitted if row["passed"])
        ctx.writer.contract("far_field_decay", passed >= DECAY_PASS_FRACTION * len(fitted))
    else:
        logger.warning("⚠️ No atom left room for a far-field decay fit")


def _duality(experiment: Experiment, ctx: CommandContext, certificate: WeightCertificate, s: int):
    count = ctx.config.suite.count
    grid, m = experiment.grid, experiment.m
    f_suite = smooth_suite(grid, m, count, ctx.seed, s)
    g_suite = smooth_suite(grid, m, count, _derived_seed(ctx.seed, 4))
    polynomials = list(polynomial_suite(grid, m, s, 2, _derived_seed(ctx.seed, 5)))
    report = duality_pairing_check(f_suite, g_suite + polynomials, experiment.weight, experiment.p,
                                   ctx.config.kernel.q, s, experiment.cubes,
                                   experiment.test_functions(certificate.alpha), experiment.scales)
    return report, polynomials


def duality_command(ctx: CommandContext) -> None:
    experiment = ctx.experiment
    certificate = _certificate(ctx)
    s = _moment_order(ctx, certificate)
    report, polynomials = _duality(experiment, ctx, certificate, s)
    if ctx.config.refine:
        fine_report, _ = _duality(experiment.refined(), ctx, certificate, s)
        report.refined_max = fine_report.max_ratio

    worst_polynomial = max(
        campanato_norm(g, experiment.weight, experiment.p, ctx.config.kernel.q, s, experiment.cubes)
        / max(1.0, float(np.abs(g.samples).max()))
        for g in polynomials
    )
    ctx.writer.csv("duality.csv", [row.model_dump() for row in report.rows])
    ctx.writer.json("duality.json", {"s": report.s, "q": report.q, "max_ratio": report.max_ratio,
                                     "refined_max": report.refined_max,
                                     "polynomial_campanato": worst_polynomial})
    ctx.writer.contract("pairing_bounded", math.isfinite(report.max_ratio))
    ctx.writer.contract("polynomials_annihilated", worst_polynomial <= POLYNOMIAL_TOL)
    change = _relative_change(report.max_ratio, report.refined_max)
    if change is not None:
        ctx.writer.contract("pairing_stable", change < STABILITY_TOL)


# ============================================================================
# RESOLUTION SWEEP
# ============================================================================

def _sweep_quantities(experiment: Experiment, ctx: CommandContext) -> Dict[str, Optional[float]]:
    certificate = _certify(experiment, refine=False)
    rows = _norm_rows(experiment, certificate, ctx.config.suite.count, ctx.seed)
    equivalence = _equivalence(experiment, certificate, ctx)
    quantities = {
        "ap_char": certificate.ap_char,
        "apinfty_char": certificate.apinfty_char,
        "d1": certificate.d1,
        "d2": certificate.d2,
        "estq_bracket": estq_bracket(experiment.p, experiment.cubes),
        "hardy_over_lebesgue": max(row["ratio"] for row in rows),
    }
    quantities.update({f"bracket_{name}": value for name, value in equivalence.brackets.items()})
    return quantities


def sweep_command(ctx: CommandContext) -> None:
    """certify-weight, norm and maximal equivalence at J and J + 1 with per-quantity change"""
    grid = ctx.config.grid
    top = 12 if grid.n == 1 else 9
    if grid.J + 1 > top:
        raise ConfigInvalid(f"sweep needs J + 1 <= {top}", field="grid.J", value=grid.J)
    coarse = _sweep_quantities(ctx.experiment, ctx)
    fine = _sweep_quantities(ctx.experiment.refined(), ctx)

    rows = []
    for name, value in coarse.items():
        change = _relative_change(value, fine.get(name))
        stable = change is None or change < STABILITY_TOL
        rows.append({"quantity": name, "J": grid.J, "coarse": value, "fine": fine.get(name),
                     "relative_change": change, "stable": stable})
        ctx.writer.contract(f"{name}_stable", stable)
    ctx.writer.csv("sweep.csv", rows)


COMMANDS: Dict[str, Callable[[CommandContext], None]] = {
    "certify-weight": certify_weight_command,
    "norm": norm_command,
    "maximal": maximal_command,
    "decompose": decompose_command,
    "validate-atoms": validate_atoms_command,
    "reconstruct": reconstruct_command,
    "cz-bench": cz_bench_command,
    "duality": duality_command,
    "sweep": sweep_command,
}


def run(command: str, config: ExperimentConfig, out_dir: Optional[str] = None,
        seed: Optional[int] = None, threads: Optional[int] = None) -> RunManifest:
    """Execute one command and write its manifest"""
    if command not in COMMANDS:
        raise ConfigInvalid("unknown command", command=command, known=sorted(COMMANDS))
    config = config.with_seed(seed)
    run_seed = config.suite.seed
    configure_processor(threads)
    root = Path(get_output_root(out_dir or config.output_dir))
    digest = config_hash(config, run_seed)

    logger.info(f"🚀 Running {command} (config {digest[:12]}, seed {run_seed}) into {root}")
    writer = OutputWriter(root, digest, command)
    ctx = CommandContext(Experiment(config), writer, root, digest)
    collector = get_metrics_collector()
    started = time.perf_counter()
    with collector.track(command) as state:
        COMMANDS[command](ctx)
        state["status"] = "ok" if writer.record.passed else "contract_failed"
    writer.record.wall_seconds = time.perf_counter() - started

    manifest = RunManifest(config_hash=digest, seed=run_seed, commands=[writer.record],
                           environment=get_environment_info(), metrics=collector.get_summary())
    write_manifest(manifest, root, f"manifest_{command.replace('-', '_')}.json")
    status = "✅" if manifest.passed else "⚠️"
    logger.info(f"{status} {command} finished: {len(writer.record.outputs)} outputs, "
                f"contracts {'passed' if manifest.passed else 'failed'}")
    return manifest
