#!/usr/bin/env python3
"""
Integration tests: weight certificate, atomic decomposition, Hardy norms and CZ images together
"""

import numpy as np
import pytest

from projects.hardylab.core.grid import Grid
from projects.hardylab.core.vexp import ExponentProfile
from projects.hardylab.czops.kernels import kernel_by_name
from projects.hardylab.czops.operators import CZOperator, apply, isometry_ratio, moment_preservation
from projects.hardylab.decomp.atoms import coefficient_norm
from projects.hardylab.decomp.models import DecompositionParams
from projects.hardylab.decomp.pipeline import atomic_decompose, reconstruct, validate_decomposition
from projects.hardylab.maximal.convex_maximal import hardy_norm
from projects.hardylab.maximal.experiments import smooth_suite
from projects.hardylab.maximal.schwartz_catalog import build_catalog
from projects.hardylab.weights.catalog import dyadic_catalog
from projects.hardylab.weights.reducing import certify_weight
from projects.hardylab.weights.weights import weight_from_preset

pytestmark = [pytest.mark.integration, pytest.mark.slow]

SCALES = [0.125, 0.25, 0.5, 1.0]


@pytest.fixture(scope="module")
def setting():
    grid = Grid(1, 6, 4.0)
    weight = weight_from_preset(grid, "diag_power", {"a": [0.5, 0.25]})
    p = ExponentProfile.constant(grid, 1.0)
    certificate = certify_weight(weight, p, dyadic_catalog(grid, min_edge=0.5))
    return grid, weight, p, certificate


class TestDecompositionPipeline:
    """Decompose a moment-free suite member and check what comes out"""

    def test_certificate_is_usable(self, setting):
        _, _, _, certificate = setting
        assert 0 < certificate.alpha <= 1
        assert certificate.ap_char is not None
        assert certificate.minimal_moment_order() >= 0

    def test_decomposition_is_exact_and_valid(self, setting):
        grid, weight, p, certificate = setting
        f = smooth_suite(grid, 2, 1, seed=21, s=0)[0]
        decomposition = atomic_decompose(f, weight, p, certificate,
                                         DecompositionParams(s=0, K_levels=3, level_fraction=0.05),
                                         build_catalog(1, 1), SCALES)
        total, error = reconstruct(decomposition)
        assert np.allclose(total.samples + decomposition.residual, f.samples, atol=1e-10)
        assert error >= 0.0
        reports, C_atom = validate_decomposition(decomposition, weight, p)
        assert all(report.support_ok and report.moments_ok for report in reports)
        assert np.isfinite(C_atom)

    def test_coefficients_bound_hardy_norm_of_atoms(self, setting):
        grid, weight, p, certificate = setting
        f = smooth_suite(grid, 2, 1, seed=22, s=0)[0]
        decomposition = atomic_decompose(f, weight, p, certificate,
                                         DecompositionParams(s=0, K_levels=2, level_fraction=0.05),
                                         build_catalog(1, 1), SCALES)
        total, _ = reconstruct(decomposition)
        hardy = hardy_norm(total, weight, p, catalog=build_catalog(1, 1), scales=SCALES)
        coefficients = coefficient_norm([(atom.lam, atom.cube) for atom in decomposition.atoms], p.r, p)
        assert hardy >= 0.0
        if decomposition.atoms:
            assert coefficients > 0.0
            assert hardy / coefficients < 1e3

    def test_hilbert_images_of_atoms_are_contractive(self, setting):
        grid, weight, p, certificate = setting
        f = smooth_suite(grid, 2, 1, seed=23, s=0)[0]
        decomposition = atomic_decompose(f, weight, p, certificate,
                                         DecompositionParams(s=0, K_levels=2, level_fraction=0.05),
                                         build_catalog(1, 1), SCALES)
        T = CZOperator(kernel_by_name("hilbert"))
        for atom in decomposition.atoms[:3]:
            image = apply(T, atom.as_grid_function(grid))
            assert image.samples.shape == atom.samples.shape
            assert isometry_ratio(T, atom.as_grid_function(grid)) <= 1.0 + 1e-9

    def test_hilbert_preserves_moments_of_pipeline_atoms(self, setting):
        grid, weight, p, certificate = setting
        f = smooth_suite(grid, 2, 1, seed=23, s=0)[0]
        decomposition = atomic_decompose(f, weight, p, certificate,
                                         DecompositionParams(s=0, K_levels=2, level_fraction=0.05),
                                         build_catalog(1, 1), SCALES)
        T = CZOperator(kernel_by_name("hilbert"))
        for atom in decomposition.atoms:
            report = moment_preservation(T, atom.as_grid_function(grid), atom.s)
            assert report.passed, report


@pytest.fixture(scope="module")
def identity_setting():
    grid = Grid(1, 6, 4.0)
    weight = weight_from_preset(grid, "identity", {})
    p = ExponentProfile.constant(grid, 1.0)
    certificate = certify_weight(weight, p, dyadic_catalog(grid, min_edge=0.5))
    return grid, weight, p, certificate


class TestRoundTrip:
    """Reconstruction from the atoms of the identity weight under p = 1"""

    @pytest.mark.parametrize("seed", [21, 22, 23])
    def test_reconstruction_error_is_small(self, identity_setting, seed):
        grid, weight, p, certificate = identity_setting
        f = smooth_suite(grid, 2, 1, seed=seed, s=0)[0]
        decomposition = atomic_decompose(f, weight, p, certificate,
                                         DecompositionParams(s=0, K_levels=3, level_fraction=0.05),
                                         build_catalog(1, 1), SCALES)
        _, error = reconstruct(decomposition)
        assert error <= 1e-3

    @pytest.mark.parametrize("seed", [21, 22, 23])
    def test_level_errors_do_not_increase(self, identity_setting, seed):
        grid, weight, p, certificate = identity_setting
        f = smooth_suite(grid, 2, 1, seed=seed, s=0)[0]
        decomposition = atomic_decompose(f, weight, p, certificate,
                                         DecompositionParams(s=0, K_levels=3, level_fraction=0.05),
                                         build_catalog(1, 1), SCALES)
        errors = [level.residual_error for level in decomposition.levels if level.residual_error is not None]
        for before, after in zip(errors, errors[1:]):
            assert after <= before * (1.0 + 1e-9) + 1e-15
