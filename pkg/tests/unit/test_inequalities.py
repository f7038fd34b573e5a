#!/usr/bin/env python3
"""
Unit tests for the weighted vector-valued inequality checks
"""

import math

import numpy as np
import pytest

from projects.hardylab.core.grid import Cube
from projects.hardylab.core.vexp import ExponentProfile
from projects.hardylab.decomp.inequalities import (
    FamilyMember,
    decay_sides,
    fs_substitute_checks,
    operator_sides,
    random_family,
)
from projects.hardylab.weights.catalog import dyadic_catalog
from projects.hardylab.weights.reducing import certify_weight
from projects.hardylab.weights.weights import weight_from_preset


@pytest.fixture
def certificate(grid_fine, fine_identity, fine_p_two):
    return certify_weight(fine_identity, fine_p_two, dyadic_catalog(grid_fine, min_edge=0.5))


class TestFamilies:
    """Test random cube families"""

    def test_member_samples(self, grid_fine):
        member = FamilyMember(2.0, Cube((0.0,), 1.0), (1.0, -0.5), (0.0,))
        samples = member.samples(grid_fine)
        inside = member.cube.mask(grid_fine)
        assert np.allclose(samples[inside], [1.0, -0.5])
        assert np.allclose(samples[~inside], 0.0)

    def test_random_family(self, grid_fine):
        rng = np.random.Generator(np.random.Philox(1))
        family = random_family(grid_fine, 2, rng)
        assert 1 <= len(family) <= 5
        for member in family:
            assert member.cube.cell_count(grid_fine) >= 4
            assert member.lam > 0
            assert len(member.vector) == 2


class TestSides:
    """Test the two sides of each inequality"""

    def test_zero_coefficient_ignored(self, fine_identity, fine_p_two):
        family = [FamilyMember(0.0, Cube((0.0,), 1.0), (1.0, 0.0), (0.0,))]
        assert decay_sides(family, fine_identity, fine_p_two, 3.0, 1.0) == (0.0, 0.0)
        assert operator_sides(family, fine_identity, fine_p_two, 1.0) == (0.0, 0.0)

    def test_decay_dominates_single_cube(self, fine_identity, fine_p_two):
        """The decay envelope is at least (2/3)^L on the cube"""
        family = [FamilyMember(1.5, Cube((0.0,), 1.0), (1.0, 0.0), (0.0,))]
        left, right = decay_sides(family, fine_identity, fine_p_two, 3.0, 1.0)
        assert right == pytest.approx(1.5, rel=1e-9)
        assert left >= right * (2.0 / 3.0) ** 3 * (1 - 1e-3)


class TestChecks:
    """Test the assembled report"""

    def test_report(self, fine_identity, fine_p_two, certificate):
        report = fs_substitute_checks(fine_identity, fine_p_two, certificate, count=4, seed=3)
        assert len(report.rows) == 4
        assert report.r == 1.0
        assert report.L == pytest.approx(certificate.d2 + 2.0)
        assert math.isfinite(report.max_decay_ratio)
        assert math.isfinite(report.max_operator_ratio)
        assert report.refinement_growth is None

    def test_deterministic(self, fine_identity, fine_p_two, certificate):
        first = fs_substitute_checks(fine_identity, fine_p_two, certificate, count=3, seed=8)
        second = fs_substitute_checks(fine_identity, fine_p_two, certificate, count=3, seed=8)
        assert first.rows == second.rows

    @pytest.mark.slow
    def test_refined_replay(self, grid_fine, fine_identity, fine_p_two, certificate):
        fine_grid = grid_fine.refine()
        refined = (weight_from_preset(fine_grid, "identity", {"m": 2}), ExponentProfile.constant(fine_grid, 2.0))
        report = fs_substitute_checks(fine_identity, fine_p_two, certificate, count=2, seed=5, refined=refined)
        assert len(report.refined_rows) == 2
        assert report.refinement_growth is not None
