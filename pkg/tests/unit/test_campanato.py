#!/usr/bin/env python3
"""
Unit tests for the weighted Campanato norm and the duality pairing check
"""

import math

import numpy as np
import pytest

from projects.hardylab.core.errors import NotInP
from projects.hardylab.core.grid import Cube, GridFunction
from projects.hardylab.core.vexp import ExponentProfile, indicator_norm
from projects.hardylab.czops.campanato import (
    campanato_norm,
    cube_oscillation,
    duality_pairing_check,
    natural_projection,
    polynomial_suite,
)
from projects.hardylab.maximal.experiments import smooth_suite
from projects.hardylab.maximal.schwartz_catalog import build_catalog

CATALOG = [Cube((0.0,), 1.0), Cube((-1.0,), 2.0), Cube((1.5,), 1.0), Cube((0.0,), 4.0)]


@pytest.fixture
def p_one(grid_fine) -> ExponentProfile:
    return ExponentProfile.constant(grid_fine, 1.0)


class TestProjection:
    """Test the natural polynomial projection"""

    def test_reproduces_polynomials(self, grid_fine):
        cube = Cube((0.5,), 2.0)
        points = grid_fine.points[cube.mask(grid_fine)]
        values = np.stack([2.0 - points[:, 0], points[:, 0] ** 2], axis=1)
        assert np.allclose(natural_projection(values, points, cube, 2), values)

    def test_negative_order(self, grid_fine):
        values = np.ones((5, 2))
        assert np.all(natural_projection(values, grid_fine.points[:5], Cube((0.0,), 1.0), -1) == 0)


class TestCampanatoNorm:
    """Test oscillation on cubes"""

    def test_polynomials_are_annihilated(self, grid_fine, fine_identity, p_one):
        for g in polynomial_suite(grid_fine, 2, 1, 3, seed=2):
            assert campanato_norm(g, fine_identity, p_one, 2.0, 1, CATALOG) < 1e-10

    def test_oscillation_of_constant_without_projection(self, grid_fine, fine_identity, p_one):
        g = GridFunction.vector(grid_fine, np.tile([3.0, 4.0], (grid_fine.size, 1)))
        cube = Cube((0.0,), 1.0)
        value = cube_oscillation(g, fine_identity, p_one, cube, 2.0, -1)
        expected = cube.measure / indicator_norm(p_one, cube) * 5.0
        assert value == pytest.approx(expected, rel=1e-3)

    def test_empty_cube(self, grid_fine, fine_identity, p_one):
        g = GridFunction.vector(grid_fine, np.ones((grid_fine.size, 2)))
        assert cube_oscillation(g, fine_identity, p_one, Cube((0.0,), 0.01), 2.0, 0) == 0.0

    def test_random_function_oscillates(self, grid_fine, fine_identity, p_one):
        rng = np.random.Generator(np.random.Philox(9))
        g = GridFunction.vector(grid_fine, rng.standard_normal((grid_fine.size, 2)))
        assert campanato_norm(g, fine_identity, p_one, 2.0, 0, CATALOG) > 0.1

    def test_polynomial_suite_deterministic(self, grid_fine):
        first = polynomial_suite(grid_fine, 2, 1, 2, seed=4)
        second = polynomial_suite(grid_fine, 2, 1, 2, seed=4)
        assert all(np.array_equal(a.samples, b.samples) for a, b in zip(first, second))


class TestDuality:
    """Test the Hardy-Campanato pairing check"""

    def test_needs_small_exponent(self, grid_fine, fine_identity, fine_p_two):
        with pytest.raises(NotInP):
            duality_pairing_check([], [], fine_identity, fine_p_two, 2.0, 0, CATALOG)

    def test_pairing_report(self, grid_fine, fine_identity, p_one):
        f_suite = smooth_suite(grid_fine, 2, 2, seed=31, s=0)
        rng = np.random.Generator(np.random.Philox(32))
        g_suite = [GridFunction.vector(grid_fine, rng.standard_normal((grid_fine.size, 2)))]
        g_suite.extend(polynomial_suite(grid_fine, 2, 0, 1, seed=33))
        report = duality_pairing_check(f_suite, g_suite, fine_identity, p_one, 2.0, 0, CATALOG,
                                       build_catalog(1, 2), [0.125, 0.25, 0.5, 1.0])
        assert len(report.rows) == 4
        polynomial_rows = [row for row in report.rows if row.g_index == 1]
        assert all(row.cancelled and row.ratio == 0.0 for row in polynomial_rows)
        random_rows = [row for row in report.rows if row.g_index == 0]
        assert all(0.0 < row.ratio < math.inf for row in random_rows)
        assert math.isfinite(report.max_ratio)
