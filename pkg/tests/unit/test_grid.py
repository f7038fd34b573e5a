#!/usr/bin/env python3
"""
Unit tests for grids, cubes, dyadic lattices and grid functions
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projects.hardylab.core.errors import EmptyCube, GridConfigError, GridMismatch, NonFiniteSamples
from projects.hardylab.core.grid import (
    Cube,
    Grid,
    GridFunction,
    average,
    discrete_measure,
    dyadic_containing,
    dyadic_cover,
    dyadic_cubes,
    integrate,
    lattice_shifts,
    monomial_exponents,
    monomials,
    pair,
)


class TestGrid:
    """Test grid construction and geometry"""

    def test_basic_geometry(self, grid_1d):
        """Midpoints, spacing and volume"""
        assert grid_1d.per_axis == 32
        assert grid_1d.h == pytest.approx(0.25)
        assert grid_1d.volume == pytest.approx(8.0)
        assert grid_1d.points[0, 0] == pytest.approx(-4.0 + 0.125)
        assert grid_1d.points[-1, 0] == pytest.approx(4.0 - 0.125)

    def test_points_are_c_ordered(self, grid_2d):
        """Second coordinate varies fastest"""
        points = grid_2d.points
        assert points.shape == (256, 2)
        assert points[0, 0] == points[1, 0]
        assert points[1, 1] > points[0, 1]

    @pytest.mark.parametrize("n,J,box", [(3, 5, 4.0), (1, 3, 4.0), (1, 5, 3.0), (2, 5, -2.0)])
    def test_invalid_parameters(self, n, J, box):
        """Dimension, resolution and box must satisfy the invariants"""
        with pytest.raises(GridConfigError):
            Grid(n, J, box)

    def test_refine_halves_spacing(self, grid_1d):
        fine = grid_1d.refine()
        assert fine.J == grid_1d.J + 1
        assert fine.h == pytest.approx(grid_1d.h / 2)

    def test_index_of(self, grid_2d):
        """index_of finds the cell of its own midpoint"""
        for index in (0, 17, 255):
            assert grid_2d.index_of(grid_2d.points[index]) == index

    def test_boundary_mask(self, grid_2d):
        assert grid_2d.boundary_mask.sum() == 4 * 16 - 4

    def test_to_dict(self, grid_1d):
        assert grid_1d.to_dict() == {"n": 1, "J": 5, "L_box": 4.0}


class TestCube:
    """Test cubes and the shifted dyadic lattices"""

    def test_half_open_mask(self, grid_1d):
        """A cube whose edges fall on cell boundaries holds whole cells only"""
        cube = Cube.from_lower([0.0], 1.0)
        assert cube.cell_count(grid_1d) == 4
        assert cube.contains_point([0.0])
        assert not cube.contains_point([1.0])

    def test_dilate_and_star(self):
        cube = Cube((0.5,), 2.0)
        assert cube.dilate(3.0).edge == pytest.approx(6.0)
        assert cube.star().edge == pytest.approx(2.25)
        assert cube.star().center == cube.center

    def test_non_positive_edge(self):
        with pytest.raises(GridConfigError):
            Cube((0.0,), 0.0)

    def test_dyadic_corner(self):
        """Lower corner is 2^k (m + (-1)^k t)"""
        odd = Cube.dyadic(1, [0], [1.0 / 3.0])
        assert odd.lower[0] == pytest.approx(-2.0 / 3.0)
        assert odd.scale == -1
        even = Cube.dyadic(2, [1], [1.0 / 3.0])
        assert even.lower[0] == pytest.approx(4.0 * (1 + 1.0 / 3.0))

    def test_lattice_shifts(self):
        assert lattice_shifts(1) == ((0.0,), (1.0 / 3.0,))
        shifts = lattice_shifts(2)
        assert len(shifts) == 4
        assert shifts[0] == (0.0, 0.0)

    def test_dyadic_cubes_tile_box(self, grid_1d):
        """Unshifted cubes of one edge partition the box"""
        layer = dyadic_cubes(grid_1d, 1.0, (0.0,))
        assert len(layer) == 8
        counts = sum(cube.mask(grid_1d).astype(int) for cube in layer)
        assert np.all(counts == 1)
        assert all(cube.inside_box(grid_1d) for cube in layer)

    def test_dyadic_containing(self):
        cube = dyadic_containing(0, np.array([0.4]), (0.0,))
        assert cube.contains_point([0.4])
        assert cube.edge == 1.0

    @settings(max_examples=60, deadline=None)
    @given(
        center=st.floats(min_value=-3.0, max_value=3.0),
        edge=st.floats(min_value=0.05, max_value=2.0),
    )
    def test_dyadic_cover_contains_and_is_comparable(self, center, edge):
        """Some shifted dyadic cube of comparable size contains any cube"""
        cube = Cube((center,), edge)
        shift, cover = dyadic_cover(cube)
        assert cover.contains_cube(cube)
        assert cover.edge <= 16.0 * edge
        assert shift in lattice_shifts(1)

    def test_intersects_and_contains(self):
        a = Cube((0.0,), 2.0)
        b = Cube((0.5,), 1.0)
        c = Cube((3.0,), 1.0)
        assert a.contains_cube(b)
        assert a.intersects(b)
        assert not a.intersects(c)

    def test_dict_round_trip_keeps_lattice(self):
        cube = Cube.dyadic(-1, [3, -2], (0.0, 1.0 / 3.0))
        assert Cube.from_dict(cube.to_dict()) == cube

    def test_mask_dimension_mismatch(self, grid_2d):
        with pytest.raises(GridMismatch):
            Cube((0.0,), 1.0).mask(grid_2d)


class TestGridFunction:
    """Test sampled functions and quadrature"""

    def test_shape_checked(self, grid_1d):
        with pytest.raises(GridMismatch):
            GridFunction(grid_1d, np.zeros(10))
        with pytest.raises(GridMismatch):
            GridFunction(grid_1d, np.zeros(grid_1d.size), "vector")

    def test_non_finite_rejected(self, grid_1d):
        values = np.zeros(grid_1d.size)
        values[3] = np.nan
        with pytest.raises(NonFiniteSamples) as exc:
            GridFunction.scalar(grid_1d, values)
        assert exc.value.details["sample"] == 3

    def test_vector_magnitude(self, grid_1d):
        values = np.tile([3.0, 4.0], (grid_1d.size, 1))
        f = GridFunction.vector(grid_1d, values)
        assert f.m == 2
        assert np.allclose(f.magnitude(), 5.0)

    def test_arithmetic(self, grid_1d):
        f = GridFunction.scalar(grid_1d, 1.0)
        g = GridFunction.scalar(grid_1d, 2.0)
        assert np.allclose((f + g).samples, 3.0)
        assert np.allclose((g - f).samples, 1.0)
        assert np.allclose((2.0 * f).samples, 2.0)

    def test_mixed_grids(self, grid_1d):
        f = GridFunction.scalar(grid_1d, 1.0)
        g = GridFunction.scalar(grid_1d.refine(), 1.0)
        with pytest.raises(GridMismatch):
            f + g

    def test_restrict(self, grid_1d):
        f = GridFunction.scalar(grid_1d, 1.0).restrict(Cube((0.0,), 2.0))
        assert f.samples.sum() == 8

    def test_integrate_and_average(self, grid_1d):
        cube = Cube((0.0,), 2.0)
        f = GridFunction.scalar(grid_1d, grid_1d.points[:, 0] ** 2)
        assert integrate(GridFunction.scalar(grid_1d, 1.0), cube) == pytest.approx(2.0)
        assert average(f, cube) == pytest.approx(np.mean(grid_1d.points[cube.mask(grid_1d), 0] ** 2))
        assert discrete_measure(cube, grid_1d) == pytest.approx(2.0)

    def test_empty_cube(self, grid_1d):
        tiny = Cube((0.0,), 0.01)
        f = GridFunction.scalar(grid_1d, 1.0)
        with pytest.raises(EmptyCube):
            integrate(f, tiny)
        with pytest.raises(EmptyCube):
            average(f, tiny)

    def test_pair(self, grid_1d):
        f = GridFunction.scalar(grid_1d, 2.0)
        g = GridFunction.scalar(grid_1d, 3.0)
        assert pair(f, g) == pytest.approx(6.0 * grid_1d.volume)


class TestMonomials:
    """Test polynomial bases"""

    def test_exponent_count(self):
        assert len(monomial_exponents(1, 3)) == 4
        assert len(monomial_exponents(2, 2)) == 6
        assert monomial_exponents(2, 1)[0] == (0, 0)

    def test_centered_and_scaled(self):
        points = np.array([[1.0], [3.0]])
        basis = monomials(points, 2, center=[1.0], scale=2.0)
        assert np.allclose(basis, [[1.0, 0.0, 0.0], [1.0, 1.0, 1.0]])

    def test_degree_zero(self, grid_2d):
        basis = monomials(grid_2d.points, 0)
        assert basis.shape == (grid_2d.size, 1)
        assert math.isclose(float(basis.sum()), grid_2d.size)
