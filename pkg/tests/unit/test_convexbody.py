#!/usr/bin/env python3
"""
Unit tests for convex bodies and body-valued grid functions
"""

import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projects.hardylab.convexbody.convexbody import (
    CBGridFunction,
    ConvexBody,
    augment_with_ball,
    ball_generators,
    body_norms,
    body_support,
    cb_reducing_operator,
    hull_union,
    prune_generators,
    segment,
    transform,
)
from projects.hardylab.core.ellipsoid import direction_mesh, john_bound
from projects.hardylab.core.errors import EmptyCube, GridMismatch, NotAbsorbing
from projects.hardylab.core.grid import Cube


class TestConvexBody:
    """Test generator-based symmetric bodies"""

    def test_segment(self):
        body = segment(np.array([3.0, 4.0]))
        assert body.norm() == pytest.approx(5.0)
        assert body.support(np.array([1.0, 0.0])) == pytest.approx(3.0)
        assert body.support(np.array([-1.0, 0.0])) == pytest.approx(3.0)

    def test_support_many_probes(self):
        body = ConvexBody(np.array([[1.0, 0.0], [0.0, 2.0]]))
        values = body.support(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
        assert np.allclose(values, [1.0, 2.0, 2.0])

    def test_empty_body(self):
        body = ConvexBody(np.zeros((0, 2)))
        assert body.norm() == 0.0

    def test_transform(self):
        body = transform(np.diag([2.0, 3.0]), segment(np.array([1.0, 1.0])))
        assert np.allclose(body.generators, [[2.0, 3.0]])

    def test_hull_union_prunes_interior(self):
        square = ConvexBody(np.array([[1.0, 1.0], [1.0, -1.0]]))
        inner = segment(np.array([0.5, 0.2]))
        union = hull_union([square, inner])
        assert union.generators.shape[0] == 2
        assert union.norm() == pytest.approx(np.sqrt(2.0))

    def test_prune_collinear(self):
        gens = np.array([[1.0, 2.0], [-2.0, -4.0], [0.5, 1.0]])
        kept = prune_generators(gens)
        assert kept.shape[0] == 1
        assert np.linalg.norm(kept[0]) == pytest.approx(np.linalg.norm([2.0, 4.0]))

    def test_prune_scalar(self):
        kept = prune_generators(np.array([[1.0], [-3.0], [2.0]]))
        assert np.allclose(kept, [[-3.0]])

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32), count=st.integers(min_value=2, max_value=40))
    def test_pruning_keeps_support(self, seed, count):
        """Removing interior generators never changes the support functional"""
        rng = np.random.Generator(np.random.Philox(seed))
        gens = rng.standard_normal((count, 2))
        pruned = prune_generators(gens)
        probes = direction_mesh(2)
        assert np.allclose(ConvexBody(pruned).support(probes), ConvexBody(gens).support(probes))

    def test_cap_enforced(self, caplog):
        angles = np.linspace(0.0, np.pi, 300, endpoint=False)
        gens = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        with caplog.at_level(logging.WARNING, logger="projects.hardylab.convexbody.convexbody"):
            assert prune_generators(gens, cap=16).shape[0] <= 16
        assert any("Generator cap 16 hit" in record.getMessage() for record in caplog.records)

    def test_cap_not_reached_is_silent(self, caplog):
        angles = np.linspace(0.0, np.pi, 8, endpoint=False)
        gens = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        with caplog.at_level(logging.WARNING, logger="projects.hardylab.convexbody.convexbody"):
            prune_generators(gens, cap=16)
        assert not any("Generator cap" in record.getMessage() for record in caplog.records)


class TestCBGridFunction:
    """Test body-valued grid functions"""

    def test_shape_checked(self, grid_1d):
        with pytest.raises(GridMismatch):
            CBGridFunction(grid_1d, np.zeros((grid_1d.size, 2)))

    def test_from_vectors(self, grid_1d):
        vectors = np.tile([3.0, 4.0], (grid_1d.size, 1))
        F = CBGridFunction.from_vectors(grid_1d, vectors)
        assert F.width == 1
        assert np.allclose(body_norms(F), 5.0)
        assert np.allclose(body_support(F, np.array([0.0, 1.0])), 4.0)

    def test_from_bodies_pads(self, grid_1d):
        bodies = [segment(np.array([1.0, 0.0]))] * (grid_1d.size - 1)
        bodies.append(ConvexBody(np.array([[1.0, 0.0], [0.0, 1.0]])))
        F = CBGridFunction.from_bodies(grid_1d, bodies)
        assert F.width == 2
        assert F.body(0).generators.shape[0] == 1
        assert F.body(grid_1d.size - 1).generators.shape[0] == 2

    def test_transformed_norms(self, grid_1d, diag_weight):
        vectors = np.tile([1.0, 0.0], (grid_1d.size, 1))
        F = CBGridFunction.from_vectors(grid_1d, vectors)
        assert np.allclose(F.transformed_norms(diag_weight.samples), grid_1d.radius ** 0.5)

    def test_scaled(self, grid_1d):
        F = CBGridFunction.from_vectors(grid_1d, np.ones((grid_1d.size, 2)))
        factors = np.arange(grid_1d.size, dtype=float)
        assert np.allclose(F.scaled(factors).norms(), factors * np.sqrt(2.0))

    def test_augment_with_ball(self, grid_1d):
        F = CBGridFunction.from_vectors(grid_1d, np.tile([2.0, 0.0], (grid_1d.size, 1)))
        G = augment_with_ball(F, np.full(grid_1d.size, 0.1))
        support = G.support(direction_mesh(2))
        assert np.all(support >= 0.1 - 1e-12)
        assert np.allclose(G.norms(), 2.0)

    def test_ball_generators(self):
        assert ball_generators(1).shape == (1, 1)
        assert ball_generators(2).shape == (64, 2)


class TestCBReducingOperator:
    """Test the convex-body reducing operator"""

    def test_ball_gives_identity(self, grid_1d):
        F = CBGridFunction(grid_1d, np.broadcast_to(ball_generators(2), (grid_1d.size, 64, 2)).copy())
        operator = cb_reducing_operator(F, Cube((0.0,), 2.0), u=0.5)
        assert np.allclose(operator.matrix, np.eye(2), atol=1e-3)
        assert operator.fit_ratio <= john_bound(2)

    def test_segments_are_not_absorbing(self, grid_1d):
        F = CBGridFunction.from_vectors(grid_1d, np.tile([0.0, 1.0], (grid_1d.size, 1)))
        with pytest.raises(NotAbsorbing):
            cb_reducing_operator(F, Cube((0.0,), 2.0), u=1.0)

    def test_empty_cube(self, grid_1d):
        F = CBGridFunction.from_vectors(grid_1d, np.ones((grid_1d.size, 2)))
        with pytest.raises(EmptyCube):
            cb_reducing_operator(F, Cube((0.0,), 0.01), u=1.0)

    def test_equivalence(self, grid_1d):
        """N(z) <= |A z| <= fit_ratio N(z) on the mesh"""
        rng = np.random.Generator(np.random.Philox(2))
        F = CBGridFunction.from_vectors(grid_1d, rng.standard_normal((grid_1d.size, 2)))
        F = augment_with_ball(F, np.full(grid_1d.size, 0.05))
        cube = Cube((0.0,), 4.0)
        u = 0.5
        operator = cb_reducing_operator(F, cube, u)
        probes = direction_mesh(2)
        values = F.support(probes)[cube.mask(grid_1d)]
        target = np.mean(values ** u, axis=0) ** (1.0 / u)
        images = np.linalg.norm(probes @ operator.matrix.T, axis=1)
        assert np.all(images >= target * (1 - 1e-9))
        assert np.all(images <= operator.fit_ratio * target * (1 + 1e-9))
