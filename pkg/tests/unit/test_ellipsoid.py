#!/usr/bin/env python3
"""
Unit tests for symmetric norm fitting by ellipsoids
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projects.hardylab.core.ellipsoid import (
    direction_mesh,
    equivalence_ratios,
    fit_norm,
    fit_symmetric_norm,
    john_bound,
)
from projects.hardylab.core.errors import ConfigInvalid, DegenerateNorm


class TestDirectionMesh:
    """Test probe direction meshes"""

    @pytest.mark.parametrize("m,count", [(1, 1), (2, 64), (3, 242)])
    def test_sizes(self, m, count):
        mesh = direction_mesh(m)
        assert mesh.shape == (count, m)
        assert np.allclose(np.linalg.norm(mesh, axis=1), 1.0)

    def test_density(self):
        assert direction_mesh(2, 2).shape == (128, 2)

    def test_read_only(self):
        with pytest.raises(ValueError):
            direction_mesh(2)[0, 0] = 5.0

    def test_unsupported_dimension(self):
        with pytest.raises(ConfigInvalid):
            direction_mesh(4)


class TestFitSymmetricNorm:
    """Test the John-ellipsoid fit"""

    def test_scalar_case(self):
        fit = fit_symmetric_norm(np.ones((1, 1)), np.array([2.5]))
        assert fit.matrix[0, 0] == pytest.approx(2.5)
        assert fit.fit_ratio == 1.0

    def test_euclidean_norm_is_recovered(self):
        """An ellipsoidal norm is fitted with ratio 1"""
        B = np.array([[2.0, 0.5], [0.5, 1.0]])
        fit = fit_norm(lambda z: np.linalg.norm(z @ B.T, axis=1), 2)
        assert fit.converged
        assert fit.fit_ratio == pytest.approx(1.0, abs=1e-4)
        assert np.allclose(fit.matrix, B, rtol=1e-3)

    @pytest.mark.parametrize("m", [2, 3])
    def test_l1_norm_within_john_bound(self, m):
        fit = fit_norm(lambda z: np.abs(z).sum(axis=1), m)
        directions = direction_mesh(m)
        ratios = equivalence_ratios(fit.matrix, directions, np.abs(directions).sum(axis=1))
        assert ratios.min() == pytest.approx(1.0)
        assert ratios.max() <= john_bound(m)
        assert fit.fit_ratio == pytest.approx(ratios.max())

    @settings(max_examples=20, deadline=None)
    @given(
        a=st.floats(min_value=0.2, max_value=5.0),
        b=st.floats(min_value=0.2, max_value=5.0),
        angle=st.floats(min_value=0.0, max_value=math.pi),
    )
    def test_matrix_is_symmetric_positive(self, a, b, angle):
        """Fitted operators of sup-type norms are SPD and below the John bound"""
        c, s = math.cos(angle), math.sin(angle)
        R = np.array([[c, -s], [s, c]])
        fit = fit_norm(lambda z: np.abs((z @ R.T) * np.array([a, b])).max(axis=1), 2)
        assert np.allclose(fit.matrix, fit.matrix.T)
        assert np.all(np.linalg.eigvalsh(fit.matrix) > 0)
        assert fit.fit_ratio <= john_bound(2)

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.inf, np.nan])
    def test_degenerate_norm(self, bad):
        directions = direction_mesh(2)
        norms = np.ones(len(directions))
        norms[5] = bad
        with pytest.raises(DegenerateNorm):
            fit_symmetric_norm(directions, norms)


def test_john_bound():
    assert john_bound(1) == pytest.approx(1.001)
    assert john_bound(2) == pytest.approx(math.sqrt(2) * 1.001)
