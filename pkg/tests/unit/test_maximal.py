#!/usr/bin/env python3
"""
Unit tests for the scalar, matrix-weighted and convex-body maximal operators
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projects.hardylab.core.errors import ConfigInvalid, GridMismatch, NotInP
from projects.hardylab.core.grid import Cube, Grid, GridFunction
from projects.hardylab.core.vexp import ExponentProfile
from projects.hardylab.maximal.convex_maximal import (
    MaximalKind,
    cb_maximal,
    convolve_member,
    hardy_norm,
    resolve_catalog,
    weighted_maximal,
)
from projects.hardylab.maximal.experiments import (
    boundedness_report,
    catalog_sensitivity,
    embedding_pairing_check,
    equivalence_report,
    operator_norm_estimate,
    random_body_functions,
    smooth_suite,
    variable_maximal_bound,
)
from projects.hardylab.maximal.models import BoundednessReport, MaximalParams
from projects.hardylab.maximal.operators import (
    CubeFamily,
    christ_goldberg,
    hl_maximal,
    reducing_cg,
    require_exponent_split,
    variable_maximal,
)
from projects.hardylab.maximal.schwartz_catalog import (
    SchwartzMember,
    build_catalog,
    bump_integral,
    required_order,
    scale_ladder,
)
from projects.hardylab.weights.weights import weight_from_preset


@pytest.fixture
def bump_1d(grid_1d) -> GridFunction:
    x = grid_1d.points[:, 0]
    values = np.where(np.abs(x) < 1.5, np.exp(-1.0 / np.maximum(1.0 - (x / 1.5) ** 2, 1e-300)), 0.0)
    return GridFunction.scalar(grid_1d, values)


@pytest.fixture
def vector_bump(grid_1d, bump_1d) -> GridFunction:
    x = grid_1d.points[:, 0]
    return GridFunction.vector(grid_1d, np.stack([bump_1d.samples, x * bump_1d.samples], axis=1))


class TestCubeFamily:
    """Test cube families and their membership lists"""

    def test_dyadic_members_match_masks(self, grid_1d):
        family = CubeFamily.dyadic(grid_1d)
        assert len(family) > 0
        for cube, idx in zip(family.cubes, family.members):
            assert np.array_equal(idx, np.flatnonzero(cube.mask(grid_1d)))

    def test_dyadic_members_match_masks_2d(self, grid_2d):
        family = CubeFamily.dyadic(grid_2d, min_edge=0.5)
        for cube, idx in zip(family.cubes, family.members):
            assert np.array_equal(idx, np.flatnonzero(cube.mask(grid_2d)))

    def test_from_cubes_drops_empty(self, grid_1d):
        family = CubeFamily.from_cubes(grid_1d, [Cube((0.0,), 1.0), Cube((0.0,), 0.01)])
        assert len(family) == 1


class TestScalarMaximal:
    """Test Hardy-Littlewood and variable maximal functions"""

    def test_constant_is_fixed(self, grid_1d):
        result = hl_maximal(GridFunction.scalar(grid_1d, 2.0))
        assert np.allclose(result.samples, 2.0)

    def test_dominates_function(self, grid_1d, bump_1d):
        result = hl_maximal(bump_1d)
        assert np.all(result.samples >= bump_1d.samples - 1e-15)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32), alpha=st.sampled_from([0.25, 0.5, 1.0]))
    def test_alpha_monotone(self, seed, alpha):
        """(avg |f|^alpha)^(1/alpha) grows with alpha"""
        grid = Grid(1, 4, 2.0)
        rng = np.random.Generator(np.random.Philox(seed))
        f = GridFunction.scalar(grid, rng.standard_normal(grid.size))
        low = hl_maximal(f, alpha=alpha)
        high = hl_maximal(f, alpha=2.0 * alpha)
        assert np.all(low.samples <= high.samples * (1 + 1e-12))

    def test_explicit_catalog(self, grid_1d, bump_1d):
        result = hl_maximal(bump_1d, catalog=[Cube((0.0,), 8.0)])
        assert np.allclose(result.samples, np.mean(bump_1d.samples))

    def test_variable_with_exponent_one_is_hl(self, grid_1d, bump_1d):
        q = ExponentProfile.constant(grid_1d, 1.0)
        assert np.allclose(variable_maximal(bump_1d, q).samples, hl_maximal(bump_1d).samples, rtol=1e-9)

    def test_exponent_split(self, grid_1d):
        p = ExponentProfile.constant(grid_1d, 2.0)
        assert np.allclose(require_exponent_split(p, ExponentProfile.constant(grid_1d, 1.0)), 2.0)
        with pytest.raises(NotInP):
            require_exponent_split(p, p)


class TestWeightedMaximal:
    """Test Christ-Goldberg and reducing-operator maximal functions"""

    def test_christ_goldberg_identity_is_hl(self, identity_weight, vector_bump):
        result = christ_goldberg(identity_weight, vector_bump, alpha=0.5)
        expected = hl_maximal(GridFunction.scalar(vector_bump.grid, vector_bump.magnitude()), alpha=0.5)
        assert np.allclose(result.samples, expected.samples, rtol=1e-9)

    def test_reducing_cg_identity_is_hl(self, identity_weight, p_two, vector_bump):
        family = CubeFamily.dyadic(vector_bump.grid, min_edge=1.0)
        result = reducing_cg(identity_weight, vector_bump, 0.5, p_two, catalog=family)
        expected = hl_maximal(GridFunction.scalar(vector_bump.grid, vector_bump.magnitude()),
                              alpha=0.5, catalog=family)
        assert np.allclose(result.samples, expected.samples, rtol=1e-3)

    def test_dimension_mismatch(self, grid_1d):
        W = weight_from_preset(grid_1d, "identity", {"m": 3})
        with pytest.raises(GridMismatch):
            christ_goldberg(W, GridFunction.vector(grid_1d, np.ones((grid_1d.size, 2))), alpha=1.0)

    def test_christ_goldberg_dominates_magnitude(self, diag_weight, vector_bump):
        """Cubes of one cell reduce to |W(x) W^-1(x) f(x)| = |f(x)|"""
        result = christ_goldberg(diag_weight, vector_bump, alpha=1.0)
        pointwise = vector_bump.magnitude()
        assert np.all(result.samples >= pointwise * (1 - 1e-12))


class TestSchwartzCatalog:
    """Test the finite Schwartz test-function catalog"""

    def test_catalog_size(self):
        assert build_catalog(1, 2).size == 3
        assert build_catalog(2, 1).size == 3

    def test_max_degree(self):
        catalog = build_catalog(1, 3, max_degree=1)
        assert catalog.size == 2
        assert catalog.N == 3

    def test_negative_order(self):
        with pytest.raises(ConfigInvalid):
            build_catalog(1, -1)

    @pytest.mark.parametrize("n,tol", [(1, 1e-6), (2, 1e-3)])
    def test_psi_has_unit_integral(self, n, tol):
        assert build_catalog(n, 0).integral_error() < tol

    def test_bump_integral_unsupported(self):
        with pytest.raises(ConfigInvalid):
            bump_integral(3)

    def test_derivative_matches_finite_difference(self):
        member = SchwartzMember((1,), 1.0, 1.0)
        x = np.linspace(-0.8, 0.8, 41)[:, None]
        eps = 1e-6
        numeric = (member.evaluate(x + eps) - member.evaluate(x - eps)) / (2 * eps)
        assert np.allclose(member.derivative((1,), x), numeric, atol=1e-6)

    def test_second_derivative_2d(self):
        member = SchwartzMember((1, 0), 1.0, 1.0)
        pts = np.array([[0.1, 0.2], [-0.3, 0.4], [0.5, -0.1]])
        eps = 1e-4
        shift = np.array([0.0, eps])
        numeric = (member.evaluate(pts + shift) - 2 * member.evaluate(pts) + member.evaluate(pts - shift)) / eps ** 2
        assert np.allclose(member.derivative((0, 2), pts), numeric, atol=1e-4)

    def test_sampled_kernel_mass(self, grid_1d):
        member = build_catalog(1, 0).psi
        kernel = member.sampled_kernel(grid_1d, 2.0)
        assert kernel.shape == (17,)
        assert kernel.sum() * grid_1d.h == pytest.approx(1.0, abs=1e-2)

    def test_required_order(self):
        assert required_order(1, 1.0) == 2
        assert required_order(1, 0.5) == 3
        assert required_order(2, 1.0) == 3
        assert required_order(1, 0.3) == 5

    def test_scale_ladder(self, grid_1d):
        assert scale_ladder(grid_1d) == [0.25, 0.5, 1.0, 2.0, 4.0]
        assert scale_ladder(grid_1d, 1.0) == [0.25, 0.5, 1.0]

    def test_catalog_dict(self):
        data = build_catalog(1, 1).to_dict()
        assert data["N"] == 1
        assert [m["beta"] for m in data["members"]] == [[0], [1]]


class TestConvexBodyMaximal:
    """Test the convex-body maximal family and the Hardy quasi-norm"""

    def test_kind_validation(self):
        with pytest.raises(ConfigInvalid):
            MaximalKind("sideways")
        with pytest.raises(ConfigInvalid):
            MaximalKind("peetre")
        with pytest.raises(ConfigInvalid):
            MaximalKind("nontangential", a=0.0)
        with pytest.raises(ConfigInvalid):
            MaximalKind("peetre", l=1.0).validate_for(1, 1.0)
        MaximalKind("peetre", l=2.5).validate_for(1, 1.0)

    def test_radial_below_nontangential(self, vector_bump):
        catalog = build_catalog(1, 1)
        radial = cb_maximal(vector_bump, MaximalKind("radial"), catalog).norms()
        cone = cb_maximal(vector_bump, MaximalKind("nontangential", a=1.0), catalog).norms()
        assert np.all(radial <= cone * (1 + 1e-12) + 1e-15)

    def test_radial_generators_are_convolutions(self, bump_1d):
        catalog = build_catalog(1, 0)
        body = cb_maximal(bump_1d, MaximalKind("radial"), catalog, [0.5])
        assert body.m == 1
        assert body.width == 1
        expected = convolve_member(bump_1d.samples[:, None], bump_1d.grid, catalog.psi, 0.5)
        assert np.allclose(body.generators[:, 0, :], expected)

    def test_weighted_identity_matches_norms(self, identity_weight, vector_bump):
        catalog = build_catalog(1, 1)
        kind = MaximalKind("grand_radial")
        weighted = weighted_maximal(vector_bump, identity_weight, kind, catalog)
        plain = cb_maximal(vector_bump, kind, catalog).norms()
        assert np.allclose(weighted, plain)

    def test_hardy_norm_zero(self, identity_weight, p_two, grid_1d):
        f = GridFunction.vector(grid_1d, np.zeros((grid_1d.size, 2)))
        assert hardy_norm(f, identity_weight, p_two, N=1) == 0.0

    def test_hardy_norm_homogeneous(self, identity_weight, p_two, vector_bump):
        catalog = build_catalog(1, 2)
        one = hardy_norm(vector_bump, identity_weight, p_two, catalog=catalog)
        two = hardy_norm(vector_bump * 2.0, identity_weight, p_two, catalog=catalog)
        assert one > 0
        assert two == pytest.approx(2.0 * one, rel=1e-9)

    def test_hardy_norm_order_check(self, identity_weight, p_two, vector_bump):
        with pytest.raises(ConfigInvalid):
            hardy_norm(vector_bump, identity_weight, p_two, catalog=build_catalog(1, 1), alpha=0.5)

    def test_resolve_catalog(self):
        assert resolve_catalog(1, None, 1.0).N == 2
        assert resolve_catalog(1, 4, 1.0).N == 4
        with pytest.raises(ConfigInvalid):
            resolve_catalog(1, 1, 1.0)


class TestExperiments:
    """Test seeded suites and the equivalence and boundedness experiments"""

    def test_suite_deterministic(self, grid_1d):
        first = smooth_suite(grid_1d, 2, 3, seed=4)
        second = smooth_suite(grid_1d, 2, 3, seed=4)
        assert all(np.array_equal(a.samples, b.samples) for a, b in zip(first, second))

    @pytest.mark.parametrize("s", [0, 1, 2])
    def test_suite_moments_vanish(self, grid_1d, s):
        for f in smooth_suite(grid_1d, 2, 3, seed=9, s=s):
            x = grid_1d.points[:, 0]
            scale = np.abs(f.samples).sum()
            for k in range(s + 1):
                moment = (x[:, None] ** k * f.samples).sum(axis=0)
                assert np.all(np.abs(moment) <= 1e-9 * scale * (1 + np.abs(x).max() ** k))

    def test_random_body_functions(self, grid_1d):
        bodies = random_body_functions(grid_1d, 2, 3, seed=1)
        assert len(bodies) == 3
        assert all(F.m == 2 and F.width == 2 for F in bodies)

    @pytest.mark.slow
    def test_equivalence_report(self, identity_weight, p_two, grid_1d):
        suite = smooth_suite(grid_1d, 2, 2, seed=3)
        report = equivalence_report(suite, identity_weight, p_two, build_catalog(1, 2), a=1.0, l=3.0)
        assert len(report.rows) == 2
        assert report.ordering_holds
        assert report.bracket >= 1.0
        assert set(report.table()[0]) >= {"radial", "peetre", "ratio_grand_radial", "ordering_holds"}

    def test_embedding_pairing(self, identity_weight, p_two, vector_bump):
        catalog = build_catalog(1, 2)
        ratio = embedding_pairing_check(vector_bump, catalog.members[0], identity_weight, p_two, catalog)
        assert math.isfinite(ratio)
        assert ratio > 0

    def test_catalog_sensitivity(self, identity_weight, p_two, vector_bump, grid_1d):
        catalog = build_catalog(1, 1)
        change = catalog_sensitivity(vector_bump, identity_weight, p_two, catalog)
        assert 0.0 <= change < math.inf
        zero = GridFunction.vector(grid_1d, np.zeros((grid_1d.size, 2)))
        assert catalog_sensitivity(zero, identity_weight, p_two, catalog) == 0.0

    def test_operator_norm_estimate(self, p_two, grid_1d):
        inputs = random_body_functions(grid_1d, 1, 3, seed=2)
        ratio = operator_norm_estimate(lambda F: hl_maximal(F), inputs, p_two)
        assert ratio >= 1.0 - 1e-12
        report = boundedness_report("hl", lambda F: hl_maximal(F), inputs, p_two)
        assert isinstance(report, BoundednessReport)
        assert report.inputs == 3
        assert report.growth is None

    def test_variable_maximal_bound(self, grid_1d):
        p = ExponentProfile.constant(grid_1d, 2.0)
        q = ExponentProfile.constant(grid_1d, 1.0)
        suite = smooth_suite(grid_1d, 1, 2, seed=5)
        ratio = variable_maximal_bound(suite, p, q)
        assert 1.0 - 1e-12 <= ratio < 10.0
        with pytest.raises(NotInP):
            variable_maximal_bound(suite, p, p)


def test_maximal_params_validation():
    with pytest.raises(ValueError):
        MaximalParams(l=1.0, alpha=0.5)
    assert MaximalParams().kind == "grand_radial"
