import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_problem
from dualdecomp import (
    ConsensusProblem,
    ConstantUnavailableError,
    ConstraintSet,
    GeneralConsensusProblem,
    InvalidDimensionsError,
    InvalidProblemError,
    InvalidTopologyError,
    QuadraticCost,
    build_coupling_matrix,
    build_general_coupling,
    coupling_spectrum,
    dual_lipschitz_constant,
    dual_strong_convexity_constant,
)
from dualdecomp.harness.presets import demo_general_problem


def identical_costs(m, value=1.0, n=1):
    return ConsensusProblem.from_arrays([np.eye(n) * value] * m, [np.zeros(n)] * m)


class TestQuadraticCost:
    def test_constants_from_eigenvalues(self):
        c = QuadraticCost([[2.0, 0.5], [0.5, 1.0]], [0.0, 1.0])
        eig = np.linalg.eigvalsh([[2.0, 0.5], [0.5, 1.0]])
        assert c.mu == pytest.approx(2 * eig[0])
        assert c.lipschitz == pytest.approx(2 * eig[1])
        assert not c.is_diagonal

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidProblemError, match="symmetric"):
            QuadraticCost([[1.0, 0.1], [0.0, 1.0]], [0.0, 0.0])

    def test_rejects_tiny_asymmetry_above_tolerance(self):
        with pytest.raises(InvalidProblemError):
            QuadraticCost([[1.0, 1e-10], [0.0, 1.0]], [0.0, 0.0])

    def test_accepts_asymmetry_within_tolerance(self):
        c = QuadraticCost([[1.0, 1e-14], [0.0, 1.0]], [0.0, 0.0])
        assert c.dim == 2

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidProblemError, match="positive definite"):
            QuadraticCost([[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0])

    def test_offset_size_checked(self):
        with pytest.raises(ValueError):
            QuadraticCost([[1.0]], [0.0, 1.0])

    def test_value_and_gradient(self):
        c = QuadraticCost([[1.0]], [-4.0])
        assert c.value([2.0]) == pytest.approx(-4.0)
        np.testing.assert_allclose(c.gradient([2.0]), [0.0])

    def test_immutable(self):
        c = QuadraticCost([[1.0]], [0.0])
        with pytest.raises(ValueError):
            c.matrix[0, 0] = 3.0


class TestConstraintSet:
    def test_box_requires_positive_half_width(self):
        with pytest.raises(ValueError):
            ConstraintSet.box(0.0)
        with pytest.raises(ValueError):
            ConstraintSet.box(-1.0)

    def test_contains(self):
        box = ConstraintSet.box(3.0)
        assert box.contains([3.0, -3.0])
        assert not box.contains([3.0000001])
        assert ConstraintSet().contains([1e9])


class TestCouplingMatrix:
    def test_three_scalar_blocks(self):
        np.testing.assert_array_equal(build_coupling_matrix(3, 1), [[1, -1, 0], [0, 1, -1]])

    def test_two_vector_blocks(self):
        np.testing.assert_array_equal(build_coupling_matrix(2, 2), [[1, 0, -1, 0], [0, 1, 0, -1]])

    def test_consensus_in_null_space(self):
        a = build_coupling_matrix(5, 1)
        np.testing.assert_array_equal(a @ np.full(5, 7.0), np.zeros(4))

    @pytest.mark.parametrize("m,n", [(1, 1), (0, 2), (3, 0), (2.5, 1)])
    def test_invalid_dimensions(self, m, n):
        with pytest.raises(InvalidDimensionsError):
            build_coupling_matrix(m, n)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 20), st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_null_space_is_consensus(self, m, n, seed):
        rng = np.random.default_rng(seed)
        a = build_coupling_matrix(m, n)
        z = rng.normal(size=n)
        assert np.array_equal(a @ np.tile(z, m), np.zeros((m - 1) * n))
        y = np.tile(z, m)
        j = rng.integers(m)
        y[j * n + rng.integers(n)] += 1.0 + rng.random()
        assert np.any(a @ y != 0)

    def test_residual_matches_matrix(self, rng):
        p = random_problem(rng, m=4, n=3)
        y = rng.normal(size=12)
        lam = rng.normal(size=9)
        np.testing.assert_allclose(p.coupling_residual(y), p.coupling_matrix @ y, atol=1e-14)
        np.testing.assert_allclose(p.tilt(lam), p.coupling_matrix.T @ lam, atol=1e-14)


class TestSpectrum:
    def test_m2(self):
        np.testing.assert_allclose(coupling_spectrum(2), [2.0])

    def test_m3_against_eigensolve(self):
        oracle = np.linalg.eigvalsh([[2.0, -1.0], [-1.0, 2.0]])
        np.testing.assert_allclose(coupling_spectrum(3), oracle, atol=1e-14)
        np.testing.assert_allclose(coupling_spectrum(3), [1.0, 3.0], atol=1e-14)

    def test_m5_max(self):
        t = 2 * np.eye(4) - np.eye(4, k=1) - np.eye(4, k=-1)
        top = np.linalg.eigvalsh(t)[-1]
        assert coupling_spectrum(5)[-1] == pytest.approx(top, abs=1e-12)
        assert coupling_spectrum(5)[-1] == pytest.approx(3.618034, abs=1e-6)
        assert coupling_spectrum(5)[-1] == 2 + 2 * math.cos(math.pi / 5)

    @pytest.mark.parametrize("m", range(2, 21))
    def test_matches_dense_eigensolve(self, m):
        a = build_coupling_matrix(m, 1)
        oracle = np.linalg.eigvalsh(a @ a.T)
        spec = coupling_spectrum(m)
        assert np.all(np.diff(spec) >= 0)
        np.testing.assert_allclose(spec, oracle, atol=1e-10)
        assert spec[0] == pytest.approx(2 - 2 * math.cos(math.pi / m), abs=1e-15)
        assert spec[-1] == pytest.approx(2 + 2 * math.cos(math.pi / m), abs=1e-15)

    @pytest.mark.parametrize("m,n", [(3, 2), (5, 3), (7, 4)])
    def test_kronecker_lift(self, m, n):
        a = build_coupling_matrix(m, n)
        lifted = np.sort(np.repeat(coupling_spectrum(m), n))
        np.testing.assert_allclose(np.linalg.eigvalsh(a @ a.T), lifted, atol=1e-10)


class TestDualConstants:
    def test_lipschitz_m2(self):
        assert dual_lipschitz_constant(identical_costs(2)) == pytest.approx(1.0)

    def test_lipschitz_m5(self):
        p = identical_costs(5)
        assert p.mu == 2.0
        val = dual_lipschitz_constant(p)
        a = build_coupling_matrix(5, 1)
        assert val == pytest.approx(1.809017, abs=1e-6)
        assert val == pytest.approx(np.linalg.eigvalsh(a @ a.T)[-1] / 2.0, abs=1e-12)

    def test_strong_convexity_m2(self):
        assert dual_strong_convexity_constant(identical_costs(2)) == pytest.approx(1.0)

    def test_strong_convexity_m5(self):
        val = dual_strong_convexity_constant(identical_costs(5))
        a = build_coupling_matrix(5, 1)
        assert val == pytest.approx(0.190983, abs=1e-6)
        assert val == pytest.approx(np.linalg.eigvalsh(a @ a.T)[0] / 2.0, abs=1e-12)

    def test_strong_convexity_unavailable_with_box(self, rng):
        p = random_problem(rng, box=3.0)
        with pytest.raises(ConstantUnavailableError):
            dual_strong_convexity_constant(p)

    def test_identity_product(self, rng):
        for m in range(2, 12):
            p = random_problem(rng, m=m)
            assert dual_lipschitz_constant(p) * p.mu == pytest.approx(coupling_spectrum(m)[-1], rel=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 20), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_ordering(self, m, n, seed):
        p = random_problem(np.random.default_rng(seed), m=m, n=n, diagonal=False)
        assert p.mu <= p.lipschitz
        assert dual_strong_convexity_constant(p) <= dual_lipschitz_constant(p)


class TestProblem:
    def test_wrong_cost_count(self):
        with pytest.raises(InvalidProblemError):
            ConsensusProblem(3, 1, (QuadraticCost([[1.0]], [0.0]),) * 2)

    def test_wrong_cost_dimension(self):
        with pytest.raises(InvalidProblemError):
            ConsensusProblem(2, 2, (QuadraticCost([[1.0]], [0.0]),) * 2)

    def test_m_at_least_two(self):
        with pytest.raises(InvalidDimensionsError):
            ConsensusProblem(1, 1, (QuadraticCost([[1.0]], [0.0]),))

    def test_soft_size_limit_warns(self):
        with pytest.warns(RuntimeWarning, match="desk-scale"):
            identical_costs(65)

    def test_desk_scale_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            identical_costs(64)

    def test_dict_round_trip(self, rng):
        p = random_problem(rng, m=4, n=2, box=2.5, diagonal=False)
        q = ConsensusProblem.from_dict(p.to_dict())
        assert q.to_dict() == p.to_dict()
        y = rng.uniform(-2, 2, size=8)
        assert q.objective(y) == p.objective(y)

    def test_objective_fast_path_matches_blocks(self, rng):
        p = random_problem(rng, m=6, n=3)
        y = rng.normal(size=18)
        slow = sum(c.value(y[s]) for s, c in p.blocks())
        assert p.objective(y) == pytest.approx(slow, rel=1e-13)


def one_net(problem):
    return GeneralConsensusProblem((problem.n,), (tuple(range(problem.m)),), problem.costs)


class TestGeneral:
    def test_demo_shape(self):
        g = demo_general_problem(0)
        a, blocks = build_general_coupling(g)
        assert a.shape == (4, 7)
        assert [b.shape for b in blocks] == [(1, 2), (1, 2), (2, 3)]

    def test_single_net_degenerates_to_chain(self, rng):
        p = random_problem(rng, m=5, n=2)
        g = one_net(p)
        np.testing.assert_array_equal(g.coupling_matrix, build_coupling_matrix(5, 2))
        assert dual_lipschitz_constant(g) == dual_lipschitz_constant(p)
        assert dual_strong_convexity_constant(g) == dual_strong_convexity_constant(p)

    def test_general_constant_identity(self):
        g = demo_general_problem(3)
        top = max(np.linalg.eigvalsh(b @ b.T)[-1] for b in g.net_blocks if b.shape[0])
        assert abs(dual_lipschitz_constant(g) * g.mu - top) <= 1e-10

    def test_single_member_net_contributes_no_rows(self):
        costs = (QuadraticCost(np.eye(2), [0.0, 0.0]), QuadraticCost([[1.0]], [1.0]))
        g = GeneralConsensusProblem((1, 1), ((0, 1), (0,)), costs)
        a, blocks = build_general_coupling(g)
        assert blocks[1].shape == (0, 1)
        assert a.shape == (1, 3)

    def test_null_space_is_per_net_consensus(self):
        g = demo_general_problem(1)
        y = np.array([1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 3.0])
        np.testing.assert_array_equal(g.coupling_residual(y), np.zeros(4))

    @pytest.mark.parametrize("nets,members,dims", [
        ((1,), ((0, 1),), (1, 2)),          # cost dimension mismatch
        ((1,), ((0, 0),), (1, 1)),          # repeated member
        ((1,), ((0, 3),), (1, 1)),          # unknown subsystem
        ((1, 1), ((0,), ()), (1, 1)),       # empty net
        ((1,), ((0,),), (1, 1)),            # subsystem 1 in no net
    ])
    def test_invalid_topology(self, nets, members, dims):
        costs = tuple(QuadraticCost(np.eye(d), np.zeros(d)) for d in dims)
        with pytest.raises(InvalidTopologyError):
            GeneralConsensusProblem(nets, members, costs)

    def test_dict_round_trip(self):
        g = demo_general_problem(2)
        assert GeneralConsensusProblem.from_dict(g.to_dict()).to_dict() == g.to_dict()
