"""Right-hand-side approximants, weight models and the assumption checks."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavytail2d.asymptotics import (
    AssumptionCError,
    ScalarProductModel,
    WeightModel,
    assumption_a_supported,
    build_auxiliary_b,
    check_assumption_A,
    check_eq_6_8,
    degenerate_weights,
    expect,
    ruin_and_rhs,
    ruin_max_upper,
    scalar_product_tail,
    sum_tail_rhs,
    sum_tail_terms,
    verify_auxiliary_b,
    weighted_pair_tail,
)
from heavytail2d.dependence import (
    BLOCKS_INDEPENDENT,
    COMMON_PAIR_IID,
    FGM,
    BivariatePair,
    Independent,
    SequenceModel,
    SurvivalClayton,
)
from heavytail2d.dists import (
    DegenerateAtConstant,
    Exponential,
    Lognormal,
    Pareto,
    SpecError,
    TwoPoint,
    Uniform,
    UnsupportedModelError,
)

P2 = Pareto(2.0, 1.0)
PAIR = BivariatePair(P2, P2)


def blocks(n, x=P2, y=P2):
    return SequenceModel((x,) * n, (y,) * n, BLOCKS_INDEPENDENT)


def pbar(t):
    return 1.0 if t < 1 else t ** -2.0


class TestExpect:
    def test_atoms_exact(self):
        w = TwoPoint((0.5, 1.0), (0.25, 0.75))
        assert expect(w, lambda s: s * s).value == 0.25 * 0.25 + 0.75

    def test_lognormal_moment(self):
        e = expect(Lognormal(0.0, 1.0), lambda s: s)
        assert e.value == pytest.approx(math.exp(0.5), rel=1e-9)

    def test_exponential_fourth_moment(self):
        assert expect(Exponential(1.0), lambda s: s**4).value == pytest.approx(24.0, rel=1e-9)


class TestSumTailRhs:
    def test_n1_is_joint_tail(self):
        m = SequenceModel((P2,), (P2,), COMMON_PAIR_IID, FGM(0.5))
        assert sum_tail_rhs(m, 10.0, 20.0) == pytest.approx(float(BivariatePair(P2, P2, FGM(0.5)).joint_tail(10.0, 20.0)), rel=1e-14)

    def test_blocks_independent_factorized(self):
        assert sum_tail_rhs(blocks(2), 10.0, 10.0) == pytest.approx(4e-4, rel=1e-14)

    def test_common_pair_fgm(self):
        # diagonal FGM terms u v (1 + θ (1-u)(1-v)) with u = v = 0.01; cross terms u v
        u = 0.01
        diag = u * u * (1 + 0.5 * (1 - u) ** 2)
        assert diag == pytest.approx(1.49005e-4, rel=1e-12)
        m = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, FGM(0.5))
        assert sum_tail_rhs(m, 10.0, 10.0) == pytest.approx(2 * diag + 2e-4, rel=1e-13)
        assert sum_tail_rhs(m, 10.0, 10.0) == pytest.approx(4.9801e-4, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 4), x=st.floats(1.5, 1e4), y=st.floats(1.5, 1e4), theta=st.floats(-1, 1))
    def test_additive_over_terms(self, n, x, y, theta):
        m = SequenceModel((P2,) * n, (Pareto(3.0, 1.0),) * n, COMMON_PAIR_IID, FGM(theta))
        assert abs(sum_tail_terms(m, x, y).sum() - sum_tail_rhs(m, x, y)) <= 1e-12 * max(1e-300, sum_tail_rhs(m, x, y))


class TestWeightModel:
    def test_trivial(self):
        assert WeightModel().trivial

    def test_unbounded_per_index_rejected(self):
        with pytest.raises(AssumptionCError):
            WeightModel(theta=(Exponential(1.0),), delta=(Uniform(0.5, 1.0),))

    def test_zero_lower_bound_rejected(self):
        with pytest.raises(AssumptionCError):
            WeightModel(theta=(Uniform(0.0, 1.0),), delta=(Uniform(0.5, 1.0),))

    def test_support_outside_declared_bounds(self):
        with pytest.raises(AssumptionCError):
            WeightModel(theta=(Uniform(0.5, 1.0),), delta=(Uniform(0.5, 1.0),), theta_bounds=((0.6, 1.0),))

    def test_zero_common_factor_rejected(self):
        with pytest.raises(SpecError):
            WeightModel(common_theta=DegenerateAtConstant(0.0))

    def test_mixed_cases_rejected(self):
        with pytest.raises(SpecError):
            WeightModel(common_theta=Uniform(0.5, 1.0), theta=(Uniform(0.5, 1.0),), delta=(Uniform(0.5, 1.0),))

    def test_dependent_weights_unsupported(self):
        with pytest.raises(UnsupportedModelError):
            WeightModel(common_theta=Uniform(0.5, 1.0), independent_of_claims=False)

    def test_round_trip(self):
        w = WeightModel(theta=(Uniform(0.5, 1.0), TwoPoint((0.5, 1.0), (0.5, 0.5))), delta=(Uniform(0.2, 0.4),) * 2)
        assert WeightModel.from_dict(w.to_dict()) == w
        c = WeightModel(common_theta=Uniform(0.5, 1.0))
        assert WeightModel.from_dict(c.to_dict()) == c

    def test_unknown_key(self):
        with pytest.raises(SpecError):
            WeightModel.from_dict({"common": {}})


class TestRuinAndRhs:
    def test_trivial_weights_equal_sum_rhs(self):
        m = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, SurvivalClayton(1.0))
        assert ruin_and_rhs(m, WeightModel(), 10.0, 30.0) == sum_tail_rhs(m, 10.0, 30.0)

    def test_unit_degenerate_weights_equal_sum_rhs(self):
        m = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, FGM(0.5))
        assert ruin_and_rhs(m, degenerate_weights(2), 10.0, 10.0) == pytest.approx(sum_tail_rhs(m, 10.0, 10.0), rel=1e-14)

    def test_common_constant_scaling(self):
        w = WeightModel(common_theta=DegenerateAtConstant(0.5))
        assert ruin_and_rhs(blocks(1), w, 10.0, 10.0) == pytest.approx(6.25e-6, rel=1e-14)

    def test_two_point_per_index_enumeration(self):
        tp = TwoPoint((0.5, 1.0), (0.5, 0.5))
        w = WeightModel(theta=(tp,), delta=(tp,))
        enum = math.fsum(0.25 * pbar(10 / s) * pbar(10 / r) for s, r in itertools.product((0.5, 1.0), repeat=2))
        assert enum == pytest.approx(0.25 * (pbar(20) + pbar(10)) ** 2, rel=1e-15)
        assert enum == pytest.approx(3.90625e-5, rel=1e-14)
        assert ruin_and_rhs(blocks(1), w, 10.0, 10.0) == pytest.approx(enum, rel=1e-14)

    def test_per_index_uniform_product(self):
        # independent Θ, Δ ~ Uniform(0.5, 1): (E[Θ²]/100)² with E[Θ²] = 7/12
        u = Uniform(0.5, 1.0)
        w = WeightModel(theta=(u,), delta=(u,))
        assert ruin_and_rhs(blocks(1), w, 10.0, 10.0) == pytest.approx((7 / 12 / 100) ** 2, rel=1e-9)

    def test_common_uniform_matches_scalar_product(self):
        w = WeightModel(common_theta=Uniform(0.5, 1.0))
        assert ruin_and_rhs(blocks(1), w, 10.0, 10.0) == pytest.approx(3.875e-5, rel=1e-9)

    def test_horizon_mismatch(self):
        with pytest.raises(SpecError):
            ruin_and_rhs(blocks(2), degenerate_weights(3), 10.0, 10.0)

    @settings(max_examples=20, deadline=None)
    @given(x=st.floats(2, 1e3), y=st.floats(2, 1e3), n=st.integers(1, 3))
    def test_max_upper_equals_and(self, x, y, n):
        m = blocks(n)
        w = WeightModel(common_theta=Uniform(0.5, 1.0))
        assert ruin_max_upper(m, w, x, y) == ruin_and_rhs(m, w, x, y)

    def test_max_upper_blocks(self):
        assert ruin_max_upper(blocks(2), WeightModel(), 10.0, 10.0) == pytest.approx(4e-4, rel=1e-14)


class TestScalarProductTail:
    def test_unit_weight_is_joint_tail(self):
        pair = BivariatePair(P2, P2, FGM(0.5))
        m = ScalarProductModel(pair, DegenerateAtConstant(1.0))
        assert scalar_product_tail(m, 10.0, 20.0) == pytest.approx(float(pair.joint_tail(10.0, 20.0)), rel=1e-14)

    def test_degenerate_two(self):
        assert scalar_product_tail(ScalarProductModel(PAIR, DegenerateAtConstant(2.0)), 10.0, 10.0) == pytest.approx(1.6e-3, rel=1e-14)

    def test_uniform_polynomial(self):
        v, err = scalar_product_tail(ScalarProductModel(PAIR, Uniform(0.5, 1.0)), 10.0, 10.0, full_output=True)
        assert v == pytest.approx(3.875e-5, rel=1e-10)
        assert err <= 1e-8 * v

    def test_exponential_weight_moment(self):
        # s < 40 throughout the relevant mass, so H̄ ≈ E[Θ⁴]/40⁴ with a correction beyond s = 40
        v = scalar_product_tail(ScalarProductModel(PAIR, Exponential(1.0)), 40.0, 40.0)
        assert v == pytest.approx(24 / 40**4, rel=1e-9)

    def test_breiman_constant(self):
        # Θ ~ Pareto(1.1): H̄(t,t) / P[Θ>t] → E[min(X,Y)^1.1] = 4 / 2.9
        m = ScalarProductModel(PAIR, Pareto(1.1, 1.0))
        t = 1e5
        assert scalar_product_tail(m, t, t) / float(m.theta.tail(t)) == pytest.approx(4 / 2.9, rel=1e-8)

    def test_negative_support_rejected(self):
        with pytest.raises(SpecError):
            ScalarProductModel(PAIR, Uniform(-1.0, 1.0))

    def test_zero_weight_rejected(self):
        with pytest.raises(SpecError):
            ScalarProductModel(PAIR, DegenerateAtConstant(0.0))

    def test_round_trip(self):
        m = ScalarProductModel(BivariatePair(P2, P2, FGM(0.3)), Uniform(0.5, 1.0))
        assert ScalarProductModel.from_dict(m.to_dict()) == m

    @settings(max_examples=25, deadline=None)
    @given(c=st.floats(0.1, 10.0), x=st.floats(1.0, 1e3), y=st.floats(1.0, 1e3))
    def test_degenerate_scaling_property(self, c, x, y):
        pair = BivariatePair(P2, P2, SurvivalClayton(2.0))
        v = scalar_product_tail(ScalarProductModel(pair, DegenerateAtConstant(c)), x, y)
        assert v == pytest.approx(float(pair.joint_tail(x / c, y / c)), rel=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(x=st.floats(1.0, 1e3), dx=st.floats(0.0, 1e3), y=st.floats(1.0, 1e3))
    def test_monotone(self, x, dx, y):
        m = ScalarProductModel(PAIR, Uniform(0.5, 2.0))
        a = scalar_product_tail(m, x, y)
        assert scalar_product_tail(m, x + dx, y) <= a * (1 + 1e-9)
        assert scalar_product_tail(m, y, x + dx) <= a * (1 + 1e-9)


class TestAssumptionA:
    T = np.geomspace(2.0, 200.0, 30)

    def test_bounded_support_zero_beyond_top(self):
        m = ScalarProductModel(PAIR, Uniform(0.5, 1.0))
        curves = check_assumption_A(m, [0.5, 2.0], self.T)
        for c, cv in curves.items():
            beyond = self.T >= 1.0 / c
            assert np.all(cv.values[beyond] == 0.0)
        assert assumption_a_supported(curves)

    def test_exponential_vanishes(self):
        curves = check_assumption_A(ScalarProductModel(PAIR, Exponential(1.0)), [0.5, 1.0], self.T)
        for cv in curves.values():
            # B̄(ct) = e^{-ct} against a polynomial H̄: eventually strictly decreasing
            tail = cv.values[self.T >= 20.0]
            assert np.all(np.diff(tail) < 0)
            assert cv.values[-1] < 1e-6
        assert assumption_a_supported(curves)

    def test_pareto_weight_fails(self):
        m = ScalarProductModel(PAIR, Pareto(1.1, 1.0))
        curves = check_assumption_A(m, [1.0], np.geomspace(10.0, 1e5, 12))
        # ratio tends to 2.9 / 4 rather than 0
        assert curves[1.0].values[-1] == pytest.approx(2.9 / 4, rel=1e-6)
        assert not assumption_a_supported(curves)


class TestAuxiliaryB:
    GRID = np.geomspace(1.0, 1e4, 240)

    def _expo(self):
        m = ScalarProductModel(PAIR, Exponential(1.0))
        btail = lambda s: float(m.theta.tail(s))  # noqa: E731
        hbar = lambda x, y: scalar_product_tail(m, x, y)  # noqa: E731
        return m, btail, hbar

    def test_refuses_without_evidence(self):
        _, btail, hbar = self._expo()
        with pytest.raises(UnsupportedModelError):
            build_auxiliary_b(btail, hbar, 3, self.GRID)

    def test_refuses_failing_evidence(self):
        m = ScalarProductModel(PAIR, Pareto(1.1, 1.0))
        ev = check_assumption_A(m, [1.0], np.geomspace(10.0, 1e5, 12))
        with pytest.raises(UnsupportedModelError):
            build_auxiliary_b(lambda s: float(m.theta.tail(s)), lambda x, y: scalar_product_tail(m, x, y), 3, self.GRID, ev)

    def test_exponential_properties(self):
        m, btail, hbar = self._expo()
        ev = check_assumption_A(m, [0.5, 1.0, 2.0], np.geomspace(2.0, 200.0, 30))
        b = build_auxiliary_b(btail, hbar, 4, self.GRID, ev)
        lam = b.lambdas
        assert lam.size == 4 and not b.meta["truncated"]
        assert np.all(lam[1:] > np.arange(2, 5) * lam[:-1])
        assert verify_auxiliary_b(b, btail, hbar, self.GRID) == {"nondecreasing": True, "little_o": True, "tail_bound": True}

    def test_bounded_against_half_witness(self):
        top = 1.0
        m = ScalarProductModel(PAIR, Uniform(0.5, top))
        btail = lambda s: float(m.theta.tail(s))  # noqa: E731
        hbar = lambda x, y: scalar_product_tail(m, x, y)  # noqa: E731
        ev = check_assumption_A(m, [1.0], np.geomspace(2.0, 200.0, 10))
        b = build_auxiliary_b(btail, hbar, 5, self.GRID, ev)
        assert verify_auxiliary_b(b, btail, hbar, self.GRID)["tail_bound"]
        # witness t/2: zero tail beyond 2 θ*
        t = self.GRID[self.GRID > 2 * top]
        assert all(btail(tt / 2) == 0.0 for tt in t)
        # produced b sits past the support top on its whole range, like the witness
        r = self.GRID[(self.GRID >= b.lambdas[0]) & (self.GRID <= b.lambdas[-1])]
        assert np.all(b(r) >= top) or b.lambdas[0] < top

    def test_single_segment(self):
        m, btail, hbar = self._expo()
        ev = check_assumption_A(m, [1.0], np.geomspace(2.0, 200.0, 30))
        b = build_auxiliary_b(btail, hbar, 1, self.GRID, ev)
        assert b.lambdas.size == 1
        r = self.GRID[self.GRID >= b.lambdas[0]][:50]
        assert np.all(np.diff(b(r)) >= 0)
        np.testing.assert_allclose(b(r), r)


class TestEq68:
    T = np.array([2.0, 5.0, 10.0, 20.0, 40.0])

    def test_bounded_zero_beyond_support(self):
        u = Uniform(0.5, 1.0)
        a, d = check_eq_6_8(u, u, weighted_pair_tail(PAIR, u, u), 1.0, 1.0, self.T)
        assert np.all(a.values == 0.0) and np.all(d.values == 0.0)

    def test_exponential_vs_pareto(self):
        e = Exponential(1.0)
        a, d = check_eq_6_8(e, e, weighted_pair_tail(PAIR, e, e), 1.0, 1.0, self.T)
        assert np.all(np.diff(a.values) < 0)
        assert a.values[-1] < 1e-8
        # closed form: e^{-40} / (E[Θ²] / 40²)²
        assert a.values[-1] == pytest.approx(math.exp(-40) / (2 / 1600) ** 2, rel=1e-7)

    def test_common_factor_tail(self):
        u = Uniform(0.5, 1.0)
        assert weighted_pair_tail(PAIR, u)(10.0, 10.0) == pytest.approx(3.875e-5, rel=1e-10)
