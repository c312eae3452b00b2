"""Class-limit ratio curves, the verdict rule and the constructive insensitivity function."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavytail2d import classify as cl
from heavytail2d.classify import RatioProbe
from heavytail2d.curves import CONTRADICTS, INCONCLUSIVE, SUPPORTS, RatioCurve, verdict
from heavytail2d.dependence import (
    FGM,
    BivariatePair,
    Comonotone,
    Independent,
    SequenceModel,
    SurvivalClayton,
    COMMON_PAIR_IID,
)
from heavytail2d.dists import (
    DegenerateAtConstant,
    Exponential,
    Lognormal,
    Pareto,
    UnsupportedModelError,
    WeibullHeavy,
    conv_tail,
)

P2 = Pareto(2.0, 1.0)
IND = BivariatePair(P2, P2, Independent())
COMO = BivariatePair(P2, P2, Comonotone())


class TestVerdictRule:
    def test_constant_one_supports(self):
        c = RatioCurve(np.arange(1.0, 9.0), np.ones(8))
        assert verdict(c, 1.0, 0.05).status == SUPPORTS

    def test_doubling_unbounded(self):
        c = RatioCurve(np.arange(1.0, 13.0), 2.0 ** np.arange(1, 13))
        assert verdict(c, "bounded", cap=1e3).status == CONTRADICTS

    def test_noisy_flat_inconclusive(self):
        c = RatioCurve(np.arange(1.0, 9.0), np.full(8, 1.01), stderr=np.full(8, 0.5))
        assert verdict(c, 1.0, 0.05).status == INCONCLUSIVE

    def test_away_from_target_contradicts(self):
        c = RatioCurve(np.arange(1.0, 9.0), np.linspace(1.5, 3.0, 8))
        assert verdict(c, 1.0, 0.05).status == CONTRADICTS

    def test_converging_from_far_inconclusive(self):
        c = RatioCurve(np.arange(1.0, 9.0), 1.0 + 2.0 / np.arange(1.0, 9.0))
        assert verdict(c, 1.0, 0.05).status == INCONCLUSIVE

    def test_flagged_points_ignored(self):
        c = RatioCurve(np.arange(1.0, 5.0), [1.0, 1.0, 1.0, 9.0], flags=("", "", "", "unreliable"))
        assert verdict(c, 1.0, 0.05).status == SUPPORTS

    @given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=30), st.floats(0.01, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_reproducible(self, vals, tol):
        c = RatioCurve(np.arange(1.0, len(vals) + 1.0), np.array(vals))
        assert verdict(c, 1.0, tol) == verdict(RatioCurve(c.thresholds, c.values.copy()), 1.0, tol)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            verdict(RatioCurve(np.array([]), np.array([])))


class TestL2:
    def test_pareto_shift_arithmetic(self):
        c = cl.l2_ratio(IND, RatioProbe("L", shift=(1.0, 1.0)), [10.0, 1000.0])
        assert c.values[0] == pytest.approx((10 / 9) ** 4, rel=1e-12)
        assert c.values[1] == pytest.approx((1000 / 999) ** 4, rel=1e-12)
        assert c.values[0] == pytest.approx(1.5242, abs=1e-4)
        assert c.values[1] == pytest.approx(1.0040, abs=1e-4)

    def test_zero_shift(self):
        c = cl.l2_ratio(IND, RatioProbe("L", shift=(0.0, 0.0)), np.geomspace(2, 1e4, 9))
        np.testing.assert_array_equal(c.values, 1.0)

    @pytest.mark.parametrize("pair", [IND, COMO, BivariatePair(P2, Lognormal(0, 1), FGM(-0.5))], ids=str)
    @pytest.mark.parametrize("ray", cl.DEFAULT_RAYS)
    def test_at_least_one(self, pair, ray):
        c = cl.l2_ratio(pair, RatioProbe("L", shift=(0.7, 2.0), ray=ray), np.geomspace(3, 1e5, 40))
        assert np.all(c.values[c.usable] >= 1.0)

    def test_vanishing_tail_truncates(self):
        pair = BivariatePair(Exponential(1.0), Exponential(1.0))
        c = cl.l2_ratio(pair, RatioProbe("L"), [10.0, 500.0, 1000.0])
        assert c.flags == ("", "zero-denominator", "truncated")


class TestD2:
    def test_independent_pareto_constant(self):
        c = cl.d2_ratio(IND, RatioProbe("D", scale=(0.5, 0.5)), np.geomspace(2, 1e6, 30))
        np.testing.assert_allclose(c.values, 16.0, rtol=1e-12)

    def test_comonotone_pareto_constant(self):
        c = cl.d2_ratio(COMO, RatioProbe("D", scale=(0.5, 0.5)), np.geomspace(2, 1e6, 30))
        np.testing.assert_allclose(c.values, 4.0, rtol=1e-12)

    def test_lognormal_unbounded(self):
        ln = Lognormal(0.0, 1.0)
        pair = BivariatePair(ln, ln)
        t = ln.isf(np.geomspace(1e-2, 1e-8, 25))
        c = cl.d2_ratio(pair, RatioProbe("D", scale=(0.5, 0.5)), t)
        assert np.all(np.diff(c.values) > 0)
        # mpmath erfc evaluation of (F̄(t/2) / F̄(t))^2 at 30 digits
        exact = cl.d2_ratio(pair, RatioProbe("D", scale=(0.5, 0.5)), [100.0, 200.0]).values
        np.testing.assert_allclose(exact, [493.202306120254877, 1243.43955616743534], rtol=1e-9)
        assert c.values[-1] > 1e3

    @given(b1=st.floats(0.05, 0.99), b2=st.floats(0.05, 0.99), t=st.floats(2.0, 1e5))
    @settings(max_examples=60, deadline=None)
    def test_at_least_one(self, b1, b2, t):
        pair = BivariatePair(P2, Lognormal(0, 1), SurvivalClayton(2.0))
        c = cl.d2_ratio(pair, RatioProbe("D", scale=(b1, b2)), [t])
        assert c.values[0] >= 1.0 - 1e-15


class TestC2:
    def test_pareto_profile(self):
        t = np.geomspace(2, 1e5, 12)
        prof = cl.c2_profile(IND, [0.9, 0.99, 1.0], t)
        np.testing.assert_allclose(prof.sup_curve.values, [0.9 ** -4, 0.99 ** -4, 1.0], rtol=1e-12)
        assert prof.sup_curve.values[0] == pytest.approx(1.524, abs=1e-3)
        assert prof.sup_curve.values[1] == pytest.approx(1.0410, abs=1e-4)
        assert prof.verdict().status == SUPPORTS

    def test_weibull_not_consistent(self):
        wb = WeibullHeavy(0.5, 1.0)
        prof = cl.c2_profile(BivariatePair(wb, wb), [0.9, 0.99], np.geomspace(10, 1e4, 10))
        assert prof.sup_curve.values[0] > 10


class TestS2:
    def test_rejects_light(self):
        e = Exponential(1.0)
        with pytest.raises(UnsupportedModelError):
            cl.s2_ratio(SequenceModel((e, e), (e, e)), [5.0], 10**4, 1)

    def test_rejects_degenerate(self):
        d = DegenerateAtConstant(1.0)
        with pytest.raises(UnsupportedModelError):
            cl.s2_ratio(SequenceModel((d, d), (d, d)), [1.5], 10**4, 1)

    def test_rejects_non_iid(self):
        with pytest.raises(UnsupportedModelError):
            cl.s2_ratio(SequenceModel((P2, Pareto(3.0, 1.0)), (P2, P2)), [5.0], 10**4, 1)

    def test_median_against_convolution(self):
        # blocks factorize: P[S2 > t, T2 > t] / F̄(t)^2 = (P[S2 > t] / F̄(t))^2
        model = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, Independent())
        t = 2.5
        c = cl.s2_ratio(model, [t], 10**6, 5)
        exact = (conv_tail(P2, P2, t).value / P2.tail(t)) ** 2
        assert abs(c.values[0] - exact) <= 3 * c.stderr[0]

    @pytest.mark.slow
    def test_toward_four_at_deep_level(self):
        model = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, Independent())
        t = 10.0  # joint tail level 1e-4
        c = cl.s2_ratio(model, [t], 10**7, 6)
        assert c.flags == ("",)
        exact = (conv_tail(P2, P2, t).value / P2.tail(t)) ** 2
        assert abs(c.values[0] - exact) <= 3 * c.stderr[0]
        # second-order bias at this level is still large; the ratio descends toward 4 from above
        assert c.values[0] > 4.0

    def test_within_ten_percent_at_marginal_level(self):
        # marginal tail 1e-4 puts the joint event near 4e-8, out of plain Monte Carlo reach
        t = 100.0
        exact = (conv_tail(P2, P2, t).value / P2.tail(t)) ** 2
        assert abs(exact / 4.0 - 1.0) < 0.1

    def test_unreliable_flag(self):
        model = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, Independent())
        c = cl.s2_ratio(model, [2.0, 100.0], 2000, 5)
        assert c.flags == ("", "unreliable")

    def test_worker_invariance(self):
        model = SequenceModel((P2, P2), (P2, P2), COMMON_PAIR_IID, FGM(0.5))
        a = cl.s2_ratio(model, [3.0, 6.0], 200_000, 9, workers=1)
        b = cl.s2_ratio(model, [3.0, 6.0], 200_000, 9, workers=4)
        np.testing.assert_array_equal(a.values, b.values)


class TestUnivariate:
    def test_pareto_d_constant(self):
        c = cl.univariate_ratio(P2, "D-scale", np.geomspace(2, 1e6, 25), 0.5)
        np.testing.assert_allclose(c.values, 4.0, atol=1e-9)

    def test_weibull_l_closed_form(self):
        x = np.geomspace(2, 1e4, 20)
        c = cl.univariate_ratio(WeibullHeavy(0.5, 1.0), "L-shift", x, 1.0)
        np.testing.assert_allclose(c.values, np.exp(np.sqrt(x) - np.sqrt(x - 1)), rtol=1e-12)
        assert np.all(np.diff(c.values) < 0)

    def test_weibull_d_grows(self):
        x = np.array([10.0, 100.0, 300.0])
        c = cl.univariate_ratio(WeibullHeavy(0.5, 1.0), "D-scale", x, 0.5)
        np.testing.assert_allclose(c.values, np.exp(np.sqrt(x) - np.sqrt(x / 2)), rtol=1e-12)
        assert c.values[-1] > 100

    def test_c_profile(self):
        c = cl.univariate_ratio(P2, "C-profile", np.geomspace(2, 1e4, 9), [0.9, 0.99, 0.999])
        np.testing.assert_allclose(c.values, np.array([0.9, 0.99, 0.999]) ** -2, rtol=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            cl.univariate_ratio(P2, "S-conv", [2.0])


class TestInsensitivity:
    @pytest.mark.parametrize("pair", [IND, COMO], ids=["independent", "comonotone"])
    def test_construction_properties(self, pair):
        grid = np.geomspace(10.0, 1e6, 400)
        fn = cl.build_insensitivity(pair, 200, grid)
        assert fn.breakpoints.size >= 50
        assert np.all(np.diff(fn.breakpoints) > 0)
        xs = np.geomspace(10.0, 1e6, 2000)
        a = fn(xs)
        assert np.all(np.diff(a) >= 0)
        assert a[-1] >= 50
        assert fn.little_o_ratio() < 0.05

    @pytest.mark.parametrize("pair", [IND, COMO], ids=["independent", "comonotone"])
    def test_defining_inequality_on_grid(self, pair):
        grid = np.geomspace(10.0, 1e6, 400)
        fn = cl.build_insensitivity(pair, 200, grid)
        excess = cl.check_insensitivity(fn, pair, grid)
        assert excess.size > 0 and np.all(excess <= 1e-12)

    def test_at_every_breakpoint(self):
        grid = np.geomspace(10.0, 1e6, 400)
        fn = cl.build_insensitivity(IND, 100, grid)
        for u, n in zip(fn.breakpoints, fn.levels):
            dev = cl._shift_deviation(lambda x, y: IND.joint_tail(x, y), u, 1.0, n)
            assert dev <= 1.0 / n

    def test_truncation_flag(self):
        fn = cl.build_insensitivity(IND, 10_000, np.geomspace(10.0, 1e4, 100))
        assert fn.truncated
        assert fn.levels[-1] < 10_000

    def test_single_level(self):
        fn = cl.build_insensitivity(IND, 1)
        assert fn.levels.tolist() == [1.0] and not fn.truncated


class TestInclusionChain:
    def test_consistent_over_catalog(self):
        checks = cl.inclusion_cross_check()
        assert len(checks) == len(cl.catalog_models()) * len(cl.DEFAULT_RAYS)
        bad = [c for c in checks if not c.consistent]
        assert not bad, bad
        assert any(c.c2_status == SUPPORTS for c in checks)
