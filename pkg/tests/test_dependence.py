"""Copulas, pair and sequence models, and the TAI/GTAI diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavytail2d import dependence as dep
from heavytail2d.dependence import (
    FGM,
    BivariatePair,
    Comonotone,
    Countermonotone,
    GaussianCopula,
    Independent,
    SequenceModel,
    SurvivalClayton,
)
from heavytail2d.dists import Pareto, SpecError, Uniform

P2 = Pareto(2.0, 1.0)
KINDS = [Independent(), FGM(0.5), FGM(-0.7), SurvivalClayton(1.0), SurvivalClayton(3.0),
         Comonotone(), Countermonotone(), GaussianCopula(0.6), GaussianCopula(-0.4)]


def binom_ok(p_hat, p, m, k=3.0):
    return abs(p_hat - p) <= k * math.sqrt(max(p * (1 - p), 1e-300) / m)


class TestCopulaValidity:
    @pytest.mark.parametrize("c", KINDS, ids=lambda c: repr(c))
    def test_grounded_and_uniform_margins(self, c):
        g = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(c.copula(g, 0.0 * g), 0.0, atol=1e-15)
        np.testing.assert_allclose(c.copula(0.0 * g, g), 0.0, atol=1e-15)
        np.testing.assert_allclose(c.copula(g, np.ones_like(g)), g, atol=1e-12)
        np.testing.assert_allclose(c.copula(np.ones_like(g), g), g, atol=1e-12)

    @pytest.mark.parametrize("c", KINDS, ids=lambda c: repr(c))
    def test_frechet_bounds(self, c):
        u, v = np.meshgrid(np.linspace(0, 1, 50), np.linspace(0, 1, 50))
        val = c.copula(u, v)
        assert np.all(val <= np.minimum(u, v) + 1e-12)
        assert np.all(val >= np.maximum(u + v - 1, 0) - 1e-12)

    @pytest.mark.parametrize("c", [k for k in KINDS if k.closed_form], ids=lambda c: repr(c))
    def test_two_increasing(self, c):
        g = np.linspace(0, 1, 101)
        cc = c.copula(*np.meshgrid(g, g, indexing="ij"))
        mass = cc[1:, 1:] - cc[:-1, 1:] - cc[1:, :-1] + cc[:-1, :-1]
        assert mass.min() >= -1e-12

    @pytest.mark.parametrize("c", [GaussianCopula(0.6), GaussianCopula(-0.4)], ids=repr)
    def test_two_increasing_gaussian(self, c):
        g = np.linspace(0, 1, 21)
        cc = c.copula(*np.meshgrid(g, g, indexing="ij"))
        mass = cc[1:, 1:] - cc[:-1, 1:] - cc[1:, :-1] + cc[:-1, :-1]
        assert mass.min() >= -1e-10

    def test_gaussian_against_mvn_cdf(self):
        from scipy.stats import multivariate_normal
        from scipy.special import ndtri

        rho = 0.6
        for u, v in [(0.01, 0.02), (0.3, 0.7), (0.001, 0.001)]:
            ref = multivariate_normal([0, 0], [[1, rho], [rho, 1]]).cdf([ndtri(u), ndtri(v)])
            assert GaussianCopula(rho).copula(u, v) == pytest.approx(ref, abs=1e-7)

    @pytest.mark.parametrize("c", [FGM(0.5), SurvivalClayton(2.0), GaussianCopula(0.5), Independent()], ids=repr)
    @given(s=st.floats(0.01, 0.99), o=st.floats(0.01, 0.99))
    @settings(max_examples=40, deadline=None)
    def test_conditional_is_derivative(self, c, s, o):
        h = 1e-6
        fd = (c.copula(s, o + h) - c.copula(s, o - h)) / (2 * h)
        assert c.conditional(s, o) == pytest.approx(fd, abs=1e-6)

    @pytest.mark.parametrize("c", [FGM(0.5), FGM(-1.0), SurvivalClayton(2.0), GaussianCopula(0.5)], ids=repr)
    @given(u=st.floats(0.001, 0.999), w=st.floats(0.001, 0.999))
    @settings(max_examples=40, deadline=None)
    def test_partner_inverts_conditional(self, c, u, w):
        v = float(c.partner(np.array([u]), np.array([w]))[0])
        assert c.conditional(v, u) == pytest.approx(w, abs=1e-10)

    def test_fgm_range(self):
        with pytest.raises(SpecError):
            FGM(1.5)
        with pytest.raises(SpecError):
            dep.dependence_from_dict({"kind": "FGM", "theta": -1.2})

    @pytest.mark.parametrize("c", KINDS, ids=repr)
    def test_json_round_trip(self, c):
        assert dep.dependence_from_dict(c.to_dict()) == c


class TestJointTail:
    def test_independent(self):
        assert dep.joint_tail(BivariatePair(P2, P2), 10.0, 10.0) == pytest.approx(1e-4, rel=1e-14)

    def test_comonotone(self):
        assert dep.joint_tail(BivariatePair(P2, P2, Comonotone()), 10.0, 100.0) == pytest.approx(1e-4, rel=1e-14)

    def test_fgm_levels(self):
        # 1 - F - G + C(F, G) with C the FGM distribution at F = G = 0.99
        F = 0.99
        cdf = F * F * (1 + 0.5 * (1 - F) * (1 - F))
        expv = 1 - 2 * F + cdf
        assert FGM(0.5).copula(0.01, 0.01) == pytest.approx(1.49005e-4, rel=1e-12)
        assert expv == pytest.approx(1.49005e-4, rel=1e-9)

    @pytest.mark.parametrize("c", KINDS, ids=repr)
    def test_monotone_in_each_argument(self, c):
        pair = BivariatePair(P2, Pareto(1.5, 2.0), c)
        g = np.geomspace(1.0, 100.0, 12)
        jt = np.array([[pair.joint_tail(a, b) for b in g] for a in g])
        assert np.all(np.diff(jt, axis=0) <= 1e-15)
        assert np.all(np.diff(jt, axis=1) <= 1e-15)


class TestSamplePair:
    def test_countermonotone_antithetic(self):
        z = dep.sample_pair(BivariatePair(Uniform(0, 1), Uniform(0, 1), Countermonotone()), 4, 10_000)
        np.testing.assert_allclose(z.sum(axis=1), 1.0, atol=1e-12)

    def test_comonotone_equal(self):
        z = dep.sample_pair(BivariatePair(Uniform(0, 1), Uniform(0, 1), Comonotone()), 4, 10_000)
        np.testing.assert_array_equal(z[:, 0], z[:, 1])

    def test_fgm_binomial(self):
        pair = BivariatePair(P2, P2, FGM(0.5))
        m = 10**6
        z = dep.sample_pair(pair, 3, m)
        assert binom_ok(np.mean((z[:, 0] > 5) & (z[:, 1] > 5)), pair.joint_tail(5.0, 5.0), m)

    @pytest.mark.parametrize("c", KINDS, ids=repr)
    def test_empirical_joint_tail(self, c):
        pair = BivariatePair(P2, P2, c)
        m = 10**6
        z = pair.sample(17, m)
        for t in (1.5, 3.0, 8.0):
            assert binom_ok(np.mean((z[:, 0] > t) & (z[:, 1] > t)), pair.joint_tail(t, t), m)

    def test_deterministic(self):
        pair = BivariatePair(P2, P2, SurvivalClayton(2.0))
        np.testing.assert_array_equal(pair.sample(8, 1000), pair.sample(8, 1000))


class TestSequenceModel:
    def test_blocks_independent_factorizes(self):
        model = SequenceModel((P2, Pareto(3.0, 1.0)), (Pareto(1.5, 2.0), P2))
        for k in range(2):
            for l in range(2):
                u = model.x_block[k].tail(7.0)
                v = model.y_block[l].tail(9.0)
                assert model.pair_tail(k, l, 7.0, 9.0) == u * v

    def test_blocks_independent_n1_matches_pair(self):
        model = SequenceModel((P2,), (P2,))
        z = dep.sample_sequence(model, 5, 1000)
        np.testing.assert_array_equal(z, BivariatePair(P2, P2).sample(5, 1000))

    def test_common_pair_comonotone(self):
        model = SequenceModel((P2, P2), (P2, P2), dep.COMMON_PAIR_IID, Comonotone())
        z = dep.sample_sequence(model, 5, 50_000)
        np.testing.assert_array_equal(z[:, 0], z[:, 2])
        np.testing.assert_array_equal(z[:, 1], z[:, 3])
        assert abs(np.corrcoef(np.log(z[:, 0]), np.log(z[:, 1]))[0, 1]) < 0.02

    def test_pairwise_fgm_pair_tail(self):
        model = SequenceModel((P2, P2), (P2, P2), dep.PAIRWISE_FGM, fgm_theta=0.5)
        m = 10**6
        z = dep.sample_sequence(model, 9, m)
        for t in (2.0, 5.0):
            assert binom_ok(np.mean((z[:, 0] > t) & (z[:, 2] > t)), model.pair_tail(0, 0, t, t), m)
            assert binom_ok(np.mean((z[:, 0] > t) & (z[:, 1] > t)), model.joint_tail_subset([0, 1], [t, t]), m)

    def test_pairwise_fgm_trio_and_quad(self):
        model = SequenceModel((P2, P2), (P2, P2), dep.PAIRWISE_FGM, fgm_theta=0.5)
        m = 4 * 10**6
        z = dep.sample_sequence(model, 21, m)
        t = 2.0
        for idx in ([0, 1, 2], [1, 2, 3], [0, 1, 2, 3]):
            assert binom_ok(np.mean(np.all(z[:, idx] > t, axis=1)), model.joint_tail_subset(idx, [t] * len(idx)), m)

    def test_pairwise_fgm_validity(self):
        # sign-vertex check: 1 + 0.5 * (sum of pairwise products) >= 0 fails for six variables
        with pytest.raises(SpecError):
            SequenceModel((P2,) * 3, (P2,) * 3, dep.PAIRWISE_FGM, fgm_theta=0.5)
        SequenceModel((P2,) * 3, (P2,) * 3, dep.PAIRWISE_FGM, fgm_theta=0.3)

    def test_json_round_trip(self):
        for model in (
            SequenceModel((P2, P2), (P2, P2)),
            SequenceModel((P2, P2), (P2, P2), dep.COMMON_PAIR_IID, FGM(0.5)),
            SequenceModel((P2, P2), (P2, P2), dep.PAIRWISE_FGM, fgm_theta=0.25),
        ):
            assert SequenceModel.from_dict(model.to_dict()) == model

    def test_csv_header(self):
        model = SequenceModel((P2, P2), (P2, P2))
        text = dep.samples_csv(dep.sample_sequence(model, 1, 3), 2)
        assert text.splitlines()[0] == "x1,x2,y1,y2"
        assert len(text.splitlines()) == 4


class TestSaiProfile:
    def test_independent_is_one(self):
        c = dep.sai_profile(BivariatePair(P2, P2), np.geomspace(1, 1e3, 20))
        assert np.all(c.values == 1.0)

    def test_fgm_limit(self):
        t = 100.0  # marginal tail 1e-4
        c = dep.sai_profile(BivariatePair(P2, P2, FGM(0.5)), [10.0, t])
        assert abs(c.values[-1] - 1.5) < 1e-3

    def test_clayton_divergent(self):
        t = np.geomspace(2, 100, 15)
        c = dep.sai_profile(BivariatePair(P2, P2, SurvivalClayton(1.0)), t)
        assert np.all(np.diff(c.values) > 0)
        assert c.values[-1] > 1e3

    def test_gaussian_censored(self):
        c = dep.sai_profile(BivariatePair(P2, P2, GaussianCopula(-0.9)), [2.0, 1e4])
        assert c.flags[-1] == "censored"


class TestScaling:
    def test_clayton(self):
        est = dep.scaling_h(SurvivalClayton(1.0), 1.0, 1.0, np.geomspace(1e-2, 1e-8, 13))
        assert est.gamma_exact == 1.0 and est.h_exact == pytest.approx(0.5)
        assert est.gamma == pytest.approx(1.0, abs=1e-4)
        assert est.h == pytest.approx(0.5, rel=1e-4)

    def test_independent(self):
        est = dep.scaling_h(Independent(), 1.0, 1.0, np.geomspace(1e-1, 1e-6, 11))
        assert est.gamma == pytest.approx(2.0, abs=1e-10)
        assert est.h == pytest.approx(1.0, rel=1e-8)

    def test_comonotone(self):
        est = dep.scaling_h(Comonotone(), 1.0, 2.0, np.geomspace(1e-1, 1e-6, 11))
        assert est.gamma == pytest.approx(1.0, abs=1e-10)
        assert est.h == pytest.approx(1.0, rel=1e-8)

    def test_truncates_at_zero(self):
        est = dep.scaling_h(Countermonotone(), 1.0, 1.0, [0.4, 0.2, 0.1])
        assert est.points == 0 and math.isnan(est.gamma)


class TestDiagnostics:
    def test_tai_independent_tracks_marginal(self):
        model = SequenceModel((P2, P2), (P2, P2))
        z = model.sample(2, 10**6)[:, :2]
        t = np.array([2.0, 5.0, 10.0])
        c = dep.diagnose_tai(z, t)
        assert np.all(np.abs(c.values - P2.tail(t)) < 5 * c.stderr + 1e-3)

    def test_tai_duplicate_is_one(self):
        x = P2.sample(3, 10**4)
        c = dep.diagnose_tai(np.column_stack([x, x]), [2.0, 5.0])
        np.testing.assert_array_equal(c.values, 1.0)

    def test_tai_fgm_duo(self):
        pair = BivariatePair(P2, P2, FGM(0.5))
        z = pair.sample(6, 10**6)
        t = [2.0, 5.0, 10.0]  # tail levels 0.25, 0.04, 0.01
        c = dep.diagnose_tai(z, t)
        assert np.all(np.diff(c.values) < 0)
        assert c.values[-1] < 0.05

    def test_gtai_independent(self):
        model = SequenceModel((P2, P2), (P2, P2))
        c = dep.diagnose_gtai(model.sample(4, 10**6), 2, [2.0, 4.0, 8.0])
        assert np.all(np.diff(c.values) < 0)

    def test_gtai_duplicate_violates(self):
        x = P2.sample(3, 10**5)
        y = Pareto(2.0, 1.0).sample(4, 10**5)
        z = np.column_stack([x, x, y, y[::-1]])
        c = dep.diagnose_gtai(z, 2, [1.5, 3.0])
        np.testing.assert_array_equal(c.values, 1.0)

    @pytest.mark.slow
    def test_gtai_pairwise_fgm(self):
        model = SequenceModel((P2, P2), (P2, P2), dep.PAIRWISE_FGM, fgm_theta=0.5)
        u = np.array([0.08, 0.04, math.sqrt(1e-3 / 1.5), 0.015])
        t = u ** -0.5
        # the pair tail of an FGM(0.5) duo is about 1.5 u^2, so index 2 conditions at level 1e-3
        c = dep.diagnose_gtai(model.sample(31, 10**7), 2, t)
        assert np.all(np.diff(c.values) < 0)
        assert c.values[2] < 0.1

    def test_empty_flagged(self):
        c = dep.diagnose_tai(np.ones((10, 2)), [5.0])
        assert c.flags[0] == "empty-conditioning"
