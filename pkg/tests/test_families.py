"""Conditional distributions: CDF tables, lower inverse, pmf, moments, sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dpitres import families as fam
from dpitres.errors import ParameterDomainError
from dpitres.families import NEG_INF, POS_INF

from conftest import oracle_cdf, oracle_lower_inverse, random_params, scipy_dist


FAMILY_NAMES = ["poisson", "negbin", "bernoulli", "ordinal", "zip"]


class TestCdfExamples:
    def test_poisson_at_zero(self):
        assert fam.cdf(fam.Poisson(1.0), 0) == pytest.approx(0.3678794412, abs=1e-10)

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_neg_inf_is_zero(self, family, rng):
        assert fam.cdf(random_params(family, 1, rng), NEG_INF) == 0.0

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_pos_inf_is_one(self, family, rng):
        assert fam.cdf(random_params(family, 1, rng), POS_INF) == 1.0

    def test_negbin_at_zero(self):
        assert fam.cdf(fam.NegBinomial(2.0, 2.0), 0) == pytest.approx(0.25, abs=1e-15)

    def test_zip_at_zero(self):
        assert fam.cdf(fam.ZeroInflatedPoisson(0.5, 1.0), 0) == pytest.approx(0.6839397206, abs=1e-10)

    def test_ordinal_at_cutpoint(self):
        p = fam.OrdinalLogit(0.0, np.array([0.0, 2.0]))
        assert fam.cdf(p, 1) == pytest.approx(0.8807970780, abs=1e-10)

    def test_negative_outcome(self):
        assert fam.cdf(fam.Poisson(3.0), -2) == 0.0

    def test_bounded_beyond_top(self):
        assert fam.cdf(fam.Bernoulli(0.3), 5) == 1.0


class TestParameterDomain:
    @pytest.mark.parametrize(
        "build",
        [
            lambda: fam.Poisson(0.0),
            lambda: fam.Poisson(np.nan),
            lambda: fam.NegBinomial(1.0, 0.0),
            lambda: fam.NegBinomial(-1.0, 2.0),
            lambda: fam.Bernoulli(1.0),
            lambda: fam.Bernoulli(0.0),
            lambda: fam.OrdinalLogit(0.0, np.array([1.0, 0.5])),
            lambda: fam.ZeroInflatedPoisson(1.0, 1.0),
            lambda: fam.ZeroInflatedPoisson(0.2, -1.0),
        ],
    )
    def test_invalid_parameters_rejected(self, build):
        with pytest.raises(ParameterDomainError):
            build()

    def test_s_outside_unit_interval(self):
        with pytest.raises(ParameterDomainError):
            fam.cdf_lower_inverse(fam.Poisson(1.0), 1.5)


class TestLowerInverse:
    @pytest.mark.parametrize(
        "s, expected", [(0.2, NEG_INF), (0.4, 0.0), (0.8, 1.0), (0.0, NEG_INF), (1.0, POS_INF)]
    )
    def test_poisson_examples(self, s, expected):
        assert fam.cdf_lower_inverse(fam.Poisson(1.0), s) == expected

    def test_bounded_at_one_returns_top(self):
        p = fam.OrdinalLogit(0.3, np.array([-1.0, 0.0, 1.5]))
        assert fam.cdf_lower_inverse(p, 1.0) == 3.0

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_round_trip_at_atoms(self, family, rng):
        p = random_params(family, 1, rng)
        for k in range(6):
            f = fam.cdf(p, k)
            if f >= 1.0:
                break
            assert fam.cdf(p, fam.cdf_lower_inverse(p, f)) == f

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_matches_enumeration_oracle(self, family, rng):
        p = random_params(family, 25, rng)
        s = rng.random(25)
        for i in range(25):
            got = fam.cdf_lower_inverse(p.row(i), s[i])
            assert got == oracle_lower_inverse(p, i, s[i])

    def test_far_tail_extends_table(self):
        p = fam.Poisson(0.5)
        tab = p.table(0)
        s = float(tab[-1])
        k = fam.cdf_lower_inverse(p, s)
        assert math.isfinite(k) and fam.cdf(p, k) <= s


class TestTablesAgainstScipy:
    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_cdf_tables(self, family, rng):
        p = random_params(family, 20, rng)
        for i in range(20):
            tab = p.table(i)
            ks = np.arange(len(tab))
            want = np.array([oracle_cdf(p, i, int(k)) for k in ks])
            np.testing.assert_allclose(tab, want, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("family", ["poisson", "negbin", "zip"])
    def test_tail_mass_below_cut(self, family, rng):
        p = random_params(family, 10, rng)
        for i in range(10):
            assert 1.0 - p.table(i)[-1] < 1e-13

    def test_large_mean_negbin_table_is_compact(self):
        tab = fam.NegBinomial(50.0, 0.1).table(0)
        assert len(tab) < 50_000
        assert 1.0 - tab[-1] < 1e-13

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_cdf_is_pmf_partial_sum(self, family, rng):
        p = random_params(family, 1, rng)
        ks = np.arange(0, 12)
        pm = np.array([fam.pmf(p, int(k)) for k in ks])
        cd = np.array([fam.cdf(p, int(k)) for k in ks])
        np.testing.assert_allclose(np.cumsum(pm), cd, atol=1e-12)
        assert np.all(np.diff(cd) >= 0)


class TestPmfAndMean:
    def test_bernoulli_pmf(self):
        assert fam.pmf(fam.Bernoulli(0.3), 1) == pytest.approx(0.3, abs=1e-15)

    def test_poisson_pmf_zero(self):
        assert fam.pmf(fam.Poisson(1.0), 0) == pytest.approx(math.exp(-1), abs=1e-15)

    def test_ordinal_pmf(self):
        p = fam.OrdinalLogit(0.0, np.array([0.0, 2.0]))
        assert fam.pmf(p, 1) == pytest.approx(0.3807970780, abs=1e-10)

    def test_zip_mean(self):
        assert fam.mean(fam.ZeroInflatedPoisson(0.5, 2.0))[0] == pytest.approx(1.0)

    def test_ordinal_mean(self):
        p = fam.OrdinalLogit(0.0, np.array([0.0, 2.0]))
        assert fam.mean(p)[0] == pytest.approx(0.6192029, abs=1e-7)

    def test_poisson_mean(self):
        assert fam.mean(fam.Poisson(3.0))[0] == 3.0

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_mean_matches_table(self, family, rng):
        p = random_params(family, 5, rng)
        for i in range(5):
            tab = p.table(i, 60)
            pm = np.diff(np.concatenate([[0.0], tab]))
            assert fam.mean(p)[i] == pytest.approx(np.sum(np.arange(len(tab)) * pm), rel=1e-9)

    @pytest.mark.parametrize("family", FAMILY_NAMES)
    def test_logpmf_matches_table(self, family, rng):
        p = random_params(family, 8, rng)
        y = np.arange(8) % (2 if family == "bernoulli" else 3)
        want = np.log([fam.pmf(p.row(i), int(y[i])) for i in range(8)])
        np.testing.assert_allclose(p.logpmf(y), want, rtol=1e-9)


class TestSample:
    def test_deterministic(self):
        p = fam.Poisson(np.full(50, 2.0))
        a = fam.sample(p, np.random.default_rng(3))
        b = fam.sample(p, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_near_degenerate_bernoulli(self):
        p = fam.Bernoulli(np.full(1000, 1 - 1e-12))
        assert np.all(fam.sample(p, np.random.default_rng(0)) == 1)

    @pytest.mark.slow
    def test_poisson_mean_band(self):
        n = 10**6
        p = fam.Poisson(np.ones(n))
        draws = fam.sample(p, np.random.default_rng(11))
        assert abs(draws.mean() - 1.0) < 3 * math.sqrt(1.0 / n)

    @pytest.mark.parametrize(
        "build",
        [
            lambda n: fam.NegBinomial(np.full(n, 1.7), 2.3),
            lambda n: fam.ZeroInflatedPoisson(np.full(n, 0.3), np.full(n, 2.0)),
            lambda n: fam.OrdinalLogit(np.full(n, 0.4), np.array([-0.5, 0.8, 2.0])),
        ],
        ids=["negbin", "zip", "ordinal"],
    )
    def test_chi_square_goodness_of_fit(self, build):
        n, kmax = 20000, 6
        draws = fam.sample(build(n), np.random.default_rng(5))
        one = build(1)
        observed = np.bincount(np.minimum(draws, kmax), minlength=kmax + 1)
        cd = np.array([fam.cdf(one, k) for k in range(kmax)])
        probs = np.diff(np.concatenate([[0.0], cd, [1.0]]))
        keep = probs * n >= 5
        expected = probs[keep] * n
        obs = observed[keep]
        _, pval = stats.chisquare(obs, expected * obs.sum() / expected.sum())
        assert pval > 1e-4


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(
        lam=st.floats(0.01, 30.0),
        s=st.floats(0.0, 1.0),
    )
    def test_galois_property_poisson(self, lam, s):
        p = fam.Poisson(lam)
        k = fam.cdf_lower_inverse(p, s)
        if math.isfinite(k):
            assert fam.cdf(p, k) <= s < fam.cdf(p, k + 1)
        elif k == NEG_INF:
            assert fam.cdf(p, 0) > s

    @settings(max_examples=200, deadline=None)
    @given(
        mu=st.floats(0.01, 20.0),
        theta=st.floats(0.1, 20.0),
        s=st.floats(0.0, 1.0),
        t=st.floats(0.0, 1.0),
    )
    def test_composition_monotone_and_below_identity(self, mu, theta, s, t):
        p = fam.NegBinomial(mu, theta)
        lo, hi = sorted((s, t))
        c_lo = fam.cdf(p, fam.cdf_lower_inverse(p, lo))
        c_hi = fam.cdf(p, fam.cdf_lower_inverse(p, hi))
        assert c_lo <= lo and c_hi <= hi
        assert c_lo <= c_hi

    @settings(max_examples=100, deadline=None)
    @given(
        eta=st.floats(-4.0, 4.0),
        gaps=st.lists(st.floats(0.05, 3.0), min_size=1, max_size=4),
        start=st.floats(-3.0, 3.0),
        s=st.floats(0.0, 1.0),
    )
    def test_galois_property_ordinal(self, eta, gaps, start, s):
        cuts = start + np.concatenate([[0.0], np.cumsum(gaps)])
        p = fam.OrdinalLogit(eta, cuts)
        k = fam.cdf_lower_inverse(p, s)
        if k == NEG_INF:
            assert fam.cdf(p, 0) > s
        else:
            assert fam.cdf(p, k) <= s
            if k < p.kmax:
                assert fam.cdf(p, k + 1) > s
