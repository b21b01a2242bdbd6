import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from spectest.errors import DegenerateScaleError, InputError, NegativeVarianceWarning
from spectest.kernels import bartlett_priestley, cross_validate_bandwidth, smooth, wrap_angle
from spectest.series import FrequencyGrid, SpectralMatrixField, TimeSeriesPanel, demean, periodogram
from spectest.statistic import (
    CenteringEstimates,
    StatisticValue,
    TestKind,
    TestReport,
    asymptotic_test,
    compute_tn,
    detection_shift,
    estimate_mu_hat,
    estimate_tau_hat_sq,
    exactness_condition,
    gamma_matrix,
    normal_quantile,
    standardize,
    _clamp,
)

from conftest import constant_field, random_hermitian_field

K = bartlett_priestley()


def pipeline(panel, h):
    sm = smooth(periodogram(panel), K, h)
    stat = compute_tn(sm, panel.p, panel.q, h)
    cent = CenteringEstimates(estimate_mu_hat(sm, K, panel.p, panel.q),
                              estimate_tau_hat_sq(sm, K, panel.p, panel.q))
    return stat, cent


def scalar_field(n, f, c):
    """p=1, q=2 field with F11 = F22 = f and F12 = c (arrays over the grid)."""
    m = np.zeros((n, 2, 2), dtype=complex)
    m[:, 0, 0] = m[:, 1, 1] = f
    m[:, 0, 1] = c
    m[:, 1, 0] = np.conj(c)
    return SpectralMatrixField(FrequencyGrid(n), m)


class TestTn:
    def test_identical_copies_give_zero(self, rng):
        x = rng.normal(size=(50, 2))
        panel = TimeSeriesPanel(np.hstack([x, x]), p=2, q=2)
        stat, _ = pipeline(panel, 0.5)
        assert stat.t_n == 0.0

    def test_homogeneity(self, rng):
        panel = demean(TimeSeriesPanel(rng.normal(size=(60, 2))))
        c = 1.9
        t1 = pipeline(panel, 0.5)[0].t_n
        t2 = pipeline(panel.scaled(c), 0.5)[0].t_n
        assert t2 == pytest.approx(c**4 * t1, rel=1e-10)

    def test_brute_force_double_sum(self, rng):
        n, h = 32, 0.6
        x = rng.normal(size=(n, 2))
        x -= x.mean(axis=0)
        g = FrequencyGrid(n)
        t = np.arange(1, n + 1)
        J = np.array([np.sum(x * np.exp(-1j * t * w)[:, None], axis=0) for w in g.values]) / np.sqrt(2 * np.pi * n)
        I = np.abs(J) ** 2  # diagonal periodogram ordinates, p = 1
        pooled = I.mean(axis=1)
        total = 0.0
        for j in range(n):
            for r in range(2):
                s = 0.0
                for k in range(n):
                    s += K(wrap_angle(g.values[j] - g.values[k]) / h) / h / n * (I[k, r] - pooled[k])
                total += s**2
        oracle = n * np.sqrt(h) * 2 * np.pi / n * total
        got = pipeline(TimeSeriesPanel(x), h)[0].t_n
        assert got == pytest.approx(oracle, rel=1e-10)

    def test_relabel_invariance(self, rng):
        panel = demean(TimeSeriesPanel(rng.normal(size=(40, 6)), p=2, q=3))
        t1 = pipeline(panel, 0.5)[0].t_n
        t2 = pipeline(panel.permute_groups([2, 0, 1]), 0.5)[0].t_n
        assert t2 == pytest.approx(t1, rel=1e-12, abs=1e-12)

    def test_nonnegative(self, rng):
        for _ in range(5):
            panel = TimeSeriesPanel(rng.normal(size=(30, 3)), 1, 3)
            assert pipeline(panel, 0.7)[0].t_n >= 0

    def test_statistic_value_validation(self):
        with pytest.raises(InputError):
            StatisticValue(-1.0, 10, 0.5, 10)


class TestMuHat:
    def test_zero_field(self):
        assert estimate_mu_hat(constant_field(16, np.zeros((2, 2))), K, 1, 2) == 0.0

    def test_white_noise_constant(self):
        f = 1 / (2 * np.pi)
        mu = estimate_mu_hat(constant_field(40, np.diag([f, f])), K, 1, 2)
        assert mu == pytest.approx(K.A_K / (2 * np.pi), rel=1e-12)

    def test_coherence_form(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(8, 64))
            f = rng.uniform(0.1, 2.0, size=n)
            c = f * rng.uniform(0, 1, size=n) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
            coh = np.abs(c) ** 2 / f**2
            oracle = K.A_K * 2 * np.pi / n * np.sum(f**2 * (1 - coh))
            got = estimate_mu_hat(scalar_field(n, f, c), K, 1, 2)
            assert got == pytest.approx(oracle, rel=1e-10)


class TestTauHat:
    def test_zero_field(self):
        assert estimate_tau_hat_sq(constant_field(16, np.zeros((2, 2))), K, 1, 2) == 0.0

    def test_uncorrelated_example(self, rng):
        n = 24
        f = rng.uniform(0.2, 1.0, size=n)
        got = estimate_tau_hat_sq(scalar_field(n, f, np.zeros(n)), K, 1, 2)
        assert got == pytest.approx(K.B_K * 2 * np.pi / n * np.sum(f**4), rel=1e-12)

    def test_coherence_form(self, rng):
        n = 24
        f = rng.uniform(0.2, 1.0, size=n)
        c = 0.6 * f * np.exp(1j * rng.uniform(0, 6, size=n))
        got = estimate_tau_hat_sq(scalar_field(n, f, c), K, 1, 2)
        oracle = K.B_K * 2 * np.pi / n * np.sum(f**4 * (1 - np.abs(c) ** 2 / f**2) ** 2)
        assert got == pytest.approx(oracle, rel=1e-12)

    @pytest.mark.parametrize("plugin", ["pooled", "raw"])
    def test_homogeneity(self, rng, plugin):
        f = random_hermitian_field(rng, 20, 4)
        c = 1.3
        scaled = SpectralMatrixField(f.grid, c**2 * f.matrices)
        a = estimate_tau_hat_sq(f, K, 2, 2, plugin)
        b = estimate_tau_hat_sq(scaled, K, 2, 2, plugin)
        assert b == pytest.approx(c**8 * a, rel=1e-10)

    def test_pooled_and_raw_agree_under_equal_blocks(self, rng):
        n = 16
        f = rng.uniform(0.2, 1.0, size=n)
        field = scalar_field(n, f, 0.3 * f)
        assert estimate_tau_hat_sq(field, K, 1, 2, "pooled") == pytest.approx(
            estimate_tau_hat_sq(field, K, 1, 2, "raw"), rel=1e-12)

    def test_bad_plugin(self, rng):
        with pytest.raises(InputError):
            estimate_tau_hat_sq(random_hermitian_field(rng, 8, 2), K, 1, 2, "other")

    def test_clamp_helper(self):
        with pytest.warns(NegativeVarianceWarning):
            assert _clamp(-1e-3, "tau^2") == 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert _clamp(0.25, "tau^2") == 0.25

    @given(st.sampled_from(["pooled", "raw"]), st.integers(2, 3), st.integers(0, 2**31))
    def test_nonnegative_on_indefinite_fields(self, plugin, q, seed):
        f = random_hermitian_field(np.random.default_rng(seed), 5, q, psd=False)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert estimate_tau_hat_sq(f, K, 1, q, plugin) >= 0.0


class TestAsymptoticTest:
    def _report(self, z, alpha=0.05):
        stat = StatisticValue(1.0 + z, 100, 0.25, 100)
        cent = CenteringEstimates(mu_hat=0.5, tau_hat_sq=1.0)  # h^{-1/2} mu = 1
        return asymptotic_test(stat, cent, alpha)

    def test_zero_not_rejected(self):
        r = self._report(0.0)
        assert not r.reject
        assert r.critical_value_or_pvalue == pytest.approx(1.6448536, abs=1e-7)

    def test_three_rejected(self):
        assert self._report(3.0).reject

    def test_degenerate_scale(self):
        stat = StatisticValue(1.0, 100, 0.25, 100)
        with pytest.raises(DegenerateScaleError):
            asymptotic_test(stat, CenteringEstimates(mu_hat=0.1, tau_hat_sq=0.0), 0.05)

    def test_alpha_range(self):
        with pytest.raises(InputError):
            self._report(0.0, alpha=1.0)

    def test_scale_invariance(self, rng):
        x = rng.normal(size=(120, 2)) @ np.array([[1.0, 0.4], [0.0, 1.2]])
        zs, decisions = [], []
        for c in (1.0, 3.7):
            panel = demean(TimeSeriesPanel(c * x))
            h = cross_validate_bandwidth(panel, K).h
            stat, cent = pipeline(panel, h)
            zs.append(standardize(stat.t_n, cent.mu_hat, cent.tau_hat_sq, h))
            decisions.append(asymptotic_test(stat, cent, 0.05).reject)
        assert zs[1] == pytest.approx(zs[0], rel=1e-8, abs=1e-8)
        assert decisions[0] == decisions[1]

    @pytest.mark.parametrize("p", [1e-6, 0.001, 0.025, 0.5, 0.9, 0.95, 0.99, 1 - 1e-9])
    def test_normal_quantile(self, p):
        assert normal_quantile(p) == pytest.approx(stats.norm.ppf(p), abs=1e-8)

    def test_normal_quantile_range(self):
        with pytest.raises(InputError):
            normal_quantile(0.0)


class TestReportText:
    def test_round_trip(self):
        r = TestReport(StatisticValue(2.5, 64, 0.3, 64), CenteringEstimates(1.0, 2.0, 1.1, 2.2),
                       TestKind.STUDENTIZED, 0.05, 0.02, True, 1.7,
                       {"p": 1, "q": 2, "seed": 42, "B": 299, "bandwidth": "cv(c=1,h_cv=0.3)"})
        text = r.to_text()
        for key in ("statistic", "mu_hat", "tau_hat_sq", "decision", "alpha", "h", "n", "p", "q", "seed", "B"):
            assert f"\n{key}=" in "\n" + text
        assert TestReport.from_text(text) == r

    def test_missing_key(self):
        with pytest.raises(InputError, match="missing"):
            TestReport.from_text("kind=centered\nn=10\n")


def three_sum_oracle(F, q, p):
    """Direct loops over the three sums of the exactness expression at one frequency."""
    def blk(a, b):
        return F[a * p:(a + 1) * p, b * p:(b + 1) * p]

    def t(a, c, b, d):
        return abs(np.trace(blk(a, c) @ np.conj(blk(b, d)).T)) ** 2

    r = range(q)
    s1 = sum(t(a, c, a, c) for a in r for c in r if a != c)
    s2 = sum(t(a, c, a, d) for a, c, d in itertools.product(r, r, r) if len({a, c, d}) == 3)
    s3 = sum(t(a, c, b, d) for a, b, c, d in itertools.product(r, r, r, r)
             if a != c and b != d and a != b and c != d)
    return ((q - 1) ** 3 - 1) * s1 - 2 * ((q - 1) ** 2 + 1) * s2 + (q - 2) * s3


class TestExactness:
    @given(st.integers(1, 3), st.integers(0, 2**31))
    def test_q2_identically_zero(self, p, seed):
        f = random_hermitian_field(np.random.default_rng(seed), 6, 2 * p)
        values, agg = exactness_condition(f, p, 2)
        scale = np.max(np.abs(f.matrices)) ** 4
        assert np.all(np.abs(values) <= 1e-12 * scale)
        assert agg <= 1e-10 * max(scale, 1.0)

    def test_q3_equal_moduli(self, rng):
        n = 10
        m = np.zeros((n, 3, 3), dtype=complex)
        m[:, range(3), range(3)] = 2.0
        for a, b in [(0, 1), (0, 2), (1, 2)]:
            z = 0.7 * np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
            m[:, a, b], m[:, b, a] = z, np.conj(z)
        values, agg = exactness_condition(SpectralMatrixField(FrequencyGrid(n), m), 1, 3)
        assert agg == pytest.approx(0.0, abs=1e-10)

    def test_q3_single_coherent_pair(self):
        m = np.zeros((4, 3, 3), dtype=complex)
        m[:, 0, 1] = m[:, 1, 0] = 1.0
        values, agg = exactness_condition(SpectralMatrixField(FrequencyGrid(4), m), 1, 3)
        assert_allclose(values, 16.0)
        assert values[0] == pytest.approx(three_sum_oracle(m[0], 3, 1))
        assert agg > 0

    @pytest.mark.parametrize("p, q", [(1, 3), (2, 3), (1, 4), (2, 2)])
    def test_matches_loop_oracle(self, rng, p, q):
        f = random_hermitian_field(rng, 5, p * q)
        values, _ = exactness_condition(f, p, q)
        oracle = [three_sum_oracle(F, q, p) for F in f.matrices]
        assert_allclose(values, oracle, rtol=1e-10, atol=1e-10)


class TestDetectionShift:
    def test_gamma_p1_q2(self):
        g = gamma_matrix(1, 2)
        # vec order: (0,0), (1,0), (0,1), (1,1)
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[3, 3] = 0.5
        expected[0, 3] = expected[3, 0] = -0.5
        assert_allclose(g, expected)

    def test_zero(self):
        assert detection_shift(np.zeros((8, 2, 2)), 1, 2) == 0.0

    def test_opposite_diagonal(self):
        a, n = 0.7, 16
        g = np.broadcast_to(np.diag([a, -a]).astype(complex), (n, 2, 2))
        assert detection_shift(g, 1, 2) == pytest.approx(2 * np.pi * 2 * a**2, rel=1e-12)

    def test_off_diagonal_blocks_only(self, rng):
        n = 6
        g = np.zeros((n, 4, 4), dtype=complex)
        z = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
        g[:, :2, 2:] = z
        g[:, 2:, :2] = np.conj(np.swapaxes(z, 1, 2))
        assert detection_shift(g, 2, 2) == 0.0

    @pytest.mark.parametrize("p, q", [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)])
    def test_psd_on_block_diagonal_subspace(self, p, q):
        gamma = gamma_matrix(p, q)
        d = p * q
        i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        xi = ((i // p) == (j // p)).ravel(order="F")
        sub = gamma[np.ix_(xi, xi)]
        assert_allclose(sub, sub.T)
        assert np.linalg.eigvalsh(sub).min() >= -1e-10

    def test_equal_perturbations_undetectable(self, rng):
        # g with identical diagonal blocks keeps the null: no shift
        n, p = 6, 2
        z = rng.normal(size=(p, p)) + 1j * rng.normal(size=(p, p))
        b = z + np.conj(z).T
        g = np.zeros((n, 4, 4), dtype=complex)
        g[:, :2, :2] = g[:, 2:, 2:] = b
        assert detection_shift(g, p, 2) == pytest.approx(0.0, abs=1e-12)

    def test_non_hermitian(self):
        g = np.zeros((4, 2, 2), dtype=complex)
        g[:, 0, 1] = 1.0
        with pytest.raises(InputError, match="Hermitian"):
            detection_shift(g, 1, 2)

    def test_nonnegative(self, rng):
        for _ in range(5):
            f = random_hermitian_field(rng, 7, 4, psd=False)
            m = np.array(f.matrices)
            m[:, :2, 2:] = 0
            m[:, 2:, :2] = 0
            assert detection_shift(m, 2, 2) >= -1e-12
