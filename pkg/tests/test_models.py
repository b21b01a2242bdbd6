import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spectest.errors import InputError
from spectest.models import (
    GARCH11,
    PRESET_NAMES,
    RCA1,
    TAR1,
    VAR1,
    VMA1,
    Innovation,
    InnovationSampler,
    ModelSpec,
    preset,
    simulate,
)
from spectest.series import periodogram


def lag1(x):
    return np.mean(x[1:] * x[:-1], axis=0)


class TestPresets:
    def test_names(self):
        assert len(PRESET_NAMES) == 27
        assert {"AR1", "AR6", "MA1", "GARCH4", "TAR6", "RCA3"} <= set(PRESET_NAMES)

    def test_ar3(self):
        spec = preset("AR3")
        assert isinstance(spec.process, VAR1)
        assert_array_equal(spec.process.A, np.diag([0.9, 0.9]))
        assert_array_equal(spec.process.Sigma, np.eye(2))

    def test_ma2(self):
        spec = preset("ma2")
        assert spec.name == "MA2"
        assert_array_equal(spec.process.B, np.full((2, 2), 0.5))
        assert_array_equal(spec.process.Sigma, [[1.0, 0.5], [0.5, 1.0]])

    def test_garch4(self):
        g = preset("GARCH4").process
        assert_array_equal(g.omega, [0.01, 0.01])
        assert_array_equal(g.a, [0.1, 0.1])
        assert_array_equal(g.b, [0.2, 0.3])

    def test_tar_and_rca(self):
        t = preset("TAR6").process
        assert_array_equal(t.a1, [-0.2, -0.5])
        assert_array_equal(t.a2, [0.1, 0.4])
        assert_array_equal(preset("RCA2").process.sigma, [0.2, 0.2])

    @pytest.mark.parametrize("name", ["AR7", "XY1", "GARCH", ""])
    def test_unknown(self, name):
        with pytest.raises(InputError, match="unknown preset"):
            preset(name)


class TestGuards:
    def test_var_nonstationary(self):
        with pytest.raises(InputError, match="spectral radius"):
            VAR1(np.diag([1.0, 0.5]))

    def test_sigma_not_pd(self):
        with pytest.raises(InputError, match="positive definite"):
            VMA1(np.eye(2), [[1.0, 2.0], [2.0, 1.0]])

    def test_garch_persistence(self):
        with pytest.raises(InputError, match="a \\+ b"):
            GARCH11(0.1, 0.5, 0.5)

    def test_tar_range(self):
        with pytest.raises(InputError):
            TAR1((-1.0, 0.0), (0.0, 0.0))

    def test_rca_range(self):
        with pytest.raises(InputError):
            RCA1(1.2)

    def test_bad_burn_in(self):
        with pytest.raises(InputError):
            ModelSpec("x", VAR1(np.zeros((2, 2))), burn_in=-1)

    def test_innovation_names(self):
        assert Innovation.parse("Laplace") is Innovation.DOUBLE_EXPONENTIAL
        assert Innovation.parse("normal") is Innovation.GAUSSIAN
        with pytest.raises(InputError):
            Innovation.parse("cauchy")


class TestInnovations:
    @pytest.mark.parametrize("law", list(Innovation))
    def test_unit_variance(self, law):
        z = InnovationSampler(law)(np.random.default_rng(3), 100_000)
        assert z.mean() == pytest.approx(0.0, abs=0.02)
        assert z.var() == pytest.approx(1.0, abs=0.02)

    def test_raw_scale(self):
        z = InnovationSampler("logistic", standardized=False)(np.random.default_rng(3), 100_000)
        assert z.var() == pytest.approx(np.pi**2 / 3, rel=0.03)


class TestSimulation:
    def test_shape_and_determinism(self):
        spec = preset("GARCH4")
        a, b = simulate(spec, 100, 5), simulate(spec, 100, 5)
        assert a.data.shape == (100, 2) and (a.p, a.q) == (1, 2)
        assert_array_equal(a.data, b.data)
        assert not np.array_equal(a.data, simulate(spec, 100, 6).data)

    def test_seed_sequence_accepted(self):
        ss = np.random.SeedSequence(9, spawn_key=(1, 2))
        assert_array_equal(simulate(preset("MA1"), 50, ss).data, simulate(preset("MA1"), 50, ss).data)

    def test_white_noise_lag1(self):
        n = 10_000
        x = simulate(ModelSpec("wn", VAR1(np.zeros((2, 2)))), n, 1).data
        assert np.all(np.abs(lag1(x)) < 3 / np.sqrt(n))

    def test_ar3_autocorrelation(self):
        x = simulate(preset("AR3"), 20_000, 2).data
        rho = lag1(x) / x.var(axis=0)
        assert_allclose(rho, 0.9, atol=0.02)

    def test_ma_lag1_covariance(self):
        # Gamma(1) = B Sigma for a VMA(1)
        spec = preset("MA4")
        x = simulate(spec, 100_000, 4).data
        g1 = x[1:].T @ x[:-1] / len(x)
        assert_allclose(g1, spec.process.B @ spec.process.Sigma, atol=0.03)

    def test_garch_variance(self):
        x = simulate(preset("GARCH4"), 100_000, 8).data
        assert_allclose(x.var(axis=0), [0.01 / 0.7, 0.01 / 0.6], rtol=0.1)
        assert np.all(np.abs(lag1(x)) < 4 * x.var(axis=0) / np.sqrt(len(x)))

    def test_tar_output_centered(self):
        x = simulate(preset("TAR6"), 500, 0).data
        assert_allclose(x.mean(axis=0), 0.0, atol=1e-12)

    def test_rca_variance(self):
        # stationary variance 1 / (1 - sigma^2) for unit innovations
        x = simulate(preset("RCA3"), 100_000, 2).data
        assert_allclose(x.var(axis=0), 1 / (1 - 0.09), rtol=0.03)

    @pytest.mark.parametrize("name", ["MA1", "AR1", "GARCH1"])
    def test_null_models_balanced(self, name):
        # under the null the mean periodogram difference integrates to zero
        spec = preset(name, burn_in=100)
        n = 64
        diffs = []
        for rep in range(200):
            f = periodogram(simulate(spec, n, rep)).matrices
            diffs.append(2 * np.pi / n * np.sum(f[:, 0, 0].real - f[:, 1, 1].real))
        diffs = np.array(diffs)
        assert abs(diffs.mean()) < 3 * diffs.std(ddof=1) / np.sqrt(len(diffs))

    def test_small_n(self):
        with pytest.raises(InputError):
            simulate(preset("AR1"), 3, 0)
