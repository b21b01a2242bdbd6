"""Kernel-smoothed L2 tests for equality of diagonal spectral density blocks.

The ``q`` groups of a ``d = p*q`` dimensional stationary series are
compared through their ``p x p`` diagonal spectral blocks.  The package
provides the statistic, an asymptotic normal test, three frequency-wise
permutation (randomization) tests, simulation models and an experiment
harness.
"""
from ._backend import NAME as BACKEND
from .errors import BandwidthWarning, DegenerateScaleError, InputError, NegativeVarianceWarning, SpectestError
from .kernels import (
    Bandwidth,
    Kernel,
    bartlett_priestley,
    cross_validate_bandwidth,
    get_kernel,
    smooth,
    tukey_hanning,
)
from .series import (
    FieldKind,
    FrequencyGrid,
    SpectralMatrixField,
    TimeSeriesPanel,
    block,
    demean,
    dft,
    fourier_frequencies,
    periodogram,
    pooled_diagonal,
    read_csv,
    write_csv,
)
from .statistic import (
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
)
from .randomization import (
    FrequencyPermutationFamily,
    RandomizationConfig,
    compute_tn_star,
    conditional_mean_tn_star,
    estimate_mu_hat_star,
    estimate_tau_hat_star_sq,
    monte_carlo_pvalue,
    run_randomization_test,
    sample_family,
)
from .models import ModelSpec, preset, simulate
from .harness import ExperimentConfig, SizePowerTable, export, read_table_csv, run_experiment

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
