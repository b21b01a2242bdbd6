import numpy as np
import pytest
from hypothesis import settings

from spectest.series import FieldKind, FrequencyGrid, SpectralMatrixField

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def random_hermitian_field(rng, n, d, psd=True):
    """Random Hermitian field obeying M(-w) = conj(M(w)) on the Fourier grid."""
    grid = FrequencyGrid(n)
    a = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    m = a @ np.conj(np.swapaxes(a, 1, 2)) if psd else a + np.conj(np.swapaxes(a, 1, 2))
    mirror = grid.mirror_positions()
    m = 0.5 * (m + np.conj(m[mirror]))
    return SpectralMatrixField(grid, m, FieldKind.SMOOTHED)


def constant_field(n, mat):
    mat = np.asarray(mat, dtype=complex)
    return SpectralMatrixField(FrequencyGrid(n), np.broadcast_to(mat, (n,) + mat.shape), FieldKind.SMOOTHED)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
