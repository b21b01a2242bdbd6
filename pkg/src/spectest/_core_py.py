"""Pure NumPy versions of the compiled kernels in ``_core.pyx``.

Same signatures and results (up to floating-point summation order); the
circulant smoother is applied as a dense matrix product.
"""
import numpy as np


def _circulant(w: np.ndarray) -> np.ndarray:
    n = w.shape[0]
    idx = np.subtract.outer(np.arange(n), np.arange(n)) % n
    return w[idx]


def circulant_smooth(w, x):
    """``out[j] = sum_k w[(j - k) mod n] x[k]`` for an ``(n, m)`` array ``x``."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=complex)
    if w.shape[0] != x.shape[0]:
        raise ValueError("weight length does not match the number of rows")
    return _circulant(w) @ x


def tn_star_batch(w, diag, pooled, perms):
    """See ``spectest._core.tn_star_batch``."""
    w = np.asarray(w, dtype=float)
    diag = np.asarray(diag, dtype=complex)
    pooled = np.asarray(pooled, dtype=complex)
    perms = np.asarray(perms, dtype=np.intp)
    n, q, P = diag.shape
    if w.shape[0] != n or pooled.shape[0] != n or perms.shape[1:] != (n, q):
        raise ValueError("inconsistent shapes")
    k = np.arange(n)[None, :, None]
    dev = diag[k, perms] - pooled[None, :, None, :]  # (B, n, q, P)
    B = perms.shape[0]
    smoothed = _circulant(w) @ dev.reshape(B, n, q * P)
    return np.sum(smoothed.real**2 + smoothed.imag**2, axis=(1, 2))
