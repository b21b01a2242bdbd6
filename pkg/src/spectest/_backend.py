"""Select the compiled core when it imports, the NumPy fallback otherwise.

Set ``SPECTEST_BACKEND=python`` before import to force the fallback.
"""
import os

import numpy as np

from . import _core_py

if os.environ.get("SPECTEST_BACKEND", "").lower() == "python":
    _impl = _core_py
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _core_py

NAME = "cython" if _impl is not _core_py else "python"


def circulant_smooth(w, x):
    w = np.ascontiguousarray(w, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return _impl.circulant_smooth(w, x)


def tn_star_batch(w, diag, pooled, perms):
    return _impl.tn_star_batch(
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.complex128),
        np.ascontiguousarray(pooled, dtype=np.complex128),
        np.ascontiguousarray(perms, dtype=np.intp),
    )
