# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for circulant smoothing and batched randomization statistics.

The smoother is a circulant matrix whose first column ``w`` is zero outside
the kernel support, so only the band of nonzero offsets is visited.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def _band(const double[::1] w):
    nz = np.flatnonzero(np.asarray(w)).astype(np.intp)
    return nz, np.ascontiguousarray(np.asarray(w)[nz])


cdef void _convolve(const Py_ssize_t[::1] nz, const double[::1] wv,
                    const double* src, double* out, Py_ssize_t n) noexcept nogil:
    """``out[j] = sum_i wv[i] src[(j - nz[i]) mod n]`` as two contiguous axpy passes per weight."""
    cdef Py_ssize_t i, j, o
    cdef double wt
    for j in range(n):
        out[j] = 0.0
    for i in range(nz.shape[0]):
        o = nz[i]
        wt = wv[i]
        for j in range(o, n):
            out[j] += wt * src[j - o]
        for j in range(o):
            out[j] += wt * src[j - o + n]


def circulant_smooth(const double[::1] w, const double complex[:, ::1] x):
    """``out[j] = sum_k w[(j - k) mod n] x[k]`` for an ``(n, m)`` array ``x``."""
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    if w.shape[0] != n:
        raise ValueError("weight length does not match the number of rows")
    nz_arr, wv_arr = _band(w)
    cdef Py_ssize_t[::1] nz = nz_arr
    cdef double[::1] wv = wv_arr
    xa = np.asarray(x)
    cdef double[:, ::1] re = np.ascontiguousarray(xa.real.T)
    cdef double[:, ::1] im = np.ascontiguousarray(xa.imag.T)
    out_re_arr = np.empty((m, n))
    out_im_arr = np.empty((m, n))
    cdef double[:, ::1] out_re = out_re_arr
    cdef double[:, ::1] out_im = out_im_arr
    cdef Py_ssize_t c
    if n > 0:
        with nogil:
            for c in range(m):
                _convolve(nz, wv, &re[c, 0], &out_re[c, 0], n)
                _convolve(nz, wv, &im[c, 0], &out_im[c, 0], n)
    out = np.empty((n, m), dtype=np.complex128)
    out.real = out_re_arr.T
    out.imag = out_im_arr.T
    return out


def tn_star_batch(const double[::1] w,
                  const double complex[:, :, ::1] diag,
                  const double complex[:, ::1] pooled,
                  const Py_ssize_t[:, :, ::1] perms):
    """Sum of squared moduli of smoothed, permuted block deviations for each draw.

    ``diag`` is ``(n, q, P)`` (flattened diagonal blocks), ``pooled`` is
    ``(n, P)`` and ``perms[b, k, r]`` names the group placed in slot ``r``
    at grid position ``k`` for draw ``b``.  Returns a length ``B`` array of
    ``sum_j sum_r ||sum_k w[(j-k) mod n] (diag[k, perms[b,k,r]] - pooled[k])||^2``.
    """
    cdef Py_ssize_t n = diag.shape[0], q = diag.shape[1], P = diag.shape[2]
    cdef Py_ssize_t B = perms.shape[0]
    if w.shape[0] != n or pooled.shape[0] != n or perms.shape[1] != n or perms.shape[2] != q:
        raise ValueError("inconsistent shapes")
    nz_arr, wv_arr = _band(w)
    cdef Py_ssize_t[::1] nz = nz_arr
    cdef double[::1] wv = wv_arr
    # unpermuted deviations, channel-major with real and imaginary parts split
    dev = np.asarray(diag) - np.asarray(pooled)[:, None, :]
    cdef double[:, :, ::1] d_re = np.ascontiguousarray(dev.real.transpose(1, 2, 0))
    cdef double[:, :, ::1] d_im = np.ascontiguousarray(dev.imag.transpose(1, 2, 0))
    cdef double[::1] src_re = np.empty(n)
    cdef double[::1] src_im = np.empty(n)
    cdef double[::1] buf = np.empty(n)
    out_arr = np.zeros(B, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b, j, k, r, x, g
    cdef double acc
    if n == 0:
        return out_arr
    with nogil:
        for b in range(B):
            acc = 0.0
            for r in range(q):
                for x in range(P):
                    for k in range(n):
                        g = perms[b, k, r]
                        src_re[k] = d_re[g, x, k]
                        src_im[k] = d_im[g, x, k]
                    _convolve(nz, wv, &src_re[0], &buf[0], n)
                    for j in range(n):
                        acc += buf[j] * buf[j]
                    _convolve(nz, wv, &src_im[0], &buf[0], n)
                    for j in range(n):
                        acc += buf[j] * buf[j]
            out[b] = acc
    return out_arr
