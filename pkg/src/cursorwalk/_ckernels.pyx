# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Bessel kernels; same algorithm and limits as ``_pykernels``."""

import numpy as np

from libc.math cimport sqrt, ceil, exp, log, lgamma, fabs

from cursorwalk._pykernels import SERIES_CUTOFF, MAX_ARGUMENT, MAX_ORDER, miller_start

cdef double _BIG = 1.0e250
cdef double _SMALL = 1.0e-250


cdef void _series_one(int nmax, double x, double[:] out) noexcept nogil:
    cdef double half = 0.5 * x
    cdef double q = -half * half
    cdef double logh = log(half)
    cdef double lead, term, total
    cdef int n, k
    for n in range(nmax + 1):
        lead = exp(n * logh - lgamma(n + 1.0))
        term = 1.0
        total = 1.0
        for k in range(1, 40):
            term = term * q / (k * (n + k))
            total = total + term
            if fabs(term) <= 1e-17 * fabs(total):
                break
        out[n] = lead * total


cdef void _miller_one(int nmax, int start, double x, double[:] out) noexcept nogil:
    cdef double two_over_x = 2.0 / x
    cdef double jp = 0.0
    cdef double j = _SMALL
    cdef double jm
    cdef double norm = 0.0
    cdef int k, i
    for i in range(nmax + 1):
        out[i] = 0.0
    for k in range(start, 0, -1):
        jm = k * two_over_x * j - jp
        jp = j
        j = jm
        if k - 1 <= nmax:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k > 1:
            norm += 2.0 * j
        if fabs(j) > _BIG:
            j *= _SMALL
            jp *= _SMALL
            norm *= _SMALL
            for i in range(k - 1, nmax + 1):
                out[i] *= _SMALL
    norm += j
    for i in range(nmax + 1):
        out[i] /= norm


def jn_table(int nmax, x):
    """Return ``J_0(x)..J_nmax(x)``; shape ``(nmax+1,)`` or ``(nmax+1, len(x))``."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    flat = np.ascontiguousarray(np.atleast_1d(xa).ravel())
    if nmax < 0:
        raise ValueError(f"Bessel order must be >= 0, got {nmax}")
    if nmax > MAX_ORDER:
        raise OverflowError(f"Bessel order {nmax} exceeds the supported maximum {MAX_ORDER}")
    if flat.size and np.any(flat < 0):
        raise ValueError("Bessel argument must be >= 0")
    if flat.size and (not np.all(np.isfinite(flat)) or np.max(flat) > MAX_ARGUMENT):
        raise OverflowError(f"Bessel argument exceeds the supported maximum {MAX_ARGUMENT:g}")

    cdef Py_ssize_t m = flat.size
    out_t = np.zeros((m, nmax + 1))
    cdef double[:, :] out = out_t
    cdef double[:] xs = flat
    cdef double cutoff = SERIES_CUTOFF
    cdef Py_ssize_t i
    cdef double xi
    cdef int start
    for i in range(m):
        xi = xs[i]
        if xi == 0.0:
            out[i, 0] = 1.0
        elif xi < cutoff:
            _series_one(nmax, xi, out[i])
        else:
            start = miller_start(nmax, xi)
            _miller_one(nmax, start, xi, out[i])
    res = out_t.T
    if scalar:
        return np.ascontiguousarray(res[:, 0])
    return np.ascontiguousarray(res).reshape((nmax + 1,) + xa.shape)


def jn(int n, x):
    """``J_n`` evaluated elementwise over ``x``."""
    return jn_table(n, x)[n]
