"""Pure numpy fallback for the compiled Bessel kernels.

Both backends implement the same algorithm:

* ``x < SERIES_CUTOFF``: ascending power series, one order at a time.
* otherwise: Miller's backward recurrence started well above
  ``max(n, x)``, normalised with ``J_0 + 2 * sum(J_2k) = 1``.

The fallback vectorises over the argument array and loops over orders in
Python; the Cython module loops over both in C.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_CUTOFF = 1.0
MAX_ARGUMENT = 1.0e5
MAX_ORDER = 100_000
_BIG = 1.0e250
_SMALL = 1.0e-250


def miller_start(nmax: int, x: float) -> int:
    """Even starting order for the backward recurrence."""
    m = max(int(nmax), int(math.ceil(x)))
    start = m + 20 + int(math.sqrt(60.0 * m))
    return start + (start & 1)


def _check(nmax: int, x: np.ndarray) -> None:
    if nmax < 0:
        raise ValueError(f"Bessel order must be >= 0, got {nmax}")
    if nmax > MAX_ORDER:
        raise OverflowError(f"Bessel order {nmax} exceeds the supported maximum {MAX_ORDER}")
    if x.size and np.any(x < 0):
        raise ValueError("Bessel argument must be >= 0")
    if x.size and (not np.all(np.isfinite(x)) or np.max(x) > MAX_ARGUMENT):
        raise OverflowError(f"Bessel argument exceeds the supported maximum {MAX_ARGUMENT:g}")


def _series(nmax: int, x: np.ndarray) -> np.ndarray:
    """Rows ``J_0..J_nmax`` for small positive ``x`` (shape ``(nmax+1, len(x))``)."""
    out = np.zeros((nmax + 1, x.size))
    half = 0.5 * x
    q = -half * half
    logh = np.log(half)
    for n in range(nmax + 1):
        lead = np.exp(n * logh - math.lgamma(n + 1.0))
        term = np.ones_like(x)
        total = np.ones_like(x)
        for k in range(1, 40):
            term = term * q / (k * (n + k))
            total = total + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        out[n] = lead * total
    return out


def _miller(nmax: int, x: np.ndarray) -> np.ndarray:
    """Rows ``J_0..J_nmax`` for ``x >= SERIES_CUTOFF`` via backward recurrence."""
    start = miller_start(nmax, float(np.max(x)))
    out = np.zeros((nmax + 1, x.size))
    two_over_x = 2.0 / x
    jp = np.zeros_like(x)
    j = np.full_like(x, _SMALL)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        jm = k * two_over_x * j - jp
        jp = j
        j = jm
        # j now holds the unnormalised J_{k-1}
        if k - 1 <= nmax:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > _BIG
        if np.any(big):
            j = np.where(big, j * _SMALL, j)
            jp = np.where(big, jp * _SMALL, jp)
            norm = np.where(big, norm * _SMALL, norm)
            out[:, big] *= _SMALL
    norm += j
    return out / norm


def jn_table(nmax: int, x) -> np.ndarray:
    """Return ``J_0(x)..J_nmax(x)``; shape ``(nmax+1,)`` or ``(nmax+1, len(x))``."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    flat = np.atleast_1d(xa).ravel()
    _check(nmax, flat)
    out = np.zeros((nmax + 1, flat.size))
    zero = flat == 0.0
    small = (~zero) & (flat < SERIES_CUTOFF)
    large = flat >= SERIES_CUTOFF
    out[0, zero] = 1.0
    if np.any(small):
        out[:, small] = _series(nmax, flat[small])
    if np.any(large):
        out[:, large] = _miller(nmax, flat[large])
    if scalar:
        return out[:, 0]
    return out.reshape((nmax + 1,) + xa.shape)


def jn(n: int, x) -> np.ndarray:
    """``J_n`` evaluated elementwise over ``x``."""
    return jn_table(n, x)[n]
