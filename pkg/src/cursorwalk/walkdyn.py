"""Closed-form cursor dynamics on a computational path.

All amplitudes here are for a path of ``s`` logical states coupled with rate
``lam`` and started on the first state; they are evaluated by the exact
spectral sum (no time stepping).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.fft import dst
from scipy.optimize import minimize_scalar

from . import kernels
from .pathspec import path_length, steps_exact
from .spinops import check_mu, grover_angle

LAMBDA = 3 * np.pi / 8

chi = grover_angle


def x_odd(x):
    """Largest odd integer not larger than ``x`` (``x >= 1``)."""
    x = np.asarray(x)
    return x - ((x + 1) % 2)


def bessel_j(n: int, x):
    """Bessel function of the first kind ``J_n(x)`` for integer ``n >= 0`` and ``x >= 0``."""
    if int(n) != n or n < 0:
        raise ValueError(f"order must be a non-negative integer, got {n}")
    out = kernels.jn(int(n), x)
    return float(out) if np.ndim(out) == 0 else out


def _check_chain(s: int, lam: float) -> None:
    if s < 1:
        raise ValueError("path length must be >= 1")
    if lam <= 0:
        raise ValueError("coupling rate must be positive")


def chain_amplitude(t: float, j: int, s: int, lam: float = LAMBDA) -> complex:
    """Amplitude on path state ``j`` (1-based) of a length-``s`` path at time ``t``."""
    _check_chain(s, lam)
    if not 1 <= j <= s:
        raise ValueError(f"site j={j} outside [1, {s}]")
    theta = np.arange(1, s + 1) * np.pi / (s + 1)
    terms = np.exp(1j * lam * t * np.cos(theta)) * np.sin(theta) * np.sin(j * theta)
    return complex(2.0 / (s + 1) * terms.sum())


def chain_amplitudes(t, s: int, lam: float = LAMBDA) -> np.ndarray:
    """All path amplitudes at once via a type-I sine transform.

    Returns shape ``(s,)`` for scalar ``t`` or ``(len(t), s)`` for an array.
    """
    _check_chain(s, lam)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    theta = np.arange(1, s + 1) * np.pi / (s + 1)
    spectrum = np.exp(1j * lam * np.outer(ts, np.cos(theta))) * np.sin(theta)
    out = dst(spectrum, type=1, axis=-1) / (s + 1)
    return out[0] if np.ndim(t) == 0 else out


def chain_probabilities(t, s: int, lam: float = LAMBDA) -> np.ndarray:
    return np.abs(chain_amplitudes(t, s, lam)) ** 2


def bessel_packet(t, x: int, lam: float = LAMBDA):
    """Semi-infinite-chain occupation ``4 x**2 J_x(lam t)**2 / (lam t)**2`` of path state ``x``."""
    if x < 1 or int(x) != x:
        raise ValueError("x must be a positive integer")
    z = lam * np.asarray(t, dtype=float)
    if np.any(z <= 0):
        raise ValueError("need lam * t > 0")
    j = kernels.jn(int(x), z)
    out = 4.0 * x * x * j * j / (z * z)
    return float(out) if np.ndim(out) == 0 else out


def continuum_density(t: float, x, lam: float = LAMBDA):
    """Arcsine-type density of the cursor position; zero outside ``(0, lam t)``."""
    a = lam * t
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < a)
    xs = np.where(inside, x, 0.5 * a if a > 0 else 1.0)
    rho = 4 * xs**2 / (np.pi * a**2 * np.sqrt(a**2 - xs**2)) if a > 0 else np.zeros_like(xs)
    out = np.where(inside, rho, 0.0)
    return float(out) if out.ndim == 0 else out


def _closed(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    table = kernels.jn_table(2, np.abs(z))
    return 0.5 - 0.5 * (table[0] - table[2])


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def pr_exact_chain(t, mu: int, s: int, lam: float = LAMBDA):
    """Probability of reading the target word on a linear-chain machine of ``s`` sites."""
    mu = check_mu(mu)
    probs = chain_probabilities(t, s, lam)
    w = np.sin(chi(mu) * x_odd(np.arange(1, s + 1))) ** 2
    return _scalar(probs @ w)


def pr_closed_chain(t, mu: int, lam: float = LAMBDA):
    """Reflection-free asymptotic form of :func:`pr_exact_chain`."""
    return _scalar(_closed(2 * chi(check_mu(mu)) * lam * np.asarray(t, dtype=float)))


@lru_cache(maxsize=None)
def _subroutine_steps(K: int) -> np.ndarray:
    p = path_length(K)
    return np.array([steps_exact(K, j) for j in range(1, p + 1)])


def pr_exact_subroutine(t, mu: int, K: int, lam: float = LAMBDA):
    """Probability of reading the target word on the subroutine machine."""
    mu = check_mu(mu)
    n = _subroutine_steps(K)
    w = np.sin((2 * n + 1) * chi(mu)) ** 2
    probs = chain_probabilities(t, path_length(K), lam)
    return _scalar(probs @ w)


def pr_closed_subroutine(t, mu: int, lam: float = LAMBDA):
    return _scalar(_closed(chi(check_mu(mu)) * lam * np.asarray(t, dtype=float) / 2))


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ArithmeticError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=None)
def peak_root() -> float:
    """First positive zero of ``3 J_1 - J_3`` (the maximiser of the closed forms)."""

    def f(z):
        tab = kernels.jn_table(3, z)
        return 3 * tab[1] - tab[3]

    return _bisect(f, 3.0, 4.0)


def peak_value() -> float:
    return float(_closed(peak_root()))


Flavor = Literal["chain", "subroutine"]


def first_peak(mu: int, lam: float = LAMBDA, flavor: Flavor = "chain") -> tuple[float, float]:
    """Time and height of the first maximum predicted by the closed forms."""
    z0 = peak_root()
    c = chi(check_mu(mu))
    if flavor == "chain":
        t0 = z0 / (2 * lam * c)
    elif flavor == "subroutine":
        t0 = 2 * z0 / (lam * c)
    else:
        raise ValueError(f"flavor must be 'chain' or 'subroutine', got {flavor!r}")
    return t0, peak_value()


def locate_max(f, lo: float, hi: float, step: float) -> tuple[float, float]:
    """Grid scan of a scalar function on ``[lo, hi]`` followed by bounded refinement."""
    grid = np.arange(lo, hi + step / 2, step)
    vals = np.asarray(f(grid))
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda x: -float(f(x)), bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(vals[i])


def completion_peak(T: int, lam: float = LAMBDA) -> float:
    """Largest occupation of the last state of a length-``T`` path during the first arrival."""
    if T < 2:
        raise ValueError("path length must be >= 2")
    hi = 2.0 * T / lam

    def last(t):
        return np.abs(chain_amplitudes(t, T, lam)[..., -1]) ** 2

    return locate_max(last, 0.0, hi, min(0.05, hi / 200))[1]


@dataclass
class PrSeries:
    times: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if np.any(self.values < -1e-9) or np.any(self.values > 1 + 1e-9):
            raise ValueError(f"{self.kind} probabilities leave [0, 1]")


def time_grid(t_min: float, t_max: float, step: float = 0.25) -> np.ndarray:
    if step <= 0:
        raise ValueError("time step must be positive")
    n = int(np.floor((t_max - t_min) / step + 1e-9)) + 1
    return t_min + step * np.arange(n)


def pr_series(kind: str, times, mu: int, s: int | None = None, K: int | None = None, lam: float = LAMBDA) -> PrSeries:
    times = np.asarray(times, dtype=float)
    if kind == "exact_chain":
        vals = pr_exact_chain(times, mu, s, lam)
    elif kind == "closed_chain":
        vals = pr_closed_chain(times, mu, lam)
    elif kind == "exact_subroutine":
        vals = pr_exact_subroutine(times, mu, K, lam)
    elif kind == "closed_subroutine":
        vals = pr_closed_subroutine(times, mu, lam)
    else:
        raise ValueError(f"unknown series kind {kind!r}")
    return PrSeries(times, np.atleast_1d(vals), kind)
