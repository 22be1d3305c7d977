"""Self-contained special functions: associated Laguerre polynomials,
integer-order Bessel functions of the first kind, and their positive zeros.

Only the machinery needed by the coupling matrix elements lives here, so the
implementations favor the regimes that actually occur: small fixed Laguerre
argument, Bessel arguments up to a few hundred, low Bessel orders for the
zero tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = ["laguerre", "bessel_j", "bessel_zeros", "BesselZeroTable"]

# Switch point between the power series and the backward recurrence.  The
# alternating series amplifies roundoff by its largest term, about e^x * 1e-16,
# so the cutoff keeps that noise near 1e-13; the backward recurrence covers
# everything above and is smooth in x.
_SERIES_CUTOFF = 9.0


def laguerre(m: int, n: int, x: float) -> float:
    """Associated Laguerre polynomial L_m^n(x) by the degree recurrence.

    The recurrence (k+1) L_{k+1}^n = (2k+1+n-x) L_k^n - (k+n) L_{k-1}^n is
    numerically benign for the small arguments used here.  Degrees 0 and 1
    are returned in closed form.
    """
    if m < 0 or n < 0:
        raise ValueError("degree and superscript must be non-negative")
    if not math.isfinite(x):
        raise ValueError("argument must be finite")
    if m == 0:
        return 1.0
    if m == 1:
        return float(n + 1 - x)
    prev = 1.0
    cur = float(n + 1 - x)
    for k in range(1, m):
        prev, cur = cur, ((2 * k + 1 + n - x) * cur - (k + n) * prev) / (k + 1)
    if not math.isfinite(cur):
        raise OverflowError(
            f"Laguerre recurrence overflowed at degree {m}, superscript {n}"
        )
    return cur


def _bessel_series(n: int, x: float) -> float:
    """Ascending power series for J_n(x); used below the cutoff."""
    half = 0.5 * x
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
    total = term
    msq = -half * half
    for k in range(1, 400):
        term *= msq / (k * (n + k))
        total += term
        if k > 4 and abs(term) < 1e-18 * max(1.0, abs(total)):
            return total
    raise RuntimeError(f"Bessel series failed to converge for J_{n}({x})")


def _bessel_miller(n: int, x: float) -> float:
    """J_n(x) by backward recurrence, normalized with the even-order sum rule
    J_0(x) + 2 (J_2(x) + J_4(x) + ...) = 1.

    Downward recursion is stable for every order; the start index sits far
    enough above max(n, x) that the arbitrary seed has washed out by the time
    the recursion reaches the requested order.
    """
    start = int(max(n, x) + 20 + 8 * max(n, x) ** 0.34)
    if start % 2 == 1:
        start += 1
    jup = 0.0          # J_{k+1}
    jk = 1e-30         # J_k at k = start
    norm = 2.0 * jk    # start is even
    result = 0.0
    for k in range(start, 0, -1):
        jdown = (2.0 * k / x) * jk - jup         # J_{k-1}
        jup, jk = jk, jdown
        if k - 1 == n:
            result = jk
        if (k - 1) % 2 == 0:
            norm += jk if k == 1 else 2.0 * jk
        if abs(jk) > 1e250:  # rescale long recursions away from overflow
            jup *= 1e-250
            jk *= 1e-250
            norm *= 1e-250
            result *= 1e-250
    return result / norm


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for integer n >= 0, x >= 0.

    Absolute accuracy is better than 1e-10 on x in [0, 200], which covers the
    oscillation-amplitude arguments sqrt(2 m h) for every basis size used.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if x < 0:
        raise ValueError("argument must be non-negative")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x < _SERIES_CUTOFF:
        return _bessel_series(n, x)
    return _bessel_miller(n, x)


@dataclass(frozen=True)
class BesselZeroTable:
    """First positive zeros of J_order, ascending."""

    order: int
    zeros: np.ndarray = field(repr=False)

    def __post_init__(self):
        z = np.asarray(self.zeros, dtype=float)
        object.__setattr__(self, "zeros", z)
        if z.ndim != 1 or len(z) == 0:
            raise ValueError("zero table must hold at least one zero")
        if not np.all(np.diff(z) > 0):
            raise ValueError("zeros must be strictly increasing")

    def __len__(self) -> int:
        return len(self.zeros)


# Consecutive zeros of J_n are spaced by more than 3.1 for every order, and
# the first zero lies above 2.4; a scan step below that spacing brackets each
# zero exactly once.
_SCAN_STEP = 1.5


def bessel_zeros(n: int, count: int) -> BesselZeroTable:
    """First `count` positive zeros of J_n, bracketed by a sign scan and
    refined to 1e-10 absolute."""
    if count < 1:
        raise ValueError("count must be at least 1")

    def f(t):
        return bessel_j(n, t)

    zeros = []
    lo = 0.5  # below the first zero of every order; J_n(0.5) > 0
    flo = f(lo)
    limit = 0.5 + _SCAN_STEP * (40 + count * 8 + n * 4)
    while len(zeros) < count:
        hi = lo + _SCAN_STEP
        fhi = f(hi)
        if flo == 0.0:
            zeros.append(lo)
        elif flo * fhi < 0.0:
            zeros.append(brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16))
        lo, flo = hi, fhi
        if lo > limit:
            raise RuntimeError(f"bracket scan failed to find {count} zeros of J_{n}")
    return BesselZeroTable(order=n, zeros=np.array(zeros[:count]))
