"""Dimensionless model parameters, matrix elements of exp(iX) in the
oscillator number basis, and the resonance-cell partition shared by the
quantum and classical analyses.

Units: energies are measured in M w^2 / k^2, time in 1/w, so the unperturbed
level spacing is the dimensionless Planck constant h and the drive period is
T = 2 pi / mu with mu = N + delta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .specfun import bessel_j, bessel_zeros, laguerre

__all__ = [
    "ModelParams",
    "CouplingTable",
    "CellPartition",
    "matrix_element_exact",
    "matrix_element_asymptotic",
    "build_coupling_table",
    "default_band_width",
    "cell_boundaries",
    "m_max_extent",
]


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless drive and oscillator constants.

    h: dimensionless Planck constant (> 0)
    epsilon: drive amplitude (>= 0)
    resonance_number: positive integer N, the nearest drive/oscillator ratio
    detuning: offset delta of the frequency ratio from N, |delta| < 1/2
    """

    h: float
    epsilon: float
    resonance_number: int
    detuning: float = 0.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if int(self.resonance_number) != self.resonance_number or self.resonance_number < 1:
            raise ValueError("resonance_number must be a positive integer")
        if abs(self.detuning) >= 0.5:
            raise ValueError("detuning must satisfy |delta| < 1/2")
        object.__setattr__(self, "resonance_number", int(self.resonance_number))

    @property
    def mu(self) -> float:
        """Drive frequency ratio mu = N + delta."""
        return self.resonance_number + self.detuning

    @property
    def period(self) -> float:
        """Drive period T = 2 pi / mu."""
        return 2.0 * math.pi / self.mu


def matrix_element_exact(m: int, mp: int, h: float) -> complex:
    """Matrix element <m| exp(iX) |mp> of the drive wave between oscillator
    number states, exact via the associated Laguerre polynomial.

    The matrix is symmetric in (m, mp); for offset n = |m - mp| the value is
    i^n h^{n/2} e^{-h/4} / (2^{n/2} sqrt((s+1)...(s+n))) * L_s^n(h/2) with
    s = min(m, mp).
    """
    if m < 0 or mp < 0:
        raise ValueError("state indices must be non-negative")
    s, n = (m, mp - m) if mp >= m else (mp, m - mp)
    lag = laguerre(s, n, h / 2.0)
    if lag == 0.0:
        return 0j
    # prefactor via logs: keeps the large-n band tail inside double range
    logpref = -h / 4.0 + 0.5 * n * math.log(h / 2.0) - 0.5 * (
        math.lgamma(s + n + 1) - math.lgamma(s + 1)
    )
    return (1j ** n) * math.copysign(math.exp(logpref + math.log(abs(lag))), lag)


def matrix_element_asymptotic(m: int, n: int, h: float) -> complex:
    """Large-m Bessel form of the coupling element for offset n >= 0.

    Uses the convergent limit of the Laguerre polynomial at fixed argument:
    the half-integer index shift s = m + (n+1)/2 enters both the amplitude
    and the Bessel argument, and the exponential prefactor of the exact
    element cancels against the matching factor of the limit, so the form
    approaches matrix_element_exact as m grows.
    """
    if m < 1:
        raise ValueError("asymptotic form requires m >= 1")
    if n < 0:
        raise ValueError("offset must be non-negative")
    s = m + 0.5 * (n + 1)
    logpref = 0.5 * n * math.log(s) - 0.5 * (
        math.lgamma(m + n + 1) - math.lgamma(m + 1)
    )
    return (1j ** n) * math.exp(logpref) * bessel_j(n, math.sqrt(2.0 * s * h))


def default_band_width(h: float, basis_size: int, resonance_number: int = 1) -> int:
    """Stored offsets per side.  Couplings collapse once the offset exceeds
    the largest Bessel argument sqrt(2 M h); six envelope widths plus a fixed
    margin (which carries small bases, where the factorial tail decays more
    slowly than the Bessel collapse) push the dropped tail below 1e-12."""
    return max(3 * resonance_number, math.ceil(6.0 * math.sqrt(h * basis_size)) + 6)


@dataclass(frozen=True)
class CouplingTable:
    """Banded symmetric table of <m| exp(iX) |m+n> for 0 <= n <= band_width.

    data[m, n] holds the element for offset n (zero padded past the basis
    edge).  Entries depend only on (h, basis_size, band_width, mode), never on
    the drive amplitude.  mode is "exact" (Laguerre) or "asymptotic" (Bessel).
    """

    h: float
    basis_size: int
    band_width: int
    mode: str
    data: np.ndarray = field(repr=False)
    tail_max: float = 0.0
    tail_tol: float = 1e-12

    def element(self, m: int, mp: int) -> complex:
        """Symmetric banded lookup; zero outside the band."""
        s, n = (m, mp - m) if mp >= m else (mp, m - mp)
        if s < 0 or max(m, mp) >= self.basis_size:
            raise IndexError("state index outside table basis")
        if n > self.band_width:
            return 0j
        return complex(self.data[s, n])

    def dense(self) -> np.ndarray:
        """Full symmetric complex matrix (basis_size x basis_size)."""
        M = self.basis_size
        out = np.zeros((M, M), dtype=complex)
        for n in range(0, self.band_width + 1):
            diag = self.data[: M - n, n]
            idx = np.arange(M - n)
            out[idx, idx + n] = diag
            if n:
                out[idx + n, idx] = diag
        return out

    def rows(self):
        """Yield (m, mp, value) over the stored upper band, row-major."""
        for m in range(self.basis_size):
            top = min(self.band_width, self.basis_size - 1 - m)
            for n in range(0, top + 1):
                yield m, m + n, complex(self.data[m, n])

    def to_csv(self, path) -> int:
        """Dump the stored band as (m, mp, Re F, Im F); returns row count."""
        from .csvio import write_csv

        return write_csv(
            path,
            ["m", "mp", "re_f", "im_f"],
            ((m, mp, v.real, v.imag) for m, mp, v in self.rows()),
        )


def build_coupling_table(
    params: ModelParams | float,
    basis_size: int,
    band_width: int | None = None,
    mode: str = "exact",
    tail_tol: float = 1e-12,
) -> CouplingTable:
    """Build the banded coupling table for a truncated basis.

    `params` may be a ModelParams (only h is read; the table is independent
    of the drive amplitude) or a bare h.  After filling the band, the first
    dropped diagonal is probed and a warning is issued if any dropped entry
    exceeds `tail_tol`.
    """
    h = params.h if isinstance(params, ModelParams) else float(params)
    N = params.resonance_number if isinstance(params, ModelParams) else 1
    if basis_size < 1:
        raise ValueError("basis_size must be positive")
    if band_width is None:
        band_width = default_band_width(h, basis_size, N)
    band_width = min(band_width, basis_size - 1)
    if mode not in ("exact", "asymptotic"):
        raise ValueError(f"unknown coupling table mode {mode!r}")

    data = np.zeros((basis_size, band_width + 2), dtype=complex)
    x = h / 2.0
    for n in range(0, band_width + 2):
        # one recurrence sweep in the degree fills the whole diagonal
        phase = 1j ** n
        logpref0 = -h / 4.0 + (0.5 * n * math.log(x) if n else 0.0)
        logrise = math.lgamma(n + 1.0)  # log((m+1)...(m+n)) at m = 0
        lag_prev = 0.0
        lag = 1.0  # L_0^n
        for m in range(0, basis_size - n):
            if mode == "asymptotic" and m >= 1:
                val = matrix_element_asymptotic(m, n, h)
            elif lag == 0.0:
                val = 0j
            else:
                logmag = logpref0 + math.log(abs(lag)) - 0.5 * logrise
                val = phase * math.copysign(math.exp(logmag), lag)
            data[m, n] = val
            # advance the Laguerre recurrence and the product log to m + 1
            if m == 0:
                lag_prev, lag = lag, n + 1.0 - x
            else:
                lag_prev, lag = lag, ((2 * m + 1 + n - x) * lag - (m + n) * lag_prev) / (m + 1)
            if n:
                logrise += math.log(m + n + 1.0) - math.log(m + 1.0)
    tail = np.abs(data[:, band_width + 1]).max() if band_width + 1 < basis_size else 0.0
    table = CouplingTable(
        h=h,
        basis_size=basis_size,
        band_width=band_width,
        mode=mode,
        data=data[:, : band_width + 1],
        tail_max=float(tail),
        tail_tol=tail_tol,
    )
    if tail > tail_tol:
        warnings.warn(
            f"coupling band too narrow: largest dropped element {tail:.3e} exceeds"
            f" tail tolerance {tail_tol:.1e}",
            stacklevel=2,
        )
    return table


@dataclass(frozen=True)
class CellPartition:
    """Resonance-cell boundaries from the zeros of J_N(sqrt(2 m h)).

    boundaries_real[i] = j_{N,i+1}^2 / (2h) is the exact boundary position in
    the level index; quantum_boundaries are the same values rounded to the
    nearest integer, classical_boundaries are the oscillation amplitudes
    kr_i = j_{N,i+1}.  Cell 1 is [0, boundary 1); cell i spans boundary i-1
    to boundary i.
    """

    h: float
    resonance_number: int
    boundaries_real: np.ndarray = field(repr=False)
    quantum_boundaries: np.ndarray = field(repr=False)
    classical_boundaries: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        """Number of complete cells resolved below the ceiling."""
        return len(self.boundaries_real)

    def cell_of(self, m: float) -> int:
        """1-based cell index containing level m; a value exactly on a
        boundary belongs to the lower cell."""
        if m < 0:
            raise ValueError("level index must be non-negative")
        return int(np.searchsorted(self.boundaries_real, m, side="left")) + 1

    def cell_interval(self, i: int) -> tuple[float, float]:
        """Real-valued (lower, upper) boundaries of 1-based cell i."""
        if i < 1 or i > self.count:
            raise IndexError("cell index out of range")
        lo = 0.0 if i == 1 else float(self.boundaries_real[i - 2])
        return lo, float(self.boundaries_real[i - 1])

    def cell_width(self, i: int) -> float:
        lo, hi = self.cell_interval(i)
        return hi - lo


def cell_boundaries(h: float, N: int, m_ceiling: float) -> CellPartition:
    """All cell boundaries m_i = j_{N,i}^2 / (2h) up to m_ceiling, paired with
    their classical amplitudes kr_i = j_{N,i}.  An empty partition is allowed
    when the ceiling sits below the first boundary."""
    if h <= 0:
        raise ValueError("h must be positive")
    if N < 1:
        raise ValueError("resonance number must be >= 1")
    x_ceiling = math.sqrt(2.0 * h * max(m_ceiling, 0.0))
    # k-th zero sits near N + k*pi: over-allocate, then trim
    guess = max(1, int((x_ceiling - N) / 3.0) + 2)
    zeros = bessel_zeros(N, guess).zeros
    while zeros[-1] <= x_ceiling:
        guess += 4
        zeros = bessel_zeros(N, guess).zeros
    zeros = zeros[zeros <= x_ceiling]
    real = zeros**2 / (2.0 * h)
    return CellPartition(
        h=h,
        resonance_number=N,
        boundaries_real=real,
        quantum_boundaries=np.rint(real).astype(int),
        classical_boundaries=zeros.copy(),
    )


def m_max_extent(params: ModelParams) -> float:
    """Level extent eps*N/(h*delta) of the resonantly coupled region.

    Returns 0 for a switched-off drive and +inf at exact resonance, instead
    of dividing by zero.
    """
    if params.epsilon == 0.0:
        return 0.0
    if params.detuning == 0.0:
        return math.inf
    return (params.epsilon * params.resonance_number) / (params.h * params.detuning)
