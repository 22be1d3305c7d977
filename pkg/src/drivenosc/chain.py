"""Nearest-resonance tight-binding chain.

Restricting the quasienergy lattice to the sub-lattice of levels spaced by
the resonance number N turns the driven-oscillator eigenproblem into a 1D
chain: site k holds level m_k = m_offset + k N, the diagonal carries the
detuning energy h delta m_k / N, and neighboring sites couple through
(eps/2) <m_k| exp(iX) |m_k + N>.  A per-site gauge strips the i^N phase of
the coupling so the chain diagonalizes as a real symmetric tridiagonal
matrix; the inverse gauge is applied on output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .model import CellPartition, ModelParams, matrix_element_exact

__all__ = [
    "ResonanceChain",
    "QuasienergyState",
    "DELOCALIZED",
    "build_chain",
    "solve_chain",
    "eigenstate_stats",
    "classify_states",
]

# cell_index sentinel for states whose variance exceeds their cell's width
DELOCALIZED = -1

# exact powers of i, avoiding complex pow roundoff
_I_POW = (1 + 0j, 1j, -1 + 0j, -1j)


def _i_power(k: int) -> complex:
    return _I_POW[k % 4]


@dataclass(frozen=True)
class ResonanceChain:
    """Real symmetric tridiagonal form of the resonance-restricted problem.

    hopping[k] couples sites k and k+1 and keeps the sign of the underlying
    coupling element; gauge_phases[k] restores the complex amplitude
    convention, A_k = gauge_phases[k] * B_k for a real eigenvector B.
    quasienergy_shift records the spectral offset mu h frac(m_offset / N)
    that applies when the chain starts off the m = N l sub-lattice.
    """

    params: ModelParams
    site_states: np.ndarray = field(repr=False)
    diagonal: np.ndarray = field(repr=False)
    hopping: np.ndarray = field(repr=False)
    gauge_phases: np.ndarray = field(repr=False)
    quasienergy_shift: float = 0.0

    @property
    def size(self) -> int:
        return len(self.site_states)


@dataclass(frozen=True)
class QuasienergyState:
    """One eigenpair with its level-space statistics.

    levels[i] is the oscillator index carrying amplitudes[i]; mean and
    variance are the first two moments of |amplitude|^2 over levels.
    cell_index is None before classification, a 1-based cell number for a
    cell-resident state, or DELOCALIZED.
    """

    quasienergy: float
    levels: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)
    mean: float
    variance: float
    cell_index: int | None = None


def build_chain(params: ModelParams, m_offset: int = 0, site_count: int = 2) -> ResonanceChain:
    """Assemble the chain for sites m_k = m_offset + k N, k = 0..site_count-1.

    m_offset need not be a multiple of N; the resulting constant quasienergy
    shift mu h frac(m_offset / N) is recorded on the chain.
    """
    if m_offset < 0:
        raise ValueError("m_offset must be non-negative")
    if site_count < 2:
        raise ValueError("chain needs at least two sites")
    N = params.resonance_number
    h = params.h
    sites = m_offset + N * np.arange(site_count)
    diagonal = h * params.detuning * sites / N
    phase_in = _i_power(N).conjugate()  # one factor of conj(i^N) per site step
    sign = -1.0 if N % 2 else 1.0       # i^{2N} picked up by the gauge
    hopping = np.empty(site_count - 1)
    for k in range(site_count - 1):
        f = matrix_element_exact(int(sites[k]), int(sites[k] + N), h)
        g = f * phase_in  # strips i^N; real by the phase structure of F
        if abs(g.imag) > 1e-12 * max(1.0, abs(g)):
            raise NumericalError(f"coupling at site {k} is not gauge-real: {f!r}")
        hopping[k] = 0.5 * params.epsilon * sign * g.real
    gauge = np.array([_i_power(N * k) for k in range(site_count)])
    shift = params.mu * h * math.modf(m_offset / N)[0]
    return ResonanceChain(
        params=params,
        site_states=sites,
        diagonal=diagonal,
        hopping=hopping,
        gauge_phases=gauge,
        quasienergy_shift=shift,
    )


def eigenstate_stats(amplitudes: np.ndarray, site_states: np.ndarray) -> tuple[float, float]:
    """Mean and root variance of |amplitude|^2 over the level index."""
    w = np.abs(np.asarray(amplitudes)) ** 2
    m = np.asarray(site_states, dtype=float)
    mean = float(w @ m)
    var = float(w @ (m - mean) ** 2)
    return mean, math.sqrt(max(var, 0.0))


def solve_chain(chain: ResonanceChain) -> list[QuasienergyState]:
    """Full eigensystem of the chain, sorted by the level-space mean.

    Eigenvectors are re-gauged back to the complex amplitude convention of
    the resonance-restricted equations.
    """
    try:
        vals, vecs = scipy.linalg.eigh_tridiagonal(chain.diagonal, chain.hopping)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    amps = chain.gauge_phases[:, None] * vecs
    states = []
    for q in range(chain.size):
        mean, rootvar = eigenstate_stats(amps[:, q], chain.site_states)
        states.append(
            QuasienergyState(
                quasienergy=float(vals[q]),
                levels=chain.site_states,
                amplitudes=amps[:, q].copy(),
                mean=mean,
                variance=rootvar,
            )
        )
    states.sort(key=lambda s: s.mean)
    return states


def classify_states(
    states: list[QuasienergyState], partition: CellPartition
) -> list[QuasienergyState]:
    """Assign each state to its resonance cell or mark it delocalized.

    A state is resident in the cell containing its mean if its root variance
    does not exceed that cell's width; a mean exactly on a boundary belongs
    to the lower cell.  The partition must extend past every state mean.
    """
    out = []
    for s in states:
        i = partition.cell_of(s.mean)
        if i > partition.count:
            raise ValueError(
                f"cell partition (ceiling {partition.boundaries_real[-1]:.1f}) "
                f"does not cover state mean {s.mean:.1f}"
            )
        resident = s.variance <= partition.cell_width(i)
        out.append(replace(s, cell_index=i if resident else DELOCALIZED))
    return out
