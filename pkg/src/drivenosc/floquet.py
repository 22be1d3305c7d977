"""Full quantum dynamics in a truncated oscillator basis.

Propagates the driven Schroedinger equation, assembles the one-period
evolution operator column by column, extracts quasienergies and quasienergy
states, forms long-window time-averaged distributions by powering the
one-period operator, and diagonalizes the equivalent static lattice problem
in (level, drive-harmonic) space as an independent cross-check.

Propagation runs in the frame with the bare-oscillator phases
exp(-i (m + 1/2) tau) removed.  The transformation is exact and leaves the
same banded linear system behind, but the remaining right-hand side
oscillates at the drive and coupling offsets only, so the adaptive stepper
takes steps bounded by the drive scale instead of the basis cutoff.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .chain import QuasienergyState, eigenstate_stats
from .errors import GateError, NumericalError
from .model import CouplingTable, ModelParams, build_coupling_table

__all__ = [
    "FockState",
    "PropagationStats",
    "FloquetOperator",
    "Lattice2DProblem",
    "Lattice2DResult",
    "TimeAveragedDistribution",
    "schrodinger_rhs",
    "propagate",
    "build_floquet_operator",
    "quasienergy_spectrum",
    "time_averaged_distribution",
    "build_lattice2d",
    "lattice2d_eigenproblem",
    "recommended_basis_size",
]

DEFAULT_TOLERANCE = 1e-10
TAIL_FRACTION = 0.9      # tail monitor watches levels above this basis fraction
TAIL_TOLERANCE = 1e-8
UNITARITY_LIMIT = 1e-6   # hard gate for the one-period operator


@dataclass
class PropagationStats:
    """Integrator diagnostics for one propagation call."""

    nfev: int = 0
    nsteps: int = 0
    norm_drift: float = 0.0
    tail_mass: float = 0.0


@dataclass
class FockState:
    """Amplitudes over oscillator levels 0..M-1 at one instant."""

    amplitudes: np.ndarray
    time: float = 0.0
    stats: PropagationStats | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @property
    def basis_size(self) -> int:
        return len(self.amplitudes)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tail_mass(self, fraction: float = TAIL_FRACTION) -> float:
        cut = int(fraction * self.basis_size)
        return float(np.sum(np.abs(self.amplitudes[cut:]) ** 2))


def basis_state(basis_size: int, m0: int, time: float = 0.0) -> FockState:
    """Unit amplitude on level m0."""
    amps = np.zeros(basis_size, dtype=complex)
    amps[m0] = 1.0
    return FockState(amps, time)


def schrodinger_rhs(
    state: FockState, tau: float, params: ModelParams, table: CouplingTable
) -> np.ndarray:
    """Lab-frame time derivative of the amplitudes.

    dc_m/dtau = -(i/h) [ h (m + 1/2) c_m + V(tau) c ] with the drive matrix
    V(tau) = (eps/2) (e^{-i mu tau} F + e^{+i mu tau} conj(F)).  Reference
    form; the propagator below applies the same operator in the rotating
    frame.
    """
    c = state.amplitudes
    M = len(c)
    if table.basis_size < M:
        raise ValueError("coupling table smaller than the state basis")
    F = table.dense()[:M, :M]
    phase = np.exp(-1j * params.mu * tau)
    v = 0.5 * params.epsilon * (phase * (F @ c) + np.conj(phase) * np.conj(F @ np.conj(c)))
    levels = np.arange(M) + 0.5
    return -1j * levels * c - (1j / params.h) * v


class _Propagator:
    """Rotating-frame right-hand sides sharing one split of the coupling
    matrix into real and imaginary parts.

    V(tau) = eps (R cos(mu tau) + S sin(mu tau)) with R = Re F, S = Im F, so
    one real matrix W(tau) multiplies the complex state per evaluation.
    """

    def __init__(self, params: ModelParams, table: CouplingTable, basis_size: int):
        if table.basis_size < basis_size:
            raise ValueError("coupling table smaller than requested basis")
        F = table.dense()[:basis_size, :basis_size]
        self.R = np.ascontiguousarray(F.real)
        self.S = np.ascontiguousarray(F.imag)
        self.params = params
        self.M = basis_size
        self.phase_rate = -1j * (np.arange(basis_size) + 0.5)
        self._w = np.empty_like(self.R)
        self._w2 = np.empty_like(self.R)

    def _drive_matrix(self, tau: float) -> np.ndarray:
        mu_tau = self.params.mu * tau
        np.multiply(self.R, self.params.epsilon * math.cos(mu_tau), out=self._w)
        np.multiply(self.S, self.params.epsilon * math.sin(mu_tau), out=self._w2)
        self._w += self._w2
        return self._w

    def rhs_vector(self, tau: float, d: np.ndarray) -> np.ndarray:
        ph = np.exp(self.phase_rate * tau)
        u = ph * d
        W = self._drive_matrix(tau)
        v = W @ u.real + 1j * (W @ u.imag)
        return (-1j / self.params.h) * np.conj(ph) * v

    def rhs_matrix(self, tau: float, y: np.ndarray) -> np.ndarray:
        D = y.reshape(self.M, self.M)
        ph = np.exp(self.phase_rate * tau)
        u = ph[:, None] * D
        W = self._drive_matrix(tau)
        # real (M,M) @ complex (M,M) through the interleaved real view
        v = (W @ u.view(np.float64).reshape(self.M, 2 * self.M)).view(np.complex128)
        out = (-1j / self.params.h) * np.conj(ph)[:, None] * v
        return out.ravel()

    def lab_phases(self, tau: float) -> np.ndarray:
        """Diagonal bare-evolution phases e^{-i (m + 1/2) tau}."""
        return np.exp(self.phase_rate * tau)

    def integrate(self, y0: np.ndarray, tau_from: float, tau_to: float, tolerance: float):
        rhs = self.rhs_matrix if y0.size == self.M * self.M else self.rhs_vector
        sol = solve_ivp(
            rhs,
            (tau_from, tau_to),
            y0.ravel(),
            method="DOP853",
            rtol=tolerance,
            atol=tolerance * 1e-2,
        )
        if not sol.success:
            raise NumericalError(f"propagation failed at tau={sol.t[-1]:.6g}: {sol.message}")
        return sol


def propagate(
    state: FockState,
    tau_from: float,
    tau_to: float,
    params: ModelParams,
    table: CouplingTable,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_tol: float = TAIL_TOLERANCE,
) -> FockState:
    """Integrate the driven Schroedinger equation from tau_from to tau_to.

    Adaptive eighth-order stepping at the requested local tolerance.  The
    result is never renormalized; the norm drift is recorded as a diagnostic
    and a basis-tail breach raises a warning carrying the breach time.
    """
    if tau_to < tau_from:
        raise ValueError("tau_to must not precede tau_from")
    if tau_to == tau_from:
        out = FockState(state.amplitudes.copy(), tau_from)
        out.stats = PropagationStats(norm_drift=0.0, tail_mass=out.tail_mass())
        return out
    prop = _Propagator(params, table, state.basis_size)
    d0 = np.conj(prop.lab_phases(tau_from)) * state.amplitudes
    sol = prop.integrate(d0, tau_from, tau_to, tolerance)
    c = prop.lab_phases(tau_to) * sol.y[:, -1]
    out = FockState(c, tau_to)
    out.stats = PropagationStats(
        nfev=int(sol.nfev),
        nsteps=max(len(sol.t) - 1, 0),
        norm_drift=abs(out.norm_sq() - state.norm_sq()),
        tail_mass=out.tail_mass(),
    )
    if out.stats.tail_mass > tail_tol:
        warnings.warn(
            f"basis tail mass {out.stats.tail_mass:.3e} exceeds {tail_tol:.1e} "
            f"at tau={tau_to:.6g}; basis too small",
            stacklevel=2,
        )
    return out


@dataclass
class FloquetOperator:
    """One-period evolution operator in the truncated level basis."""

    matrix: np.ndarray = field(repr=False)
    params: ModelParams
    basis_size: int
    tolerance: float
    unitarity_residual: float
    table: CouplingTable = field(repr=False, default=None)
    nfev: int = 0

    def power_apply(self, state: np.ndarray, periods: int) -> np.ndarray:
        """Apply the operator `periods` times (stroboscopic evolution)."""
        c = state
        for _ in range(periods):
            c = self.matrix @ c
        return c


def unitarity_residual(matrix: np.ndarray) -> float:
    """Max-norm deviation of U^dagger U from the identity."""
    gram = matrix.conj().T @ matrix
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.abs(gram).max())


def build_floquet_operator(
    params: ModelParams,
    basis_size: int,
    tolerance: float = DEFAULT_TOLERANCE,
    table: CouplingTable | None = None,
) -> FloquetOperator:
    """Propagate the full basis over one drive period.

    All columns advance together under a common adaptive step (equivalent to
    propagating each basis vector independently, with the step control taken
    over the worst column).  A unitarity residual beyond the hard limit
    raises: the basis is too small or the tolerance too loose.
    """
    if table is None:
        table = build_coupling_table(params, basis_size)
    prop = _Propagator(params, table, basis_size)
    y0 = np.eye(basis_size, dtype=complex)
    sol = prop.integrate(y0, 0.0, params.period, tolerance)
    U = prop.lab_phases(params.period)[:, None] * sol.y[:, -1].reshape(basis_size, basis_size)
    resid = unitarity_residual(U)
    if resid > UNITARITY_LIMIT:
        raise GateError(
            f"one-period operator unitarity residual {resid:.3e} exceeds "
            f"{UNITARITY_LIMIT:.1e} (basis {basis_size}, tolerance {tolerance:.1e})"
        )
    return FloquetOperator(
        matrix=U,
        params=params,
        basis_size=basis_size,
        tolerance=tolerance,
        unitarity_residual=resid,
        table=table,
        nfev=int(sol.nfev),
    )


def quasienergy_spectrum(op: FloquetOperator) -> list[QuasienergyState]:
    """Eigenpairs of the one-period operator as quasienergy states at tau=0.

    The unitary eigenproblem is solved through the Hermitian pair
    Hc = (U + U^dag)/2 and Hs = (U - U^dag)/(2i): Hc fixes the eigenvectors
    up to clusters, and Hs resolves the eigenphase sign inside each cluster.
    Quasienergies are reduced to [0, h mu); states are sorted by their level
    mean.
    """
    U = op.matrix
    if unitarity_residual(U) > UNITARITY_LIMIT:
        raise NumericalError("operator is not unitary to tolerance; cannot diagonalize")
    M = op.basis_size
    hc = (U + U.conj().T) / 2.0
    hs = (U - U.conj().T) / 2.0j
    cos_eig, vecs = scipy.linalg.eigh(hc)
    sin_eig = np.empty(M)
    # resolve sin(phase) inside clusters degenerate in cos(phase)
    start = 0
    while start < M:
        stop = start + 1
        while stop < M and cos_eig[stop] - cos_eig[stop - 1] < 1e-9:
            stop += 1
        block = vecs[:, start:stop]
        sub = block.conj().T @ hs @ block
        if stop - start == 1:
            sin_eig[start] = sub[0, 0].real
        else:
            sw, sv = scipy.linalg.eigh((sub + sub.conj().T) / 2.0)
            vecs[:, start:stop] = block @ sv
            sin_eig[start:stop] = sw
        start = stop
    phases = np.arctan2(sin_eig, cos_eig)
    h_mu = op.params.h * op.params.mu
    sigmas = np.mod(-op.params.h * phases / op.params.period, h_mu)
    levels = np.arange(M)
    states = []
    for q in range(M):
        mean, rootvar = eigenstate_stats(vecs[:, q], levels)
        states.append(
            QuasienergyState(
                quasienergy=float(sigmas[q]),
                levels=levels,
                amplitudes=vecs[:, q].copy(),
                mean=mean,
                variance=rootvar,
            )
        )
    states.sort(key=lambda s: s.mean)
    return states


@dataclass
class TimeAveragedDistribution:
    """Level-occupation probabilities averaged over stroboscopic samples."""

    probabilities: np.ndarray = field(repr=False)
    m0: int
    tau_start: float
    tau_end: float
    samples: int
    tail_max: float = 0.0
    tail_breach_time: float | None = None


def time_averaged_distribution(
    params: ModelParams,
    m0: int,
    tau_start: float,
    tau_end: float,
    samples: int,
    basis_size: int | None = None,
    op: FloquetOperator | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    tail_tol: float = TAIL_TOLERANCE,
) -> TimeAveragedDistribution:
    """Average |c_m|^2 over equally spaced sample times in the window.

    Starts from unit amplitude on level m0 at tau = 0.  Whole periods are
    covered by powering the precomputed one-period operator; the fractional
    remainder of each sample time is integrated directly (the drive is
    periodic, so the fractional step always maps to [0, T)).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if not (0.0 <= tau_start < tau_end):
        raise ValueError("window must satisfy 0 <= tau_start < tau_end")
    if op is None:
        if basis_size is None:
            raise ValueError("pass either a basis size or a prebuilt operator")
        op = build_floquet_operator(params, basis_size, tolerance)
    M = op.basis_size
    if not 0 <= m0 < M:
        raise ValueError("initial level outside basis")
    T = params.period
    times = np.linspace(tau_start, tau_end, samples) if samples > 1 else np.array([tau_start])
    prop = _Propagator(params, op.table, M)
    probs = np.zeros(M)
    c = np.zeros(M, dtype=complex)
    c[m0] = 1.0
    s_cur = 0
    tail_max, breach = 0.0, None
    for tau in times:
        s_j = int(math.floor(tau / T + 1e-12))
        if s_j > s_cur:
            c = op.power_apply(c, s_j - s_cur)
            s_cur = s_j
        r = tau - s_j * T
        if r > 1e-12 * max(T, 1.0):
            d0 = np.conj(prop.lab_phases(0.0)) * c
            sol = prop.integrate(d0, 0.0, r, tolerance)
            cj = prop.lab_phases(r) * sol.y[:, -1]
        else:
            cj = c
        w = np.abs(cj) ** 2
        probs += w
        tail = float(w[int(TAIL_FRACTION * M):].sum())
        if tail > tail_max:
            tail_max = tail
            if tail > tail_tol and breach is None:
                breach = float(tau)
    if breach is not None:
        warnings.warn(
            f"basis tail mass {tail_max:.3e} exceeded {tail_tol:.1e} during the "
            f"window (first breach at tau={breach:.6g})",
            stacklevel=2,
        )
    return TimeAveragedDistribution(
        probabilities=probs / len(times),
        m0=m0,
        tau_start=tau_start,
        tau_end=tau_end,
        samples=samples,
        tail_max=tail_max,
        tail_breach_time=breach,
    )


@dataclass(frozen=True)
class Lattice2DProblem:
    """Static lattice form of the quasienergy eigenproblem.

    Sites (m, l) with m = 0..M-1 and l = -L..L carry on-site energies
    h (m - mu l); the drive couples (m, l) to every (m', l +/- 1) inside the
    coupling band.  The operator is Hermitian and strictly diagonal at
    eps = 0.
    """

    params: ModelParams
    basis_size: int
    l_max: int
    hamiltonian: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.basis_size * (2 * self.l_max + 1)

    def index(self, m: int, l: int) -> int:
        return (l + self.l_max) * self.basis_size + m


LATTICE_SIZE_CAP = 6000


def build_lattice2d(
    params: ModelParams,
    basis_size: int,
    l_max: int,
    table: CouplingTable | None = None,
    size_cap: int = LATTICE_SIZE_CAP,
) -> Lattice2DProblem:
    """Assemble the dense Hermitian lattice operator."""
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    size = basis_size * (2 * l_max + 1)
    if size > size_cap:
        raise NumericalError(
            f"lattice size {basis_size}x(2*{l_max}+1) = {size} exceeds cap {size_cap}"
        )
    if table is None:
        table = build_coupling_table(params, basis_size, band_width=basis_size - 1)
    F = table.dense()[:basis_size, :basis_size]
    B = 0.5 * params.epsilon * F
    H = np.zeros((size, size), dtype=complex)
    levels = np.arange(basis_size)
    for li, l in enumerate(range(-l_max, l_max + 1)):
        a = li * basis_size
        H[a : a + basis_size, a : a + basis_size] = np.diag(
            params.h * (levels - params.mu * l)
        )
        if li + 1 <= 2 * l_max:
            b = (li + 1) * basis_size
            H[a : a + basis_size, b : b + basis_size] = B
            H[b : b + basis_size, a : a + basis_size] = B.conj()
    return Lattice2DProblem(
        params=params, basis_size=basis_size, l_max=l_max, hamiltonian=H
    )


@dataclass
class Lattice2DResult:
    """Eigensystem of the truncated lattice problem."""

    problem: Lattice2DProblem
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    def level_marginal(self, q: int) -> np.ndarray:
        """Occupation profile over m, summed over the harmonic index."""
        M = self.problem.basis_size
        w = np.abs(self.eigenvectors[:, q]) ** 2
        return w.reshape(2 * self.problem.l_max + 1, M).sum(axis=0)

    def edge_weight(self, q: int, rings: int = 1) -> float:
        """Probability on the outermost harmonic rings (truncation probe)."""
        M = self.problem.basis_size
        w = np.abs(self.eigenvectors[:, q]) ** 2
        w = w.reshape(2 * self.problem.l_max + 1, M)
        return float(w[:rings].sum() + w[-rings:].sum())

    def interior_indices(self, rings: int = 1, limit: float = 1e-8) -> np.ndarray:
        return np.array(
            [q for q in range(len(self.eigenvalues)) if self.edge_weight(q, rings) < limit],
            dtype=int,
        )


def lattice2d_eigenproblem(
    params: ModelParams,
    basis_size: int,
    l_max: int,
    table: CouplingTable | None = None,
    size_cap: int = LATTICE_SIZE_CAP,
) -> Lattice2DResult:
    """Dense Hermitian eigensystem of the truncated lattice."""
    problem = build_lattice2d(params, basis_size, l_max, table=table, size_cap=size_cap)
    vals, vecs = scipy.linalg.eigh(problem.hamiltonian)
    return Lattice2DResult(problem=problem, eigenvalues=vals, eigenvectors=vecs)


def recommended_basis_size(params: ModelParams, last_boundary_m: float) -> int:
    """Basis cutoff: one and a half times the last analyzed cell boundary,
    so edge reflection is absorbed ahead of the tail monitor."""
    return int(math.ceil(1.5 * last_boundary_m))
