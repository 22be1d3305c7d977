"""Classical limit: the driven-oscillator flow, stroboscopic phase-space
sections in folded angle coordinates, and the classical resonance-cell map.

The flow is X' = P, P' = -X + eps sin(X - mu tau).  Sections sample once per
drive period and plot the oscillation amplitude kr = sqrt(X^2 + P^2) against
the folded angle theta = N arctan(X / P) mod 2 pi, which co-rotates with the
resonance so island chains appear stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError
from .model import ModelParams, cell_boundaries

__all__ = [
    "PhasePoint",
    "AngleActionPoint",
    "StroboscopicSection",
    "ClassicalCellMap",
    "flow_rhs",
    "to_angle_action",
    "integrate_trajectory",
    "integrate_ensemble",
    "stroboscopic_section",
    "classical_cell_map",
    "one_period_map",
    "section_seed_grid",
]

DEFAULT_TOLERANCE = 1e-11


@dataclass(frozen=True)
class PhasePoint:
    """Dimensionless phase-space point."""

    X: float
    P: float
    tau: float = 0.0


@dataclass(frozen=True)
class AngleActionPoint:
    """Action-angle image of a phase-space point.

    kr = sqrt(2 I) is the oscillation amplitude, theta = N * angle mod 2 pi
    the folded phase; X = kr sin(angle), P = kr cos(angle).
    """

    action: float
    kr: float
    angle: float
    theta: float


def flow_rhs(point: PhasePoint, params: ModelParams) -> tuple[float, float]:
    """Time derivatives (dX/dtau, dP/dtau) of the driven flow."""
    return (
        point.P,
        -point.X + params.epsilon * math.sin(point.X - params.mu * point.tau),
    )


def to_angle_action(point: PhasePoint, resonance_number: int = 1) -> AngleActionPoint:
    """Map (X, P) to amplitude, action and (folded) angle.

    The angle convention is X = kr sin(angle), P = kr cos(angle); the origin
    maps to angle 0.
    """
    kr = math.hypot(point.X, point.P)
    angle = math.atan2(point.X, point.P) % (2.0 * math.pi) if kr > 0.0 else 0.0
    theta = (resonance_number * angle) % (2.0 * math.pi)
    return AngleActionPoint(action=0.5 * kr * kr, kr=kr, angle=angle, theta=theta)


def _rhs_ensemble(params: ModelParams):
    eps, mu = params.epsilon, params.mu

    def rhs(tau, y):
        n = y.size // 2
        x, p = y[:n], y[n:]
        return np.concatenate((p, -x + eps * np.sin(x - mu * tau)))

    return rhs


def integrate_ensemble(
    starts: np.ndarray,
    periods: int,
    params: ModelParams,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate many trajectories at once, sampled at tau = s T.

    starts has shape (n, 2) holding (X, P) rows at tau = 0.  Returns arrays
    X, P of shape (n, periods + 1) including the initial sample.  The
    common adaptive step is driven by the worst trajectory; trajectories are
    independent, so nothing else couples them.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    n = len(starts)
    T = params.period
    t_eval = np.arange(periods + 1) * T
    sol = solve_ivp(
        _rhs_ensemble(params),
        (0.0, periods * T),
        np.concatenate((starts[:, 0], starts[:, 1])),
        t_eval=t_eval,
        method="DOP853",
        rtol=tolerance,
        atol=tolerance,
    )
    if not sol.success:
        raise NumericalError(f"classical integration failed: {sol.message}")
    return sol.y[:n], sol.y[n:]


@dataclass(frozen=True)
class StroboscopicSection:
    """Per-period samples of an ensemble in folded coordinates.

    kr and theta have shape (trajectories, periods + 1); row i belongs to
    initial condition starts[i].  Sample s was taken at tau = s T exactly.
    """

    params: ModelParams
    starts: np.ndarray = field(repr=False)
    kr: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)

    @property
    def trajectory_count(self) -> int:
        return len(self.starts)

    @property
    def period_count(self) -> int:
        return self.kr.shape[1] - 1

    def rows(self):
        """Yield (trajectory_id, s, kr, theta) in CSV order."""
        for i in range(self.kr.shape[0]):
            for s in range(self.kr.shape[1]):
                yield i, s, float(self.kr[i, s]), float(self.theta[i, s])


def integrate_trajectory(
    start: PhasePoint,
    periods: int,
    params: ModelParams,
    tolerance: float = DEFAULT_TOLERANCE,
) -> StroboscopicSection:
    """Stroboscopic record of a single trajectory."""
    if periods < 1:
        raise ValueError("need at least one period")
    return stroboscopic_section(
        np.array([[start.X, start.P]]), periods, params, tolerance
    )


def stroboscopic_section(
    starts: np.ndarray,
    periods: int,
    params: ModelParams,
    tolerance: float = DEFAULT_TOLERANCE,
) -> StroboscopicSection:
    """Stroboscopic section of an ensemble of initial conditions."""
    X, P = integrate_ensemble(starts, periods, params, tolerance)
    kr = np.hypot(X, P)
    angle = np.arctan2(X, P) % (2.0 * math.pi)
    theta = (params.resonance_number * angle) % (2.0 * math.pi)
    return StroboscopicSection(
        params=params, starts=np.atleast_2d(np.asarray(starts, float)).copy(),
        kr=kr, theta=theta,
    )


def section_seed_grid(
    params: ModelParams,
    cells: int,
    kr_per_cell: int = 20,
    angles: int = 8,
    pad: float = 0.1,
) -> np.ndarray:
    """Default seeding: a kr grid inside each cell crossed with launch angles.

    Seeds stay `pad` cell-widths away from the cell boundaries so that probe
    trajectories start inside the cell they are attributed to.
    """
    # zeros of J_N sit near N + k pi, so this ceiling resolves `cells` of them
    kr_need = params.resonance_number + (cells + 2) * math.pi
    bounds = cell_boundaries(
        params.h, params.resonance_number, kr_need**2 / (2.0 * params.h)
    )
    if bounds.count < cells:
        raise ValueError("not enough resolved cells")
    kr_edges = np.concatenate(([0.0], bounds.classical_boundaries[:cells]))
    seeds = []
    for i in range(cells):
        lo, hi = kr_edges[i], kr_edges[i + 1]
        width = hi - lo
        rs = np.linspace(lo + pad * width, hi - pad * width, kr_per_cell)
        for kr in rs:
            for j in range(angles):
                ang = 2.0 * math.pi * j / angles
                seeds.append((kr * math.sin(ang), kr * math.cos(ang)))
    return np.array(seeds)


@dataclass(frozen=True)
class ClassicalCellMap:
    """Cell boundaries with an escape-fraction chaos proxy per cell."""

    params: ModelParams
    boundaries_kr: np.ndarray = field(repr=False)
    leave_fraction: np.ndarray = field(repr=False)
    probes_per_cell: int = 0
    periods: int = 0

    @property
    def cell_count(self) -> int:
        return len(self.leave_fraction)

    def rows(self):
        for i in range(self.cell_count):
            yield i + 1, float(self.boundaries_kr[i]), float(self.leave_fraction[i])


def classical_cell_map(
    params: ModelParams,
    kr_max: float,
    kr_per_cell: int = 12,
    angles: int = 6,
    periods: int = 500,
    tolerance: float = DEFAULT_TOLERANCE,
    pad: float = 0.1,
    margin: float = 0.25,
) -> ClassicalCellMap:
    """Cell boundaries kr_i plus the fraction of probe trajectories that
    leave their seeded cell within the probe window.

    The boundaries are drive-independent (zeros of J_N); only the escape
    fractions probe the dynamics.  A trajectory counts as having left its
    cell when a stroboscopic kr sample exits the cell interval by more than
    `margin` cell widths: bounded non-resonant wobble across a boundary is
    not transport, while genuine escape into the chaotic sea overshoots any
    sub-width margin immediately.
    """
    N = params.resonance_number
    bounds = cell_boundaries(params.h, N, kr_max**2 / (2 * params.h))
    kr_edges = np.concatenate(([0.0], bounds.classical_boundaries))
    cells = len(bounds.classical_boundaries)
    if cells < 1:
        raise ValueError("kr_max must exceed the first cell boundary")
    seeds = section_seed_grid(params, cells, kr_per_cell, angles, pad)
    section = stroboscopic_section(seeds, periods, params, tolerance)
    per_cell = kr_per_cell * angles
    leave = np.zeros(cells)
    for i in range(cells):
        block = section.kr[i * per_cell : (i + 1) * per_cell]
        lo, hi = kr_edges[i], kr_edges[i + 1]
        slack = margin * (hi - lo)
        left = np.any((block < lo - slack) | (block > hi + slack), axis=1)
        leave[i] = left.mean()
    return ClassicalCellMap(
        params=params,
        boundaries_kr=bounds.classical_boundaries,
        leave_fraction=leave,
        probes_per_cell=per_cell,
        periods=periods,
    )


def one_period_map(
    start: tuple[float, float],
    params: ModelParams,
    tolerance: float = 1e-12,
) -> tuple[float, float]:
    """Image of (X, P) under the stroboscopic map over one drive period."""
    X, P = integrate_ensemble(np.array([start]), 1, params, tolerance)
    return float(X[0, -1]), float(P[0, -1])
