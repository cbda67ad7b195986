"""Experiment harness: convergence of (1/t) X_H(t) psi to Q psi, the
limit-periodic cascade, the Floquet mass lower bound, and transport exponents.

The analytic time schedule t_n is astronomically large for honest constants,
so it is reported only as a (clipped) shape; the convergence claims rest on
directly measured decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bands as _bands
from .errors import DepthExceeded, GridTooCoarse, WindowTooShort
from .evolve import MomentSeries, evolve, heisenberg_position, moments
from .fiber import apply_q, floquet
from .packets import WavePacket, boundary_mass_fraction, center_of_mass
from .potential import ECFamily, PeriodicPotential


@dataclass(eq=False)
class ConvergenceSeries:
    """|| (1/t) X_H(t) psi - Q_H psi || sampled over a time grid."""

    times: np.ndarray
    errors: np.ndarray
    q_norm: float
    decay_exponent: float
    boundary_flags: np.ndarray


def occupied_velocity_bound(
    potential: PeriodicPotential,
    psi: WavePacket,
    weight_tol: float = 1e-8,
    cutoff: int | None = None,
) -> float:
    """Max |v_n(k)| over the bands holding all but ``weight_tol`` of the
    packet's fiber mass (the box-sizing velocity)."""
    from .fiber import _eigen_grid, _fiber_coefficient_table, default_cutoff

    cells, mcell, jt, ms, d = _fiber_coefficient_table(psi, potential.period)
    if cutoff is None:
        cutoff = max(default_cutoff(potential), mcell // 2 + 8)
    grid = _eigen_grid(potential, cells, cutoff, 0.0)
    nret = grid[0][1].size
    weights = np.zeros(nret)
    vmax_per_band = np.zeros(nret)
    for j in range(cells):
        jsigned = j if j <= cells // 2 else j - cells
        sel = np.nonzero(jt == jsigned)[0]
        if sel.size == 0:
            continue
        _, _, vels, vecs = grid[j]
        dvec = np.zeros(2 * cutoff + 1, dtype=complex)
        dvec[ms[sel] + cutoff] = d[sel]
        b = np.abs(vecs.T @ dvec) ** 2
        weights += b
        vmax_per_band = np.maximum(vmax_per_band, np.abs(vels))
    total = float(np.sum(weights))
    if total == 0.0:
        return 0.0
    cum = np.cumsum(weights) / total
    n_need = int(np.searchsorted(cum, 1.0 - weight_tol)) + 1
    return float(np.max(vmax_per_band[:n_need]))


def plan_cells(
    potential: PeriodicPotential,
    width: float,
    wavenumber: float,
    t_final: float,
    samples_per_cell: int = 16,
    multiple_of: int = 1,
) -> int:
    """Cell count from the sizing rule: support + 2 v_max t + 10 periods.

    v_max comes from a small probe box via ``occupied_velocity_bound``.
    """
    p = potential.period
    probe_cells = max(16, multiple_of)
    probe = _gaussian_probe(width, wavenumber, p, probe_cells, samples_per_cell)
    vmax = occupied_velocity_bound(potential, probe)
    length = 14.0 * width + 2.0 * vmax * t_final + 10.0 * p
    cells = int(math.ceil(length / p))
    if multiple_of > 1:
        cells = multiple_of * int(math.ceil(cells / multiple_of))
    return cells


def _gaussian_probe(width, wavenumber, period, cells, samples_per_cell):
    from .packets import gaussian_packet

    return gaussian_packet(0.0, width, wavenumber, period, cells, samples_per_cell)


def periodic_convergence(
    potential: PeriodicPotential,
    psi: WavePacket,
    time_grid,
    dt: float | None = None,
    cutoff: int | None = None,
) -> ConvergenceSeries:
    """Measure the convergence rate toward the velocity multiplier state.

    The decay exponent is fitted by least squares on log error vs log t over
    the last decade of grid times.
    """
    times = np.asarray(sorted(float(t) for t in time_grid))
    if times.size == 0 or times[0] <= 0.0:
        raise ValueError("time grid must be positive (division by t)")
    qpsi = apply_q(potential, psi, cutoff=cutoff)
    center = center_of_mass(psi)
    errors = np.empty(times.size)
    flags = np.zeros(times.size, dtype=bool)
    current = psi.copy()
    now = 0.0
    for i, t in enumerate(times):
        if t > now:
            current = evolve(potential, current, t - now, dt, check_boundary=False)
            now = t
        flags[i] = boundary_mass_fraction(current) > 1e-8
        moved = current.with_values((current.positions() - center) * current.values)
        xh = evolve(potential, moved, -t, dt, check_boundary=False)
        diff = xh.values / t - qpsi.values
        errors[i] = float(np.sqrt(psi.h * np.sum(np.abs(diff) ** 2)))
    last = times >= times[-1] / 10.0
    if np.sum(last) >= 2 and np.all(errors[last] > 0):
        slope = np.polyfit(np.log(times[last]), np.log(errors[last]), 1)[0]
        exponent = -float(slope)
    else:
        exponent = math.nan
    return ConvergenceSeries(times, errors, qpsi.norm(), exponent, flags)


@dataclass(eq=False)
class TimeSchedule:
    levels: np.ndarray
    times: np.ndarray  # clipped values
    raw_times: np.ndarray
    clipped: np.ndarray
    c1: float
    kappa: float
    c2: float


def time_schedule(
    family: ECFamily,
    c1: float,
    kappa: float,
    r: float | None = None,
    c2_hat: float = 1.0,
    c2_cap: float = 1.0,
    horizon: float | None = None,
) -> TimeSchedule:
    """t_n = C1^5 p_{n+1}^{15/2} exp(5 kappa C2 sqrt(R) p_{n+1}), clipped.

    kappa below the proof's threshold 9/2 is rejected.
    """
    if kappa < 4.5:
        raise ValueError(f"kappa must be >= 9/2, got {kappa}")
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    if r is None:
        r = family.bound
    c2 = min(c2_hat, c2_cap)
    periods = family.periods
    levels = np.arange(family.depth)
    raw = np.array(
        [
            c1**5 * periods[n + 1] ** 7.5 * math.exp(5.0 * kappa * c2 * math.sqrt(r) * periods[n + 1])
            for n in levels
        ]
    )
    if horizon is None:
        clipped = np.zeros(levels.size, dtype=bool)
        times = raw.copy()
    else:
        clipped = raw > horizon
        times = np.minimum(raw, horizon)
    return TimeSchedule(levels, times, raw, clipped, c1, kappa, c2)


def floquet_mass_lower_bound(family: ECFamily, psi: WavePacket, n: int) -> float:
    """Ratio of the Floquet mass on the mid-zone set S_n to ||psi||^2 / 8."""
    if not 0 <= n <= family.depth:
        raise DepthExceeded(f"level {n} outside family depth {family.depth}")
    nrm = psi.norm()
    if nrm == 0.0:
        raise ValueError("the mass bound is undefined for psi = 0")
    p = family.periods[n]
    fld = floquet(psi, p)
    lo, hi = math.pi / (4.0 * p), 3.0 * math.pi / (4.0 * p)
    sel = (np.abs(fld.quasimomenta) >= lo * (1 - 1e-12)) & (
        np.abs(fld.quasimomenta) <= hi * (1 + 1e-12)
    )
    if np.sum(sel) < 8:
        raise GridTooCoarse(
            f"only {int(np.sum(sel))} quasimomenta fall in S_n at level {n}; enlarge the box"
        )
    h = p / fld.samples_per_cell
    integral = float(np.sum(np.abs(fld.values[sel]) ** 2) * h / fld.cells)
    return integral / (nrm**2 / 8.0)


def transport_exponents(series: MomentSeries, window: tuple[float, float]) -> tuple[float, float]:
    """(beta-, beta+): extremes of local log-log slopes of the second moment
    over the window, on the transport-exponent scale (slope / 2)."""
    tmin, tmax = window
    sel = (series.times >= tmin) & (series.times <= tmax) & (series.second_moment > 0)
    times = series.times[sel]
    m2 = series.second_moment[sel]
    if times.size < 3 or times[0] <= 0 or times[-1] / times[0] < 10.0 * (1 - 1e-9):
        raise WindowTooShort(
            "transport exponents need at least a decade of positive-moment times"
        )
    slopes = np.diff(np.log(m2)) / np.diff(np.log(times)) / 2.0
    return float(np.clip(np.min(slopes), 0.0, 2.0)), float(np.clip(np.max(slopes), 0.0, 2.0))


def fit_transport_exponent(series: MomentSeries, window: tuple[float, float]) -> float:
    """Least-squares beta from log|X|^2 vs log t over the window, clipped to [0, 2]."""
    tmin, tmax = window
    sel = (series.times >= tmin) & (series.times <= tmax) & (series.second_moment > 0)
    times = series.times[sel]
    m2 = series.second_moment[sel]
    if times.size < 3 or times[0] <= 0 or times[-1] / times[0] < 10.0 * (1 - 1e-9):
        raise WindowTooShort("beta fit needs at least a decade of positive-moment times")
    slope = np.polyfit(np.log(times), np.log(m2), 1)[0]
    return float(np.clip(slope / 2.0, 0.0, 2.0))


@dataclass(eq=False)
class TransportReport:
    """Cascade results: per-level multiplier states, Cauchy differences,
    the nonvanishing certificate, and transport diagnostics at the deepest
    level."""

    periods: np.ndarray
    schedule: TimeSchedule
    q_norms: np.ndarray  # ||Q_n psi||, n = 0..depth
    cauchy_differences: np.ndarray  # ||Q_{n+1} psi - Q_n psi||, n = 0..depth-1
    tail_ratio: float
    tail_bound: float
    q_nonzero: bool
    mass_ratios: np.ndarray  # Floquet mass lower-bound ratios per level
    convergence: ConvergenceSeries
    moment_series: MomentSeries
    beta_fit: float
    beta_minus: float
    beta_plus: float
    boundary_contaminated: bool
    psi_norm: float

    def invariant_failures(self) -> list[str]:
        out = []
        if self.psi_norm > 0:
            if np.any(np.diff(self.cauchy_differences) >= 0):
                out.append("cauchy differences are not strictly decreasing")
            if not self.q_nonzero:
                out.append("Q psi nonvanishing certificate failed")
            if self.q_nonzero and not self.q_norms[-1] - self.tail_bound > 0:
                out.append("certificate inconsistent with stored norms")
            if not 0.0 <= self.beta_fit <= 2.0:
                out.append("beta fit outside [0, 2]")
        if self.boundary_contaminated:
            out.append("boundary contamination during evolution")
        return out

    def to_json_dict(self) -> dict:
        return {
            "periods": list(map(float, self.periods)),
            "schedule_times": list(map(float, self.schedule.times)),
            "schedule_clipped": list(map(bool, self.schedule.clipped)),
            "q_norms": list(map(float, self.q_norms)),
            "cauchy_differences": list(map(float, self.cauchy_differences)),
            "tail_ratio": self.tail_ratio,
            "tail_bound": self.tail_bound,
            "q_nonzero": self.q_nonzero,
            "mass_ratios": list(map(float, self.mass_ratios)),
            "convergence_times": list(map(float, self.convergence.times)),
            "convergence_errors": list(map(float, self.convergence.errors)),
            "convergence_exponent": self.convergence.decay_exponent,
            "beta_fit": self.beta_fit,
            "beta_minus": self.beta_minus,
            "beta_plus": self.beta_plus,
            "boundary_contaminated": self.boundary_contaminated,
            "psi_norm": self.psi_norm,
        }


def cascade(
    family: ECFamily,
    psi: WavePacket,
    depth: int | None = None,
    horizon: float = 120.0,
    dt: float | None = None,
    kappa: float = 4.5,
    c1: float = 1.0,
) -> TransportReport:
    """Run the limit-periodic program at desk scale.

    Computes Q_n psi for every stored approximant on the common box, the
    Cauchy differences and the geometric-tail certificate for Q psi != 0,
    then evolves under the deepest approximant to measure the convergence
    series and the transport exponent.
    """
    if depth is None:
        depth = family.depth
    if depth > family.depth:
        raise DepthExceeded(f"requested depth {depth} > stored depth {family.depth}")
    psi.cells_for(family.periods[depth])  # commensurability with the deepest period

    approximants = [family.approximant(n) for n in range(depth + 1)]
    qstates = [apply_q(v, psi) for v in approximants]
    q_norms = np.array([q.norm() for q in qstates])
    diffs = np.array(
        [
            math.sqrt(psi.h * np.sum(np.abs(qstates[n + 1].values - qstates[n].values) ** 2))
            for n in range(depth)
        ]
    )

    psi_norm = psi.norm()
    tail_ratio, tail_bound, q_nonzero = _geometric_certificate(q_norms, diffs, psi_norm)

    mass_ratios = np.array(
        [floquet_mass_lower_bound(family, psi, n) for n in range(depth + 1)]
    ) if psi_norm > 0 else np.zeros(depth + 1)

    deepest = approximants[depth]
    tgrid = np.geomspace(max(horizon / 10.0, 1.0), horizon, 6)
    mtimes = np.geomspace(horizon / 10.0, horizon, 12)
    if psi_norm > 0:
        conv = periodic_convergence(deepest, psi, tgrid, dt)
        series = moments(deepest, psi, mtimes, dt)
        window = (mtimes[0], mtimes[-1])
        beta_fit = fit_transport_exponent(series, window)
        bminus, bplus = transport_exponents(series, window)
    else:
        zeros = np.zeros(tgrid.size)
        conv = ConvergenceSeries(tgrid, zeros, 0.0, math.nan, np.zeros(tgrid.size, dtype=bool))
        zm = np.zeros(mtimes.size)
        series = MomentSeries(mtimes, zm, zm, zm, zm, np.zeros(mtimes.size, dtype=bool), 0.0, 0.0)
        beta_fit = bminus = bplus = math.nan

    schedule = time_schedule(family, c1=c1, kappa=kappa, horizon=horizon)
    contaminated = bool(np.any(series.boundary_flags) or np.any(conv.boundary_flags))
    return TransportReport(
        periods=np.array(family.periods[: depth + 1]),
        schedule=schedule,
        q_norms=q_norms,
        cauchy_differences=diffs,
        tail_ratio=tail_ratio,
        tail_bound=tail_bound,
        q_nonzero=q_nonzero,
        mass_ratios=mass_ratios,
        convergence=conv,
        moment_series=series,
        beta_fit=beta_fit,
        beta_minus=bminus,
        beta_plus=bplus,
        boundary_contaminated=contaminated,
        psi_norm=psi_norm,
    )


def _geometric_certificate(q_norms, diffs, psi_norm):
    """Project the remaining differences as a geometric series and compare
    with ||Q_depth psi||, mirroring the telescoping argument."""
    if psi_norm == 0.0:
        return 0.0, 0.0, False
    if diffs.size == 0:
        return 0.0, 0.0, bool(q_norms[-1] > 0.0)
    if diffs.size >= 2 and diffs[-2] > 0:
        ratio = diffs[-1] / diffs[-2]
    else:
        ratio = 0.5
    ratio = min(max(ratio, 0.0), 0.9)
    tail = diffs[-1] * ratio / (1.0 - ratio)
    nonzero = q_norms[-1] - tail > 0.0
    return float(ratio), float(tail), bool(nonzero)
