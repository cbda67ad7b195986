"""Band edges, band functions E_n(k), group velocities, and gap diagnostics.

Everything here is driven by the discriminant route (Hill-equation
integration + root finding); the plane-wave eigensolver in ``fiber`` is kept
as an independent cross-check.  Band interiors are where |discriminant| < 2;
on each band the discriminant is strictly monotone, so ``E_n(k)`` solves
``Delta(E) = 2 cos(p k)`` by bracketed root finding with a Newton polish, and
``v_n(k) = -2 p sin(p k) / Delta'(E_n(k))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, GridTooCoarse, RootNotBracketed
from .monodromy import monodromy
from .potential import PeriodicPotential

# Integrator tolerances: default for scans, tight for final edge refinement
# (edge location conditioning degrades like the reciprocal of the gap width,
# so edges get the extra digits).
_SCAN_TOL = (1e-14, 1e-12)
_TIGHT_TOL = (3e-15, 3e-14)
_BRENTQ_RTOL = 1e-15


def default_max_energy(potential: PeriodicPotential) -> float:
    """Covers every band a thermal-scale test packet can occupy."""
    return 40.0 * (2.0 * math.pi / potential.period) ** 2 + potential.bound


@dataclass(frozen=True)
class BandEdge:
    energy: float
    level: int  # +1 for Delta = +2, -1 for Delta = -2
    closed: bool  # True when this edge is one of a coincident (closed-gap) pair


def _delta(potential, z, tol=_SCAN_TOL):
    return monodromy(potential, z, *tol).discriminant


def _delta_prime(potential, z, tol=_SCAN_TOL):
    return monodromy(potential, z, *tol).discriminant_derivative


def _second_derivative(potential, c):
    scale = max(1e-3, 1e-4 * (1.0 + abs(c)))
    return (_delta_prime(potential, c + scale) - _delta_prime(potential, c - scale)) / (2 * scale)


@lru_cache(maxsize=32)
def _edge_data(potential: PeriodicPotential, max_energy: float) -> tuple[BandEdge, ...]:
    """Band edges with energy <= max_energy, plus the one edge needed to
    complete the band containing max_energy."""
    p = potential.period
    bound = potential.bound
    if max_energy < -bound:
        return ()
    z_lo = -bound - 1.0
    pad = 4.0 * (math.pi / p) * math.sqrt(abs(max_energy) + bound + 1.0) + 6.0 * (math.pi / p) ** 2
    z_hi = max_energy + pad
    step = min((math.pi / p) ** 2, 1.0) / 4.0

    # Scan until at least one discriminant critical point lies above
    # max_energy; critical points sit one per gap (transversal zeros of
    # Delta', detectable by sign change even across a closed gap), so that
    # guarantees the last relevant band is fully bracketed.
    for _ in range(8):
        zs = np.arange(z_lo, z_hi + step, step)
        dprimes = np.array([_delta_prime(potential, z) for z in zs])
        crossings = np.nonzero(np.sign(dprimes[:-1]) * np.sign(dprimes[1:]) < 0)[0]
        crits = [
            brentq(
                lambda z: _delta_prime(potential, z),
                zs[i],
                zs[i + 1],
                xtol=1e-12,
                rtol=_BRENTQ_RTOL,
            )
            for i in crossings
        ]
        if crits and crits[-1] > max_energy:
            break
        z_hi += 2.0 * pad
    else:
        raise BracketFailure(f"no discriminant critical point found above {max_energy}")

    # Classify each gap as open or closed from the local quadratic model of
    # the discriminant; below the noise-crossover width the coincident-edge
    # report is the more accurate option.
    crit_info: list[tuple[float, int, bool]] = []
    edges: list[BandEdge] = []
    for c in crits:
        val = _delta(potential, c, _TIGHT_TOL)
        level = 1 if val > 0 else -1
        excess = abs(val) - 2.0
        curv = max(abs(_second_derivative(potential, c)), 1e-30)
        noise = 3e-13 * (1.0 + abs(val))
        closed = max(excess, 0.0) * 2.0 / curv <= 4.0 * noise / curv
        crit_info.append((c, level, closed))
        if closed:
            edges.append(BandEdge(c, level, True))
            edges.append(BandEdge(c, level, True))

    def delta_tight(z):
        return _delta(potential, z, _TIGHT_TOL)

    bounds = [(zs[0], 0, False)] + crit_info + [(zs[-1], 0, False)]
    for (a, lev_a, closed_a), (b, lev_b, closed_b) in zip(bounds[:-1], bounds[1:]):
        fa, fb = delta_tight(a), delta_tight(b)
        for level in (1, -1):
            if (closed_a and lev_a == level) or (closed_b and lev_b == level):
                continue  # that edge is the coincident pair at the touchpoint
            ga, gb = fa - 2.0 * level, fb - 2.0 * level
            if ga * gb < 0:
                root = brentq(
                    lambda z: delta_tight(z) - 2.0 * level,
                    a,
                    b,
                    xtol=1e-13,
                    rtol=_BRENTQ_RTOL,
                )
                r = monodromy(potential, root, *_TIGHT_TOL)
                if r.discriminant_derivative != 0.0:
                    corr = (r.discriminant - 2.0 * level) / r.discriminant_derivative
                    if abs(corr) < 1e-6 * (1.0 + abs(root)):
                        root -= corr
                edges.append(BandEdge(root, level, False))

    edges.sort(key=lambda e: e.energy)
    _validate_alternation(edges)
    kept: list[BandEdge] = []
    for i, e in enumerate(edges):
        if e.energy <= max_energy or (i % 2 == 1 and edges[i - 1].energy <= max_energy):
            kept.append(e)
    return tuple(kept)


def _validate_alternation(edges: list[BandEdge]) -> None:
    """Edges must run +2, (-2,-2), (+2,+2), ... when sorted by energy."""
    for i, e in enumerate(edges):
        expected = 1 if ((i + 1) // 2) % 2 == 0 else -1
        if e.level != expected:
            raise BracketFailure(
                f"edge pattern inconsistent at index {i}: energy {e.energy:.6g} has "
                f"Delta = {2 * e.level}, expected {2 * expected}"
            )


def band_edges(potential: PeriodicPotential, max_energy: float) -> np.ndarray:
    """Sorted energies where Delta = +-2, below max_energy; closed gaps appear
    as coincident pairs."""
    data = _edge_data(potential, float(max_energy))
    return np.array([e.energy for e in data if e.energy <= max_energy])


def _band_bracket(potential, n, max_energy):
    """(lower, upper, lower_closed, upper_closed) for band n (1-indexed)."""
    data = _edge_data(potential, float(max_energy))
    lo_i, hi_i = 2 * (n - 1), 2 * n - 1
    if n < 1 or hi_i >= len(data) or data[lo_i].energy > max_energy:
        raise RootNotBracketed(f"band {n} is not resolved below max_energy={max_energy:.6g}")
    lo, hi = data[lo_i], data[hi_i]
    return lo.energy, hi.energy, lo.closed, hi.closed


def count_bands(potential: PeriodicPotential, max_energy: float) -> int:
    data = _edge_data(potential, float(max_energy))
    n = 0
    while 2 * n + 1 < len(data) and data[2 * n].energy <= max_energy:
        n += 1
    return n


def fold_quasimomentum(k: float, period: float) -> float:
    """Fold into the Brillouin zone (-pi/p, pi/p]."""
    g = 2.0 * math.pi / period
    k = k - g * math.floor(k / g + 0.5)
    if k <= -g / 2 * (1.0 - 1e-12):
        k += g
    return k


def _solve_in_band(potential, n, kk, max_energy):
    """(E, Delta'(E)) for |k| = kk strictly inside (0, pi/p)."""
    p = potential.period
    lo, hi, _, _ = _band_bracket(potential, n, max_energy)
    target = 2.0 * math.cos(p * kk)

    def f(z):
        return _delta(potential, z, _TIGHT_TOL) - target

    pad = 1e-9 * (hi - lo)
    a, b = lo + pad, hi - pad
    if f(a) * f(b) > 0:
        a, b = lo, hi
        if f(a) * f(b) > 0:
            raise RootNotBracketed(
                f"Delta(E) = {target:.6g} not bracketed in band {n} = [{lo:.6g}, {hi:.6g}]"
            )
    energy = brentq(f, a, b, xtol=1e-13, rtol=_BRENTQ_RTOL)
    r = monodromy(potential, energy, *_TIGHT_TOL)
    if r.discriminant_derivative != 0.0:
        corr = (r.discriminant - target) / r.discriminant_derivative
        if abs(corr) < 1e-6 * (1.0 + abs(energy)):
            energy -= corr
            r = monodromy(potential, energy, *_TIGHT_TOL)
    return energy, r.discriminant_derivative


def _band_point(potential, n, kk, max_energy):
    """(E, v, Delta') at |k| = kk in [0, pi/p]; v is for +kk."""
    p = potential.period
    g_half = math.pi / p
    at_zero = kk < 1e-12 * g_half
    at_edge = abs(kk - g_half) < 1e-12 * g_half
    if not (at_zero or at_edge):
        energy, dprime = _solve_in_band(potential, n, kk, max_energy)
        return energy, -2.0 * p * math.sin(p * kk) / dprime, dprime

    # k = 0 is the +2 edge, k = pi/p the -2 edge; which end of the band that
    # is alternates with the band index.
    lo, hi, lo_closed, hi_closed = _band_bracket(potential, n, max_energy)
    want_low = (n % 2 == 1) == at_zero
    energy = lo if want_low else hi
    closed = lo_closed if want_low else hi_closed
    dprime = monodromy(potential, energy, *_TIGHT_TOL).discriminant_derivative
    if not closed:
        return energy, 0.0, dprime
    # closed gap: one-sided derivative limit from inside the zone
    dk = 1e-4 * g_half
    if at_zero:
        e1, _ = _solve_in_band(potential, n, dk, max_energy)
        e2, _ = _solve_in_band(potential, n, 2 * dk, max_energy)
        v = (4.0 * e1 - 3.0 * energy - e2) / (2.0 * dk)
    else:
        e1, _ = _solve_in_band(potential, n, g_half - dk, max_energy)
        e2, _ = _solve_in_band(potential, n, g_half - 2 * dk, max_energy)
        v = -(4.0 * e1 - 3.0 * energy - e2) / (2.0 * dk)
    return energy, v, dprime


def band_function(
    potential: PeriodicPotential,
    n: int,
    k: float,
    max_energy: float | None = None,
) -> tuple[float, float]:
    """Energy and group velocity of band n (1-indexed) at quasimomentum k."""
    if max_energy is None:
        max_energy = default_max_energy(potential)
    k = fold_quasimomentum(k, potential.period)
    energy, v, _ = _band_point(potential, n, abs(k), max_energy)
    return energy, v if k >= 0 else -v


@dataclass(frozen=True, eq=False)
class BandTable:
    """Band energies and velocities on a uniform Brillouin-zone grid."""

    potential: PeriodicPotential
    kgrid: np.ndarray  # K points in (-pi/p, pi/p]
    energies: np.ndarray  # (nbands, K)
    velocities: np.ndarray  # (nbands, K)
    discriminant_derivatives: np.ndarray  # (nbands, K), Delta'(E_n(k))
    edges: np.ndarray  # sorted, coincident for closed gaps
    edge_closed: np.ndarray  # bool per edge
    c2_hat: float
    max_energy: float

    @property
    def nbands(self) -> int:
        return self.energies.shape[0]

    @property
    def period(self) -> float:
        return self.potential.period


def zone_grid(period: float, kpoints: int) -> np.ndarray:
    """Uniform grid of K quasimomenta in (-pi/p, pi/p]; for even K it contains
    0, pi/p, and every +-k pair (matching the Floquet grid of an L=K box)."""
    j = np.arange(1, kpoints + 1)
    return -math.pi / period + 2.0 * math.pi * j / (period * kpoints)


def build_band_table(
    potential: PeriodicPotential,
    kpoints: int = 32,
    max_energy: float | None = None,
    nbands: int | None = None,
) -> BandTable:
    if max_energy is None:
        max_energy = default_max_energy(potential)
    if nbands is None:
        nbands = count_bands(potential, max_energy)
    if nbands < 1:
        raise RootNotBracketed(f"no bands below max_energy={max_energy:.6g}")
    if nbands > count_bands(potential, max_energy):
        raise RootNotBracketed(
            f"only {count_bands(potential, max_energy)} bands below {max_energy:.6g}"
        )
    p = potential.period
    kgrid = zone_grid(p, kpoints)
    energies = np.empty((nbands, kpoints))
    velocities = np.empty((nbands, kpoints))
    dprimes = np.empty((nbands, kpoints))

    # solve on the |k| half and mirror (E even, v odd in k)
    cache: dict[tuple[int, float], tuple[float, float, float]] = {}
    for n in range(1, nbands + 1):
        for j, k in enumerate(kgrid):
            key = (n, round(abs(k), 15))
            if key not in cache:
                cache[key] = _band_point(potential, n, abs(k), max_energy)
            e, v, dp = cache[key]
            energies[n - 1, j] = e
            velocities[n - 1, j] = v if k >= 0 else -v
            dprimes[n - 1, j] = dp

    data = _edge_data(potential, float(max_energy))
    edges = np.array([e.energy for e in data if e.energy <= max_energy])
    closed = np.array([e.closed for e in data if e.energy <= max_energy])
    sup_dprime = float(np.max(np.abs(dprimes)))
    for e in data:
        sup_dprime = max(sup_dprime, abs(_delta_prime(potential, e.energy, _TIGHT_TOL)))
    return BandTable(
        potential=potential,
        kgrid=kgrid,
        energies=energies,
        velocities=velocities,
        discriminant_derivatives=dprimes,
        edges=edges,
        edge_closed=closed,
        c2_hat=_empirical_c2(sup_dprime, p, potential.bound),
        max_energy=float(max_energy),
    )


def _empirical_c2(sup_dprime: float, period: float, bound: float) -> float:
    """Solve c * p^2 * exp(2 c sqrt(R) p) = sup|Delta'| for c (monotone in c)."""
    if sup_dprime <= 0:
        return 0.0
    if bound == 0.0:
        return sup_dprime / period**2

    def f(c):
        return c * period**2 * math.exp(2.0 * c * math.sqrt(bound) * period) - sup_dprime

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=_BRENTQ_RTOL)


def bad_set_bound(table: BandTable, epsilon: float) -> float:
    """The analytic comparison value 4 sqrt(C2 pi) exp(C2 sqrt(R) p) sqrt(eps)."""
    c2 = table.c2_hat
    r = table.potential.bound
    p = table.period
    return 4.0 * math.sqrt(c2 * math.pi) * math.exp(c2 * math.sqrt(r) * p) * math.sqrt(epsilon)


def bad_set_measure(table: BandTable, epsilon: float) -> float:
    """Lebesgue measure of {k : two distinct band energies within epsilon}.

    Works on the half zone [0, pi/p] (band functions are even), per band
    pair, interpolating the tabulated bands linearly between grid points.
    Monotonicity of each band inside a grid cell certifies a floor for the
    pair separation there, so cells safely above epsilon need no resolution;
    boundary cells of the below-epsilon set must have separation jumps below
    epsilon/4 or the grid is declared too coarse.  epsilon = 0 is the
    touching set, which has measure zero.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0.0:
        return 0.0
    p = table.period
    half = np.nonzero(table.kgrid >= -1e-15)[0]
    ks = table.kgrid[half]
    order = np.argsort(ks)
    ks = ks[order]
    bands = table.energies[:, half][:, order]

    intervals: list[tuple[float, float]] = []
    nb = bands.shape[0]
    npts = len(ks)
    for n in range(nb):
        for m in range(n + 1, nb):
            en, em = bands[n], bands[m]
            d = em - en  # positive: bands do not overlap
            # per-cell floor from band monotonicity between samples
            floor = np.minimum(em[:-1], em[1:]) - np.maximum(en[:-1], en[1:])
            below = d <= epsilon
            if not np.any(below):
                if np.any(floor <= epsilon):
                    raise GridTooCoarse(
                        f"bands ({n + 1},{m + 1}): separation may dip below "
                        f"eps={epsilon:.3g} between samples; refine the k-grid"
                    )
                continue
            i = 0
            while i < npts:
                if not below[i]:
                    i += 1
                    continue
                j = i
                while j + 1 < npts and below[j + 1]:
                    j += 1
                left = ks[i]
                if i > 0:
                    if not abs(d[i] - d[i - 1]) < epsilon / 4.0:
                        raise GridTooCoarse(
                            f"bands ({n + 1},{m + 1}): jump {abs(d[i] - d[i - 1]):.3g} "
                            f"at the set boundary >= eps/4 = {epsilon / 4:.3g}"
                        )
                    frac = (epsilon - d[i - 1]) / (d[i] - d[i - 1])
                    left = ks[i - 1] + frac * (ks[i] - ks[i - 1])
                right = ks[j]
                if j + 1 < npts:
                    if not abs(d[j + 1] - d[j]) < epsilon / 4.0:
                        raise GridTooCoarse(
                            f"bands ({n + 1},{m + 1}): jump {abs(d[j + 1] - d[j]):.3g} "
                            f"at the set boundary >= eps/4 = {epsilon / 4:.3g}"
                        )
                    frac = (epsilon - d[j]) / (d[j + 1] - d[j])
                    right = ks[j] + frac * (ks[j + 1] - ks[j])
                intervals.append((left, right))
                i = j + 1

    if not intervals:
        return 0.0
    intervals.sort()
    merged = [list(intervals[0])]
    for a, b in intervals[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    total = sum(b - a for a, b in merged)
    return min(2.0 * total, 2.0 * math.pi / p)


def holder_constant(table: BandTable) -> float:
    """Empirical c with |E_m(k2) - E_m(k1)| >= c (k2 - k1)^2 on the half zone."""
    half = np.nonzero(table.kgrid >= -1e-15)[0]
    ks = table.kgrid[half]
    order = np.argsort(ks)
    ks = ks[order]
    best = math.inf
    iu = np.triu_indices(len(ks), k=1)
    dk2 = (ks[None, :] - ks[:, None])[iu] ** 2
    for row in table.energies[:, half][:, order]:
        de = np.abs(row[None, :] - row[:, None])[iu]
        best = min(best, float(np.min(de / dk2)))
    return best


def velocity_identity_residual(table: BandTable) -> float:
    """Max over the table of |v Delta'(E) + 2 p sin(p k)| / (1 + |Delta'|)."""
    p = table.period
    resid = np.abs(
        table.velocities * table.discriminant_derivatives
        + 2.0 * p * np.sin(p * table.kgrid[None, :])
    )
    return float(np.max(resid / (1.0 + np.abs(table.discriminant_derivatives))))


def table_to_rows(table: BandTable):
    """CSV rows (band, k, energy, velocity)."""
    for n in range(table.nbands):
        for j, k in enumerate(table.kgrid):
            yield (n + 1, float(k), float(table.energies[n, j]), float(table.velocities[n, j]))
