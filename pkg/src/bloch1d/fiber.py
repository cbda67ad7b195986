"""Fiber operators H(k) = (D+k)^2 + V in a plane-wave basis, the discrete
Floquet transform, and the band-velocity multiplier Q.

The quasimomentum grid is tied to the box: L cells give exactly the L
quasimomenta 2 pi j / (L p) folded into the zone, which makes the transform a
finite unitary (Parseval holds to roundoff) and lets the multiplier be applied
without any interpolation in k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import bands as _bands
from .errors import CutoffTooSmall, IncommensurateBox
from .monodromy import monodromy
from .packets import WavePacket, spectral_tail_fraction
from .potential import PeriodicPotential

_CLUSTER_TOL = 1e-8  # relative energy gap treated as a degenerate pair


def default_cutoff(potential: PeriodicPotential, max_energy: float | None = None) -> int:
    if max_energy is None:
        max_energy = _bands.default_max_energy(potential)
    p = potential.period
    reach = max(max_energy + potential.bound, 0.0)
    return max(64, math.ceil(p * math.sqrt(reach) / math.pi) + 16)


def plane_wave_indices(cutoff: int) -> np.ndarray:
    return np.arange(-cutoff, cutoff + 1)


def fiber_matrix(potential: PeriodicPotential, k: float, cutoff: int) -> np.ndarray:
    """Dense real-symmetric H(k) in the basis exp(i 2 pi m x / p) / sqrt(p)."""
    g = 2.0 * math.pi / potential.period
    xi = g * plane_wave_indices(cutoff) + k
    h = np.diag(xi**2 + potential.coefficients[0])
    for j, a in enumerate(potential.coefficients[1:], start=1):
        if a != 0.0 and j <= 2 * cutoff:
            idx = np.arange(2 * cutoff + 1 - j)
            h[idx, idx + j] += 0.5 * a
            h[idx + j, idx] += 0.5 * a
    return h


@dataclass(eq=False)
class FiberEigensystem:
    """Retained eigenpairs of the truncated fiber operator at one k.

    The top quarter of the spectrum of the truncated matrix is discarded as a
    basis-boundary safety margin; ``vectors`` columns are plane-wave
    coefficients for m = -cutoff..cutoff.
    """

    quasimomentum: float
    period: float
    cutoff: int
    energies: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    @property
    def retained(self) -> int:
        return self.energies.size


def fiber_eigensystem(
    potential: PeriodicPotential, k: float, cutoff: int | None = None
) -> FiberEigensystem:
    if cutoff is None:
        cutoff = default_cutoff(potential)
    if cutoff < 1:
        raise CutoffTooSmall(f"cutoff must be >= 1, got {cutoff}")
    k = _bands.fold_quasimomentum(k, potential.period)
    h = fiber_matrix(potential, k, cutoff)
    energies, vectors = np.linalg.eigh(h)
    dim = 2 * cutoff + 1
    keep = dim - dim // 4
    energies, vectors = energies[:keep], vectors[:, :keep]
    residuals = np.linalg.norm(h @ vectors - vectors * energies[None, :], axis=0)
    return FiberEigensystem(k, potential.period, cutoff, energies, vectors, residuals)


def _velocity_clusters(energies: np.ndarray, resolution: float):
    """Consecutive index groups whose energy splittings are unresolved."""
    groups = []
    i = 0
    n = energies.size
    while i < n:
        j = i
        while j + 1 < n and energies[j + 1] - energies[j] <= max(
            _CLUSTER_TOL * (1.0 + abs(energies[j])), resolution
        ):
            j += 1
        groups.append((i, j + 1))
        i = j + 1
    return groups


def band_velocities(
    es: FiberEigensystem, gap_resolution: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Group velocities dE_n/dk and velocity-adapted eigenvectors.

    For simple eigenvalues this is the diagonal of 2(D+k) in the eigenbasis;
    inside a degenerate cluster the projected velocity operator is
    diagonalized, which selects the branch vectors through closed gaps.
    ``gap_resolution`` extends the cluster rule to splittings a finite-horizon
    experiment cannot resolve (Rabi time beyond ~1/gap): on a commensurate box
    the quasimomentum grid lands exactly on the Bragg points of every nested
    period, and without the rotation those isolated modes would be assigned
    the hybridized near-zero velocities instead of the crossing branches.
    """
    g = 2.0 * math.pi / es.period
    xi = g * plane_wave_indices(es.cutoff) + es.quasimomentum
    vels = np.empty(es.retained)
    vectors = es.vectors.copy()
    for a, b in _velocity_clusters(es.energies, gap_resolution):
        block = es.vectors[:, a:b]
        w = block.T @ (2.0 * xi[:, None] * block)
        if b - a == 1:
            vels[a] = w[0, 0]
        else:
            wvals, wvecs = np.linalg.eigh(0.5 * (w + w.T))
            vels[a:b] = wvals
            vectors[:, a:b] = block @ wvecs
    return vels, vectors


@lru_cache(maxsize=16)
def _eigen_grid(potential: PeriodicPotential, cells: int, cutoff: int, gap_resolution: float):
    """Velocity-adapted eigensystems on the L-point box quasimomentum grid."""
    p = potential.period
    ks = [_bands.fold_quasimomentum(2.0 * math.pi * j / (cells * p), p) for j in range(cells)]
    out = []
    for k in ks:
        es = fiber_eigensystem(potential, k, cutoff)
        vels, vecs = band_velocities(es, gap_resolution)
        out.append((es.quasimomentum, es.energies, vels, vecs))
    return tuple(out)


@dataclass(eq=False)
class FloquetField:
    """Amplitudes U psi(k_j, q_i) on the product grid of box quasimomenta and
    one-cell positions."""

    period: float
    start: float
    cells: int
    samples_per_cell: int
    quasimomenta: np.ndarray  # (L,)
    values: np.ndarray  # (L, m)

    def norm(self) -> float:
        h = self.period / self.samples_per_cell
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * h / self.cells))


def floquet(psi: WavePacket, period: float | None = None) -> FloquetField:
    """Discrete Floquet transform; exact unitary from box to (k, q) grid."""
    p = psi.period if period is None else period
    cells, m = psi.cells_for(p)
    arr = psi.values.reshape(cells, m)
    rows = np.fft.fft(arr, axis=0)
    h = p / m
    js = np.arange(cells)
    ks = np.array(
        [_bands.fold_quasimomentum(2.0 * math.pi * j / (cells * p), p) for j in js]
    )
    q = psi.start + h * np.arange(m)
    values = np.exp(-1j * np.outer(ks, q)) * rows
    return FloquetField(p, psi.start, cells, m, ks, values)


def inverse_floquet(field: FloquetField) -> WavePacket:
    q = field.start + (field.period / field.samples_per_cell) * np.arange(field.samples_per_cell)
    rows = field.values * np.exp(1j * np.outer(field.quasimomenta, q))
    arr = np.fft.ifft(rows, axis=0)
    return WavePacket(
        field.start, field.period, field.cells, field.samples_per_cell, arr.reshape(-1)
    )


def _box_coefficients(psi: WavePacket):
    """Coefficients of psi on orthonormal box modes exp(i xi x)/sqrt(Lp)."""
    n = psi.size
    lp = psi.box_length
    qt = np.fft.fftfreq(n, d=1.0 / n).astype(int)  # signed mode numbers
    xi = 2.0 * math.pi * qt / lp
    coeff = (psi.h / math.sqrt(lp)) * np.exp(-1j * xi * psi.start) * np.fft.fft(psi.values)
    return qt, xi, coeff


def _from_box_coefficients(psi: WavePacket, coeff: np.ndarray) -> WavePacket:
    n = psi.size
    lp = psi.box_length
    qt = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    xi = 2.0 * math.pi * qt / lp
    spec = coeff * np.exp(1j * xi * psi.start) * (math.sqrt(lp) / psi.h)
    return psi.with_values(np.fft.ifft(spec))


def _fiber_coefficient_table(psi: WavePacket, period: float):
    """Reshuffle box coefficients into per-quasimomentum plane-wave columns.

    Box mode xi splits uniquely as k_j + G m; the column for k_j holds the
    cell plane-wave coefficients of U psi(k_j, .), scaled by sqrt(L).
    """
    cells, mcell = psi.cells_for(period)
    qt, _, coeff = _box_coefficients(psi)
    jt = qt % cells
    jt = np.where(jt > cells // 2, jt - cells, jt)  # folded row index in (-L/2, L/2]
    ms = (qt - jt) // cells
    return cells, mcell, jt, ms, coeff * math.sqrt(cells)


def apply_q(
    potential: PeriodicPotential,
    psi: WavePacket,
    bands: "_bands.BandTable | None" = None,
    cutoff: int | None = None,
    band_weight_tol: float = 1e-10,
    gap_resolution: float = 1e-2,
) -> WavePacket:
    """Asymptotic-velocity multiplier: expand each fiber of U psi in the H(k)
    eigenbasis, multiply band n by its group velocity at k, and resum.

    The band sum per fiber is truncated once the cumulative spectral weight
    reaches 1 - band_weight_tol.  With a BandTable the velocities come from
    the discriminant route (cross-check mode); otherwise they come from the
    fiber eigensystems themselves.  Gaps thinner than ``gap_resolution`` are
    treated as dynamically closed (multiplier follows the crossing branches),
    matching box dynamics over horizons t below ~1/gap_resolution.
    """
    p = potential.period
    cells, mcell, jt, ms, d = _fiber_coefficient_table(psi, p)
    if cutoff is None:
        cutoff = max(default_cutoff(potential), mcell // 2 + 8)
    if cutoff < (mcell + 1) // 2:
        raise CutoffTooSmall(
            f"cutoff {cutoff} cannot hold the {mcell} cell frequencies"
        )
    grid = _eigen_grid(potential, cells, cutoff, float(gap_resolution))
    out = np.zeros_like(d)
    grand_total = float(np.sum(np.abs(d) ** 2))
    if grand_total == 0.0:
        return psi.with_values(np.zeros_like(psi.values))
    for j in range(cells):
        jsigned = j if j <= cells // 2 else j - cells
        sel = np.nonzero(jt == jsigned)[0]
        # sel indexes the box modes living in fiber j
        k, energies, vels, vecs = grid[j]
        dvec = np.zeros(2 * cutoff + 1, dtype=complex)
        dvec[ms[sel] + cutoff] = d[sel]
        total = float(np.sum(np.abs(dvec) ** 2))
        if total <= 1e-30 * grand_total:
            continue
        b = vecs.T @ dvec
        weights = np.abs(b) ** 2
        cum = np.cumsum(weights)
        need = (1.0 - band_weight_tol) * total
        if cum[-1] < need:
            raise CutoffTooSmall(
                f"retained bands hold {cum[-1] / total:.12f} of the fiber mass at k={k:.4g}"
            )
        # the band sum effectively stops at n_cut; the remaining retained
        # bands carry < band_weight_tol of the mass and are kept so the
        # operator stays exactly linear
        n_cut = min(int(np.searchsorted(cum, need)) + 1, weights.size)
        use = vels
        if bands is not None:
            use = vels.copy()
            use[:n_cut] = _discriminant_velocities(
                potential, bands, k, energies[:n_cut], vels[:n_cut], weights[:n_cut], total
            )
        dq = vecs @ (use * b)
        back = dq[ms[sel] + cutoff]
        leak = np.sum(np.abs(dq) ** 2) - np.sum(np.abs(back) ** 2)
        if leak > 1e-9 * grand_total:
            raise CutoffTooSmall(
                f"Q psi leaks {leak / grand_total:.3g} of the packet mass past the "
                f"cell Nyquist at k={k:.4g}"
            )
        out[sel] = back / math.sqrt(cells)
    return _from_box_coefficients(psi, out)


def _discriminant_velocities(potential, table, k, energies, fiber_vels, weights, total):
    """Velocities from the discriminant identity at the fiber energies.

    Falls back to the fiber value for negligible-weight or edge/degenerate
    entries, where the 0/0 form of the identity is not usable.
    """
    p = potential.period
    out = np.array(fiber_vels, dtype=float)
    sinpk = math.sin(p * k)
    if abs(sinpk) < 1e-9:
        return out
    for i, e in enumerate(energies):
        if weights[i] <= 1e-12 * total or e > table.max_energy:
            continue
        dprime = monodromy(potential, e).discriminant_derivative
        if dprime != 0.0:
            out[i] = -2.0 * p * sinpk / dprime
    return out


def m1_norm(
    potential: PeriodicPotential,
    k: float,
    r: float,
    cutoff: int | None = None,
    energy_cap: float | None = None,
) -> float:
    """Operator norm of (H(k)+2R)^(1/2) (D+k) (H(k)+2R)^(-1) in the truncated
    basis, restricted to the reliable subspace E <= energy_cap.

    The cap defaults to a value fixed by the default cutoff policy, so
    enlarging ``cutoff`` refines the retained eigenpairs instead of extending
    the subspace (the norm is then stable under cutoff doubling).
    """
    if r < potential.bound * (1.0 - 1e-12):
        raise ValueError(f"R={r} is below the potential bound {potential.bound}")
    g = 2.0 * math.pi / potential.period
    m_default = default_cutoff(potential)
    if cutoff is None:
        cutoff = m_default
    if energy_cap is None:
        energy_cap = (g * m_default / 2.0) ** 2
    es = fiber_eigensystem(potential, k, cutoff)
    keep = es.energies <= energy_cap
    if not np.any(keep):
        raise CutoffTooSmall(f"no eigenpairs below the energy cap {energy_cap:.4g}")
    energies = es.energies[keep]
    vecs = es.vectors[:, keep]
    xi = g * plane_wave_indices(es.cutoff) + es.quasimomentum
    b = vecs.T @ (xi[:, None] * vecs)
    a = np.sqrt(energies + 2.0 * r)[:, None] * b / (energies + 2.0 * r)[None, :]
    return float(np.linalg.norm(a, 2))


@dataclass(eq=False)
class FiberBound:
    """sup_k of ||(H(k)+2R) U psi(k,.)|| with the per-k profile."""

    value: float
    quasimomenta: np.ndarray
    norms: np.ndarray

    @property
    def flatness(self) -> float:
        """Relative variation of the profile across the zone."""
        top = float(np.max(self.norms))
        return (top - float(np.min(self.norms))) / top if top > 0 else 0.0


def fiber_uniform_bound(
    potential: PeriodicPotential,
    psi: WavePacket,
    r: float,
    cutoff: int | None = None,
) -> FiberBound:
    if psi.norm() == 0.0:
        cells, _ = psi.cells_for(potential.period)
        zeros = np.zeros(cells)
        return FiberBound(0.0, np.zeros(cells), zeros)
    tail = spectral_tail_fraction(psi)
    if tail > 1e-10:
        raise ValueError(
            f"packet is not smooth on this grid: spectral tail fraction {tail:.3g} > 1e-10"
        )
    p = potential.period
    cells, mcell, jt, ms, d = _fiber_coefficient_table(psi, p)
    nharm = len(potential.coefficients) - 1
    if cutoff is None:
        cutoff = max(default_cutoff(potential), mcell // 2 + nharm + 8)
    if cutoff < mcell // 2 + nharm:
        raise CutoffTooSmall(
            f"cutoff {cutoff} cannot hold the coupled cell frequencies"
        )
    norms = np.zeros(cells)
    ks = np.zeros(cells)
    for j in range(cells):
        jsigned = j if j <= cells // 2 else j - cells
        sel = np.nonzero(jt == jsigned)[0]
        k = _bands.fold_quasimomentum(2.0 * math.pi * j / (cells * p), p)
        ks[j] = k
        dvec = np.zeros(2 * cutoff + 1, dtype=complex)
        dvec[ms[sel] + cutoff] = d[sel]
        h = fiber_matrix(potential, k, cutoff)
        y = h @ dvec + 2.0 * r * dvec
        norms[j] = np.linalg.norm(y)
    order = np.argsort(ks)
    return FiberBound(float(np.max(norms)), ks[order], norms[order])
