"""Wave packets sampled on a box of whole potential periods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncommensurateBox


@dataclass(eq=False)
class WavePacket:
    """Complex samples on a box of ``cells`` periods, ``samples_per_cell`` each.

    The box is [start, start + cells * period); value semantics (operations
    return new packets).
    """

    start: float
    period: float
    cells: int
    samples_per_cell: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.size != self.cells * self.samples_per_cell:
            raise ValueError(
                f"{self.cells} cells x {self.samples_per_cell} samples needs "
                f"{self.cells * self.samples_per_cell} values, got {self.values.size}"
            )
        if self.period <= 0 or self.cells < 1 or self.samples_per_cell < 1:
            raise ValueError("period, cells, samples_per_cell must be positive")

    @property
    def h(self) -> float:
        return self.period / self.samples_per_cell

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def box_length(self) -> float:
        return self.cells * self.period

    def positions(self) -> np.ndarray:
        return self.start + self.h * np.arange(self.size)

    def norm(self) -> float:
        return float(np.sqrt(self.h * np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values: np.ndarray) -> "WavePacket":
        return WavePacket(self.start, self.period, self.cells, self.samples_per_cell, values)

    def copy(self) -> "WavePacket":
        return self.with_values(self.values.copy())

    def cells_for(self, period: float) -> tuple[int, int]:
        """Cell decomposition (L, m) of the same box for another period."""
        ratio = self.box_length / period
        cells = round(ratio)
        if cells < 1 or abs(ratio - cells) > 1e-9 * max(1.0, abs(ratio)):
            raise IncommensurateBox(
                f"box length {self.box_length:.6g} is not a whole number of periods {period:.6g}"
            )
        if self.size % cells:
            raise IncommensurateBox(
                f"{self.size} samples do not split into {cells} cells"
            )
        return cells, self.size // cells


def gaussian_packet(
    center: float,
    width: float,
    wavenumber: float,
    period: float,
    cells: int,
    samples_per_cell: int,
    start: float | None = None,
) -> WavePacket:
    """Normalized Gaussian ``exp(-(x-c)^2 / (2 width^2) + i k (x-c))``.

    By default the box is placed symmetrically around the center.
    """
    if start is None:
        start = center - 0.5 * cells * period
    h = period / samples_per_cell
    x = start + h * np.arange(cells * samples_per_cell)
    values = np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * wavenumber * (x - center))
    psi = WavePacket(start, period, cells, samples_per_cell, values)
    return psi.with_values(values / psi.norm())


def center_of_mass(psi: WavePacket) -> float:
    w = np.abs(psi.values) ** 2
    total = np.sum(w)
    if total == 0:
        return psi.start + 0.5 * psi.box_length
    return float(np.sum(psi.positions() * w) / total)


def boundary_mass_fraction(psi: WavePacket, fraction: float = 0.05) -> float:
    """Mass fraction in the outermost ``fraction`` of the box (both ends)."""
    n_edge = max(1, int(round(0.5 * fraction * psi.size)))
    w = np.abs(psi.values) ** 2
    total = np.sum(w)
    if total == 0:
        return 0.0
    return float((np.sum(w[:n_edge]) + np.sum(w[-n_edge:])) / total)


def decay_constant(psi: WavePacket, s: float = 4.0) -> float:
    """Max of |psi(x)| (1 + |x - center|^{s/2}) over the grid, the empirical
    constant of the pointwise decay estimate."""
    x = psi.positions() - center_of_mass(psi)
    return float(np.max(np.abs(psi.values) * (1.0 + np.abs(x) ** (s / 2.0))))


def spectral_tail_fraction(psi: WavePacket, fraction: float = 0.1) -> float:
    """Mass fraction at the top ``fraction`` of box wavenumbers (smoothness proxy)."""
    spec = np.abs(np.fft.fft(psi.values)) ** 2
    xi = np.fft.fftfreq(psi.size)
    cut = 0.5 * (1.0 - fraction)
    tail = np.sum(spec[np.abs(xi) >= cut])
    total = np.sum(spec)
    return float(tail / total) if total > 0 else 0.0
