"""One-period transfer matrix of the Hill equation and its discriminant.

``monodromy`` integrates the Neumann and Dirichlet solutions of
``-u'' + V u = z u`` over one period from ``u1(0)=u2'(0)=1``,
``u1'(0)=u2(0)=0``; the energy derivative of the discriminant is obtained
from the jointly integrated variational system rather than from finite
differences, so downstream velocity checks stay independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._hill import STATUS_OK, hill_endpoint
from .configio import format_float
from .errors import StepUnderflow
from .potential import PeriodicPotential

# Tighter than the 1e-12/1e-10 one might first reach for: the determinant
# identity must hold to 1e-10 after integrating across energies up to ~160,
# which needs roughly two extra digits of local tolerance.
DEFAULT_ATOL = 1e-14
DEFAULT_RTOL = 1e-12


@dataclass(frozen=True)
class MonodromyResult:
    """Transfer-matrix data at one energy.

    ``det_residual`` is |det M - 1| normalized by the squared magnitude of
    the largest entry; below the spectrum the entries grow like cosh and the
    raw residual is dominated by benign cancellation.
    """

    energy: float
    m11: float  # u1(p)
    m12: float  # u2(p)
    m21: float  # u1'(p)
    m22: float  # u2'(p)
    discriminant: float
    discriminant_derivative: float
    det_residual: float
    steps: int

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def in_spectrum(self) -> bool:
        return abs(self.discriminant) <= 2.0


def step_cap(potential: PeriodicPotential, z: float) -> float:
    """Step bound resolving the local oscillation/growth rate at energy z."""
    return potential.period / (32.0 * (1.0 + np.sqrt(abs(z) + potential.bound)))


def monodromy(
    potential: PeriodicPotential,
    z: float,
    atol: float = DEFAULT_ATOL,
    rtol: float = DEFAULT_RTOL,
) -> MonodromyResult:
    coeffs = np.asarray(potential.coefficients, dtype=float)
    y, status, steps = hill_endpoint(z, coeffs, potential.period, step_cap(potential, z), atol, rtol)
    if status != STATUS_OK:
        raise StepUnderflow(f"adaptive step underflow at z={z} for period {potential.period}")
    det = y[0] * y[3] - y[2] * y[1]
    scale = max(1.0, max(abs(y[0]), abs(y[1]), abs(y[2]), abs(y[3])) ** 2)
    return MonodromyResult(
        energy=float(z),
        m11=y[0],
        m12=y[2],
        m21=y[1],
        m22=y[3],
        discriminant=y[0] + y[3],
        discriminant_derivative=y[4] + y[7],
        det_residual=abs(det - 1.0) / scale,
        steps=int(steps),
    )


def discriminant(potential: PeriodicPotential, z: float) -> float:
    return monodromy(potential, z).discriminant


def discriminant_scan(potential: PeriodicPotential, z_grid) -> list[MonodromyResult]:
    """Monodromy at each grid energy; the grid must be strictly increasing."""
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size > 1 and not np.all(np.diff(z_grid) > 0):
        raise ValueError("energy grid must be strictly increasing")
    return [monodromy(potential, z) for z in z_grid]


def scan_to_csv(results: list[MonodromyResult], path) -> None:
    lines = ["z,discriminant,discriminant_derivative,det_residual"]
    for r in results:
        lines.append(
            ",".join(
                format_float(v)
                for v in (r.energy, r.discriminant, r.discriminant_derivative, r.det_residual)
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def free_discriminant(period: float, z) -> np.ndarray:
    """Closed form for V = 0: 2 cos(p sqrt(z)), continued by cosh for z < 0."""
    z = np.asarray(z, dtype=float)
    out = np.where(
        z >= 0.0,
        2.0 * np.cos(period * np.sqrt(np.abs(z))),
        2.0 * np.cosh(period * np.sqrt(np.abs(z))),
    )
    return out if out.ndim else float(out)
