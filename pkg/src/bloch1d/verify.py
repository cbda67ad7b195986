"""Fast invariant suite behind the ``verify`` CLI command.

Each check returns (name, passed, detail); the whole suite is built to run in
well under a minute so it can gate batch jobs.
"""

from __future__ import annotations

import math

import numpy as np

from .bands import build_band_table, band_edges, velocity_identity_residual
from .evolve import evolve, kinetic_derivative
from .fiber import apply_q, fiber_eigensystem, floquet, inverse_floquet, m1_norm
from .monodromy import free_discriminant, monodromy
from .packets import WavePacket, gaussian_packet
from .potential import PeriodicPotential, zero_potential

TEST_POTENTIALS: tuple[PeriodicPotential, ...] = (
    zero_potential(math.pi),
    PeriodicPotential(2 * math.pi, (0.0, 2.0)),  # 2 cos(x)
    PeriodicPotential(2 * math.pi, (0.0, 0.5, 1.0)),  # 0.5 cos(x) + cos(2x)
    PeriodicPotential(math.pi, (0.0, 1.5)),  # 1.5 cos(2x)
    PeriodicPotential(3.0, (0.4, 0.8, -0.7, 0.3)),
)


def check_determinant(grid_points: int = 40):
    worst = 0.0
    for pot in TEST_POTENTIALS:
        zs = np.linspace(-pot.bound - 1.0, 25.0, grid_points)
        for z in zs:
            worst = max(worst, monodromy(pot, z).det_residual)
    return "determinant-identity", worst <= 1e-10, f"max residual {worst:.3e}"


def check_free_discriminant():
    pot = zero_potential(math.pi)
    zs = np.linspace(0.07, 60.0, 41)
    worst = max(
        abs(monodromy(pot, z).discriminant - free_discriminant(math.pi, z)) for z in zs
    )
    return "free-discriminant", worst <= 1e-9, f"max |Delta - 2cos(p sqrt z)| = {worst:.3e}"


def check_floquet_unitarity(seed: int = 0):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=256) + 1j * rng.normal(size=256)
    psi = WavePacket(-4.0, 2 * math.pi, 8, 32, vals)
    fld = floquet(psi)
    parseval = abs(fld.norm() - psi.norm()) / psi.norm()
    back = inverse_floquet(fld)
    rt = math.sqrt(psi.h * np.sum(np.abs(back.values - psi.values) ** 2)) / psi.norm()
    ok = parseval <= 1e-12 and rt <= 1e-12
    return "floquet-unitarity", ok, f"parseval {parseval:.2e}, roundtrip {rt:.2e}"


def check_velocity_identity():
    pot = TEST_POTENTIALS[1]
    table = build_band_table(pot, kpoints=8, max_energy=8.0)
    resid = velocity_identity_residual(table)
    return "velocity-identity", resid <= 1e-8, f"max residual {resid:.3e}"


def check_fiber_vs_discriminant():
    from .bands import band_function

    worst = 0.0
    for pot in (TEST_POTENTIALS[0], TEST_POTENTIALS[1]):
        for k in (0.15, 0.35):
            es = fiber_eigensystem(pot, k)
            for n in (1, 2, 3):
                e_band, _ = band_function(pot, n, k, max_energy=14.0)
                worst = max(worst, abs(es.energies[n - 1] - e_band) / max(1.0, abs(e_band)))
    return "fiber-vs-discriminant", worst <= 1e-7, f"max relative gap {worst:.3e}"


def check_m1_bound():
    worst_margin = math.inf
    ok = True
    for pot, r in ((TEST_POTENTIALS[0], 1.0), (TEST_POTENTIALS[1], 2.0)):
        for k in np.linspace(-math.pi / pot.period, math.pi / pot.period, 7):
            val = m1_norm(pot, k, r)
            margin = 1.0 / r + 16.0 - val**2
            worst_margin = min(worst_margin, margin)
            ok = ok and margin >= 0.0
    return "relative-bound-m1", ok, f"min margin {worst_margin:.3e}"


def check_free_q_oracle():
    pot = zero_potential(2 * math.pi)
    psi = gaussian_packet(0.0, 3.0, 1.2, 2 * math.pi, 32, 16)
    q = apply_q(pot, psi)
    xi = 2 * np.pi * np.fft.fftfreq(psi.size, d=psi.h)
    ref = np.fft.ifft(2.0 * xi * np.fft.fft(psi.values))
    err = math.sqrt(psi.h * np.sum(np.abs(q.values - ref) ** 2)) / psi.norm()
    return "free-q-multiplier", err <= 1e-6, f"relative error {err:.3e}"


def check_evolution_unitarity():
    pot = TEST_POTENTIALS[1]
    psi = gaussian_packet(0.0, 2.0, 1.0, 2 * math.pi, 32, 16)
    out = evolve(pot, psi, 3.0)
    drift = abs(out.norm() - psi.norm())
    back = evolve(pot, out, -3.0, check_boundary=False)
    rev = math.sqrt(psi.h * np.sum(np.abs(back.values - psi.values) ** 2))
    ok = drift <= 1e-11 and rev <= 1e-9
    return "evolution-unitarity", ok, f"norm drift {drift:.2e}, reversal {rev:.2e}"


def check_propagation_estimate(seed: int = 0):
    rng = np.random.default_rng(seed + 1)
    psi = gaussian_packet(0.0, 2.0, 0.5, 2 * math.pi, 32, 16)
    ok = True
    worst = -math.inf
    for _ in range(2):
        v1 = PeriodicPotential(2 * math.pi, (0.0, *rng.uniform(-0.8, 0.8, 2)))
        v2 = PeriodicPotential(2 * math.pi, (0.0, *rng.uniform(-0.8, 0.8, 2)))
        t = 5.0
        a = evolve(v1, psi, t)
        b = evolve(v2, psi, t)
        x = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
        sup = float(np.max(np.abs(v1(x) - v2(x))))
        lhs = math.sqrt(psi.h * np.sum(np.abs(a.values - b.values) ** 2))
        slack = lhs - t * sup * psi.norm()
        worst = max(worst, slack)
        ok = ok and slack <= 1e-6
    return "propagation-estimate", ok, f"max slack {worst:.3e}"


def check_free_edges():
    edges = band_edges(zero_potential(math.pi), 10.0)
    ok = np.allclose(edges, [0, 1, 1, 4, 4, 9, 9], atol=1e-8)
    return "free-band-edges", bool(ok), f"edges {np.round(edges, 9).tolist()}"


def check_free_heisenberg():
    pot = zero_potential(2 * math.pi)
    psi = gaussian_packet(0.0, 2.0, 0.8, 2 * math.pi, 32, 16)
    from .evolve import heisenberg_position
    from .packets import center_of_mass

    t = 2.0
    out = heisenberg_position(pot, psi, t)
    c = center_of_mass(psi)
    d = kinetic_derivative(psi)
    ref = (psi.positions() - c) * psi.values + 2 * t * d.values
    err = math.sqrt(psi.h * np.sum(np.abs(out.values - ref) ** 2))
    return "free-heisenberg", err <= 1e-7, f"error {err:.3e}"


ALL_CHECKS = (
    check_determinant,
    check_free_discriminant,
    check_free_edges,
    check_velocity_identity,
    check_fiber_vs_discriminant,
    check_floquet_unitarity,
    check_m1_bound,
    check_free_q_oracle,
    check_evolution_unitarity,
    check_free_heisenberg,
    check_propagation_estimate,
)


def run_all(seed: int = 0) -> list[tuple[str, bool, str]]:
    results = []
    for fn in ALL_CHECKS:
        if fn in (check_floquet_unitarity, check_propagation_estimate):
            results.append(fn(seed))
        else:
            results.append(fn())
    return results
