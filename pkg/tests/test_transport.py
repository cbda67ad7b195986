import json
import math

import numpy as np
import pytest

from bloch1d import (
    DepthExceeded,
    GridTooCoarse,
    WindowTooShort,
    cascade,
    default_family,
    ec_build,
    floquet_mass_lower_bound,
    gaussian_packet,
    moments,
    periodic_convergence,
    time_schedule,
    transport_exponents,
)
from bloch1d.evolve import MomentSeries
from bloch1d.packets import WavePacket
from bloch1d.transport import fit_transport_exponent


def test_periodic_convergence_free_exact(free_2pi):
    psi = gaussian_packet(0.0, 3.0, 0.8, 2 * math.pi, 64, 16)
    series = periodic_convergence(free_2pi, psi, np.geomspace(4.0, 40.0, 5))
    # free case saturates the ||X psi|| / t term exactly
    c = psi.positions() - np.sum(psi.positions() * np.abs(psi.values) ** 2) * psi.h
    x_norm = math.sqrt(psi.h * np.sum(np.abs(c * psi.values) ** 2))
    assert np.allclose(series.errors, x_norm / series.times, rtol=1e-6)
    assert series.decay_exponent == pytest.approx(1.0, abs=1e-4)


def test_periodic_convergence_rejects_t0(free_2pi):
    psi = gaussian_packet(0.0, 2.0, 0.8, 2 * math.pi, 16, 16)
    with pytest.raises(ValueError):
        periodic_convergence(free_2pi, psi, [0.0, 1.0])


def test_periodic_convergence_mathieu_decreases(mathieu):
    psi = gaussian_packet(0.0, 3.0, 1.3, 2 * math.pi, 144, 16)
    series = periodic_convergence(mathieu, psi, np.geomspace(4.0, 40.0, 5))
    assert series.errors[-1] < series.errors[0]
    assert not np.any(series.boundary_flags)


def test_time_schedule_monotone():
    fam = default_family()
    sched = time_schedule(fam, c1=1.0, kappa=4.5)
    assert np.all(np.diff(sched.raw_times) > 0)
    assert not np.any(sched.clipped)


def test_time_schedule_rejects_small_kappa():
    fam = default_family()
    with pytest.raises(ValueError):
        time_schedule(fam, c1=1.0, kappa=4.0)


def test_time_schedule_clipping_flag():
    fam = default_family()
    sched = time_schedule(fam, c1=1.0, kappa=4.5, horizon=200.0)
    assert np.any(sched.clipped)
    assert np.all(sched.times <= 200.0)
    raw = sched.raw_times
    assert np.all(sched.times[~sched.clipped] == raw[~sched.clipped])


@pytest.fixture(scope="module")
def cascade_packet():
    fam = default_family()  # periods pi .. 8 pi
    # box of 32 deepest-period cells, fine enough for xi up to 8
    return fam, gaussian_packet(0.0, 4.0, 1.0, fam.periods[-1], 32, 64)


def test_floquet_mass_bound_deep_levels(cascade_packet):
    fam, psi = cascade_packet
    for n in (2, 3):
        assert floquet_mass_lower_bound(fam, psi, n) >= 1.0


def test_floquet_mass_bound_reports_small_levels(cascade_packet):
    fam, psi = cascade_packet
    ratio = floquet_mass_lower_bound(fam, psi, 0)
    assert ratio >= 0.0


def test_floquet_mass_bound_rejects_zero(cascade_packet):
    fam, psi = cascade_packet
    zero = psi.with_values(np.zeros_like(psi.values))
    with pytest.raises(ValueError):
        floquet_mass_lower_bound(fam, zero, 2)


def test_floquet_mass_bound_grid_too_coarse():
    fam = default_family()
    psi = gaussian_packet(0.0, 2.0, 1.0, fam.periods[-1], 8, 32)
    with pytest.raises(GridTooCoarse):
        floquet_mass_lower_bound(fam, psi, 3)


def test_transport_exponents_free_ballistic(free_2pi):
    psi = gaussian_packet(-150.0, 3.0, 0.8, 2 * math.pi, 160, 16, start=-652.0)
    series = moments(free_2pi, psi, np.geomspace(10.0, 100.0, 9))
    assert not np.any(series.boundary_flags)
    bm, bp = transport_exponents(series, (10.0, 100.0))
    assert bm == pytest.approx(1.0, abs=0.02)
    assert bp == pytest.approx(1.0, abs=0.02)
    assert fit_transport_exponent(series, (10.0, 100.0)) == pytest.approx(1.0, abs=0.02)


def test_transport_exponents_constant_series():
    times = np.geomspace(1.0, 20.0, 8)
    ones = np.ones_like(times)
    series = MomentSeries(times, ones, ones, ones, ones, np.zeros(8, dtype=bool), 1.0, 1.0)
    bm, bp = transport_exponents(series, (1.0, 20.0))
    assert bm == 0.0 and bp == 0.0


def test_transport_exponents_window_too_short(free_2pi):
    psi = gaussian_packet(0.0, 2.0, 0.8, 2 * math.pi, 32, 16)
    series = moments(free_2pi, psi, np.linspace(1.0, 5.0, 5))
    with pytest.raises(WindowTooShort):
        transport_exponents(series, (1.0, 5.0))


def test_cascade_report(cascade_packet):
    fam, psi = cascade_packet
    report = cascade(fam, psi, horizon=40.0)
    diffs = report.cauchy_differences
    assert diffs.size == 3
    assert np.all(np.diff(diffs) < 0)
    assert report.q_nonzero
    assert report.q_norms[-1] - report.tail_bound > 0
    assert 0.9 <= report.beta_fit <= 1.1
    assert np.all(report.mass_ratios[-2:] >= 1.0)
    assert report.invariant_failures() == []
    blob = json.dumps(report.to_json_dict())
    assert json.loads(blob)["q_nonzero"] is True


def test_cascade_single_level_free():
    fam = ec_build(2 * math.pi, [2], 0.4, [0.0, 0.0])
    psi = gaussian_packet(0.0, 3.0, 1.2, fam.periods[-1], 32, 32)
    report = cascade(fam, psi, depth=0, horizon=20.0)
    # V_0 = 0: Q_0 psi = 2 D psi
    xi = 2 * np.pi * np.fft.fftfreq(psi.size, d=psi.h)
    q_free = psi.with_values(np.fft.ifft(2.0 * xi * np.fft.fft(psi.values)))
    assert report.q_norms[0] == pytest.approx(q_free.norm(), rel=1e-9)
    assert report.q_nonzero


def test_cascade_zero_packet(cascade_packet):
    fam, psi = cascade_packet
    zero = psi.with_values(np.zeros_like(psi.values))
    report = cascade(fam, zero, horizon=40.0)
    assert np.all(report.q_norms == 0)
    assert not report.q_nonzero
    assert report.invariant_failures() == []


def test_cascade_depth_exceeded(cascade_packet):
    fam, psi = cascade_packet
    with pytest.raises(DepthExceeded):
        cascade(fam, psi, depth=7, horizon=40.0)


def test_cascade_two_level_difference_scale():
    # || Q_1 psi - Q_0 psi || at the sqrt(||W_1||) scale of the
    # quadratic-difference estimate
    fam = ec_build(math.pi, [2], 0.4, [0.5, 1e-3])
    psi = gaussian_packet(0.0, 3.0, 1.2, fam.periods[-1], 48, 16)
    report = cascade(fam, psi, horizon=20.0)
    d = report.cauchy_differences[0]
    assert 0.0 < d <= 2.0 * math.sqrt(1e-3)
