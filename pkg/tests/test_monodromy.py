import math

import numpy as np
import pytest

from bloch1d import PeriodicPotential, discriminant_scan, free_discriminant, monodromy
from bloch1d.monodromy import scan_to_csv


def test_free_closed_form_positive_energy(free_pi):
    r = monodromy(free_pi, 1.0)
    assert r.discriminant == pytest.approx(2 * math.cos(math.pi), abs=1e-9)
    assert r.det_residual <= 1e-10


def test_free_closed_form_negative_energy():
    v = PeriodicPotential(2.0, (0.0,))
    r = monodromy(v, -1.0)
    assert r.discriminant == pytest.approx(2 * math.cosh(2.0), rel=1e-9)


def test_free_identity_on_grid(free_pi):
    z = np.linspace(0.013, 100.0, 57)
    for r in discriminant_scan(free_pi, z):
        assert abs(r.discriminant - free_discriminant(math.pi, r.energy)) <= 1e-9


def test_determinant_identity(mathieu):
    for z in np.linspace(-2.5, 42.0, 90):
        assert monodromy(mathieu, z).det_residual <= 1e-10


def test_matrix_entries_match_free_solutions(free_pi):
    # u1 = cos(sqrt(z) x), u2 = sin(sqrt(z) x)/sqrt(z)
    z = 2.37
    s = math.sqrt(z)
    r = monodromy(free_pi, z)
    assert r.m11 == pytest.approx(math.cos(s * math.pi), abs=1e-10)
    assert r.m12 == pytest.approx(math.sin(s * math.pi) / s, abs=1e-10)
    assert r.m21 == pytest.approx(-s * math.sin(s * math.pi), abs=1e-10)
    assert r.m22 == pytest.approx(math.cos(s * math.pi), abs=1e-10)


def test_derivative_matches_free_closed_form(free_pi):
    # dDelta/dz = -p sin(p sqrt z)/sqrt z for V = 0
    for z in (0.5, 2.0, 7.3):
        r = monodromy(free_pi, z)
        exact = -math.pi * math.sin(math.pi * math.sqrt(z)) / math.sqrt(z)
        assert r.discriminant_derivative == pytest.approx(exact, abs=1e-9)


def test_derivative_matches_finite_differences(mathieu):
    # away from Delta' zeros, centered differences agree to 1e-6 relative
    for z in (0.5, 3.3, 11.0):
        d = 1e-5 * (1 + abs(z))
        fd = (
            monodromy(mathieu, z + d).discriminant - monodromy(mathieu, z - d).discriminant
        ) / (2 * d)
        dp = monodromy(mathieu, z).discriminant_derivative
        assert dp == pytest.approx(fd, rel=1e-6)


def test_scan_grid_values(free_pi):
    results = discriminant_scan(free_pi, [0.0, 1.0, 4.0])
    deltas = [r.discriminant for r in results]
    assert deltas == pytest.approx([2.0, -2.0, 2.0], abs=1e-9)


def test_scan_empty():
    v = PeriodicPotential(1.0, (0.0, 0.3))
    assert discriminant_scan(v, []) == []


def test_scan_requires_increasing(mathieu):
    with pytest.raises(ValueError):
        discriminant_scan(mathieu, [1.0, 0.5])


def test_scan_deterministic(mathieu):
    a = discriminant_scan(mathieu, [0.5, 1.5])
    b = discriminant_scan(mathieu, [0.5, 1.5])
    assert [r.discriminant for r in a] == [r.discriminant for r in b]


def test_csv_export(tmp_path, mathieu):
    out = tmp_path / "scan.csv"
    scan_to_csv(discriminant_scan(mathieu, [0.5, 1.5]), out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "z,discriminant,discriminant_derivative,det_residual"
    assert len(lines) == 3
