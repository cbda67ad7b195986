import math

import numpy as np
import pytest
from scipy.special import mathieu_a, mathieu_b

from bloch1d import (
    GridTooCoarse,
    PeriodicPotential,
    RootNotBracketed,
    band_edges,
    band_function,
    build_band_table,
    count_bands,
    monodromy,
)
from bloch1d.bands import (
    bad_set_measure,
    fold_quasimomentum,
    holder_constant,
    velocity_identity_residual,
)


def test_free_edges_all_gaps_closed(free_pi):
    edges = band_edges(free_pi, 10.0)
    assert np.allclose(edges, [0, 1, 1, 4, 4, 9, 9], atol=1e-8)


def test_edges_empty_below_spectrum(mathieu):
    assert band_edges(mathieu, -mathieu.bound - 0.5).size == 0


def test_mathieu_edges_against_scipy(mathieu):
    # independent oracle: H = -d^2/dx^2 + 2cos(x) maps to the Mathieu
    # equation with q = 4 and E = a/4
    ref = [mathieu_a(0, 4.0) / 4]
    for m in range(1, 9):
        ref.append(mathieu_b(m, 4.0) / 4)
        ref.append(mathieu_a(m, 4.0) / 4)
    edges = band_edges(mathieu, 17.0)
    assert edges.size == len(ref)
    for e, r in zip(edges, ref):
        assert abs(e - r) <= 1e-7 * (1.0 + abs(r))


def test_count_bands_free(free_pi):
    assert count_bands(free_pi, 10.0) == 4


def test_band_function_free_band1(free_pi):
    e, v = band_function(free_pi, 1, 0.5, max_energy=10.0)
    assert e == pytest.approx(0.25, abs=1e-10)
    assert v == pytest.approx(1.0, abs=1e-8)


def test_band_function_free_band2(free_pi):
    e, v = band_function(free_pi, 2, 0.5, max_energy=10.0)
    assert e == pytest.approx(2.25, abs=1e-10)
    assert v == pytest.approx(-3.0, abs=1e-8)


def test_band_function_odd_symmetry(free_pi, mathieu):
    for pot in (free_pi, mathieu):
        e1, v1 = band_function(pot, 2, 0.3, max_energy=12.0)
        e2, v2 = band_function(pot, 2, -0.3, max_energy=12.0)
        assert e1 == pytest.approx(e2, rel=1e-12)
        assert v1 == pytest.approx(-v2, rel=1e-10)


def test_band_function_closed_gap_velocity(free_pi):
    # E_2(k) = (2 - k)^2 on [0, 1]: one-sided saw at the closed gap k = 0
    e, v = band_function(free_pi, 2, 0.0, max_energy=10.0)
    assert e == pytest.approx(4.0, abs=1e-8)
    assert v == pytest.approx(-4.0, rel=1e-5)
    e, v = band_function(free_pi, 1, math.pi / math.pi, max_energy=10.0)
    assert e == pytest.approx(1.0, abs=1e-8)
    assert v == pytest.approx(2.0, rel=1e-5)


def test_band_function_open_gap_velocity_zero(mathieu):
    _, v = band_function(mathieu, 1, 0.0, max_energy=12.0)
    assert v == 0.0


def test_velocity_matches_finite_difference(mathieu):
    dk = 1e-5
    for n, k in ((1, 0.3), (2, 0.17), (3, 0.41)):
        _, v = band_function(mathieu, n, k, max_energy=12.0)
        e_plus, _ = band_function(mathieu, n, k + dk, max_energy=12.0)
        e_minus, _ = band_function(mathieu, n, k - dk, max_energy=12.0)
        assert v == pytest.approx((e_plus - e_minus) / (2 * dk), rel=1e-6)


def test_band_not_resolved(free_pi):
    with pytest.raises(RootNotBracketed):
        band_function(free_pi, 50, 0.3, max_energy=10.0)


def test_fold_quasimomentum():
    p = 2 * math.pi
    assert fold_quasimomentum(0.3, p) == pytest.approx(0.3)
    assert fold_quasimomentum(1.3, p) == pytest.approx(0.3)
    assert fold_quasimomentum(-0.5, p) == pytest.approx(0.5)  # -pi/p maps to +pi/p
    assert fold_quasimomentum(0.75, p) == pytest.approx(-0.25)


@pytest.fixture(scope="module")
def mathieu_table(mathieu):
    return build_band_table(mathieu, kpoints=32, max_energy=12.0)


def test_table_symmetry(mathieu_table):
    t = mathieu_table
    for j, k in enumerate(t.kgrid):
        jm = np.argmin(np.abs(t.kgrid + k))
        if abs(t.kgrid[jm] + k) < 1e-12:
            assert np.allclose(t.energies[:, j], t.energies[:, jm], rtol=1e-10)
            assert np.allclose(t.velocities[:, j], -t.velocities[:, jm], rtol=1e-8, atol=1e-10)


def test_table_monotone_with_parity_sign(mathieu_table):
    t = mathieu_table
    half = np.nonzero((t.kgrid > 1e-12) & (t.kgrid < 0.5 - 1e-12))[0]
    ks = t.kgrid[half]
    order = np.argsort(ks)
    for n in range(t.nbands):
        row = t.energies[n, half][order]
        sign = 1.0 if (n + 1) % 2 == 1 else -1.0
        assert np.all(sign * np.diff(row) > 0)


def test_table_bands_do_not_overlap(mathieu_table):
    t = mathieu_table
    for n in range(t.nbands - 1):
        assert np.max(t.energies[n]) <= np.min(t.energies[n + 1]) + 1e-12


def test_table_discriminant_of_energy(mathieu_table, mathieu):
    t = mathieu_table
    for n in range(t.nbands):
        for j in range(0, len(t.kgrid), 5):
            target = 2 * math.cos(2 * math.pi * t.kgrid[j])
            assert monodromy(mathieu, t.energies[n, j]).discriminant == pytest.approx(
                target, abs=1e-8
            )


def test_velocity_identity(mathieu_table):
    assert velocity_identity_residual(mathieu_table) <= 1e-8


def test_holder_constant_positive(mathieu_table):
    c = holder_constant(mathieu_table)
    assert c > 0


def test_c2_hat_consistency(mathieu_table, mathieu):
    c2, p, r = mathieu_table.c2_hat, 2 * math.pi, 2.0
    sup = c2 * p**2 * math.exp(2 * c2 * math.sqrt(r) * p)
    observed = np.max(np.abs(mathieu_table.discriminant_derivatives))
    assert sup >= observed * (1 - 1e-9)


def test_bad_set_zero_epsilon(mathieu_table):
    assert bad_set_measure(mathieu_table, 0.0) == 0.0


def test_bad_set_whole_zone(mathieu_table):
    # every pair separation is below a huge epsilon: the whole zone qualifies
    assert bad_set_measure(mathieu_table, 1e3) == pytest.approx(1.0, rel=1e-12)


def test_bad_set_below_all_gaps_is_empty(mathieu_table):
    # every gap in the table exceeds this epsilon: certified empty set
    assert bad_set_measure(mathieu_table, 1e-4) == 0.0


def test_bad_set_grid_too_coarse(mathieu):
    coarse = build_band_table(mathieu, kpoints=8, max_energy=12.0)
    with pytest.raises(GridTooCoarse):
        bad_set_measure(coarse, 0.5)


def test_bad_set_free_linear_oracle(free_pi):
    # For V = 0 (p = pi) adjacent bands cross linearly: near k = 1,
    # E_2 - E_1 = 4 - 4k <= eps on a set of length eps/4; near k = 0,
    # E_3 - E_2 = 8k <= eps on length eps/8.  Total measure = 2 eps (1/4 + 1/8).
    table = build_band_table(free_pi, kpoints=320, max_energy=8.0, nbands=3)
    eps = 0.3
    expected = 2 * eps * (1 / 4 + 1 / 8)
    assert bad_set_measure(table, eps) == pytest.approx(expected, rel=1e-3)


def test_edges_cover_requested_range(mathieu):
    edges = band_edges(mathieu, 12.0)
    assert np.all(np.diff(edges) >= -1e-12)
    assert edges[-1] <= 12.0
