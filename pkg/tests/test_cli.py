import json
import math

import numpy as np
import pytest

from bloch1d.cli import run


@pytest.fixture()
def potential_file(tmp_path):
    path = tmp_path / "mathieu.cfg"
    path.write_text("period = 6.283185307179586\ncoefficients = 0.0, 2.0\n")
    return path


@pytest.fixture()
def free_file(tmp_path):
    path = tmp_path / "free.cfg"
    path.write_text(f"period = {math.pi}\ncoefficients = 0.0\n")
    return path


@pytest.fixture()
def family_file(tmp_path):
    path = tmp_path / "family.cfg"
    path.write_text(
        "p0 = 3.141592653589793\nratios = 2, 2\neta = 0.4\n"
        "amplitudes = 0.0807, 0.00655, 4.33e-5\n"
    )
    return path


def test_missing_potential_file_exits_2(tmp_path):
    code = run(["bands", "--potential", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert code == 2


def test_usage_error_exits_2():
    assert run(["bands"]) == 2


def test_unknown_command_exits_2():
    assert run(["frobnicate"]) == 2


def test_bands_outputs(tmp_path, free_file):
    code = run(
        [
            "bands",
            "--potential",
            str(free_file),
            "--kpoints",
            "8",
            "--max-energy",
            "10.0",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    csvs = list(tmp_path.glob("bands-*.csv"))
    jsons = list(tmp_path.glob("bands-*.json"))
    assert len(csvs) == 1 and len(jsons) == 1
    header = csvs[0].read_text().splitlines()[0]
    assert header == "band,k,energy,velocity"
    meta = json.loads(jsons[0].read_text())
    assert meta["velocity_identity_residual"] <= 1e-8
    assert np.allclose(meta["edges"], [0, 1, 1, 4, 4, 9, 9], atol=1e-8)


def test_bands_deterministic(tmp_path, free_file):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["bands", "--potential", str(free_file), "--kpoints", "6", "--max-energy", "6.0"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    c1 = next(out1.glob("bands-*.csv")).read_text()
    c2 = next(out2.glob("bands-*.csv")).read_text()
    assert c1 == c2


def test_discriminant_scan(tmp_path, potential_file):
    code = run(
        [
            "discriminant",
            "--potential",
            str(potential_file),
            "--kpoints",
            "40",
            "--max-energy",
            "10",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    csv = next(tmp_path.glob("discriminant-*.csv"))
    lines = csv.read_text().strip().splitlines()
    assert len(lines) == 41
    residuals = [float(line.split(",")[3]) for line in lines[1:]]
    assert max(residuals) <= 1e-10


def test_fiber_dump(tmp_path, potential_file):
    code = run(
        ["fiber", "--potential", str(potential_file), "--k", "0.25", "--out", str(tmp_path)]
    )
    assert code == 0
    meta = json.loads(next(tmp_path.glob("fiber-*.json")).read_text())
    assert meta["quasimomentum"] == pytest.approx(0.25)
    vecs = np.load(next(tmp_path.glob("fiber-*-vectors.npy")))
    assert vecs.shape[1] == len(meta["energies"])


def test_evolve_csv(tmp_path, potential_file):
    code = run(
        [
            "evolve",
            "--potential",
            str(potential_file),
            "--packet",
            "center=0,width=2,wavenumber=1,cells=48,samples=16",
            "--t",
            "4.0",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    lines = next(tmp_path.glob("evolve-*.csv")).read_text().strip().splitlines()
    assert lines[0].startswith("t,mean_position,second_moment")
    assert len(lines) == 26
    assert all(line.split(",")[5] == "0" for line in lines[1:])


def test_cascade_json(tmp_path, family_file):
    code = run(
        [
            "transport",
            "cascade",
            "--family",
            str(family_file),
            "--packet",
            "center=0,width=3,wavenumber=1,cells=40,samples=32",
            "--horizon",
            "20",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    report = json.loads(next(tmp_path.glob("cascade-*.json")).read_text())
    diffs = report["cauchy_differences"]
    assert len(diffs) == 2
    assert diffs[1] < diffs[0]
    assert report["q_nonzero"] is True


def test_config_file_overrides_flags(tmp_path, free_file):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("kpoints = 4\nmax_energy = 6.0\n")
    code = run(
        [
            "bands",
            "--potential",
            str(free_file),
            "--kpoints",
            "64",
            "--config",
            str(cfgfile),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    csv = next(tmp_path.glob("bands-*.csv"))
    rows = csv.read_text().strip().splitlines()[1:]
    ks = {row.split(",")[1] for row in rows}
    assert len(ks) == 4  # config kpoints won over the flag


def test_invalid_numeric_rejected(tmp_path, free_file):
    code = run(
        ["bands", "--potential", str(free_file), "--kpoints", "-3", "--out", str(tmp_path)]
    )
    assert code == 1


def test_verify_passes(capsys):
    code = run(["verify"])
    out = capsys.readouterr().out
    assert code == 0
    assert "pass" in out
    assert "11/11" in out
