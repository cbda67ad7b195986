"""Command-line frontend: band tables, discriminant scans, fiber dumps,
wave-packet evolution, the transport cascade, and the invariant suite.

Outputs are CSV for series and JSON for structured reports, one file per
artifact, named by a short hash of the effective configuration.  A config
file (``--config``, key = value) overrides flags; flags override defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bands as _bands
from .configio import config_hash, read_keyvalue, write_csv, write_json
from .errors import Bloch1dError
from .evolve import moments
from .fiber import fiber_eigensystem
from .monodromy import discriminant_scan, scan_to_csv
from .packets import gaussian_packet
from .potential import ECFamily, PeriodicPotential
from .transport import cascade
from .verify import run_all

_FLOAT_KEYS = ("k", "t", "dt", "horizon", "max_energy")
_INT_KEYS = ("kpoints", "cutoff", "depth", "seed")


@dataclass
class RunConfig:
    command: str
    potential: str | None = None
    family: str | None = None
    packet: str | None = None
    kpoints: int = 32
    cutoff: int | None = None
    k: float = 0.0
    t: float = 10.0
    dt: float | None = None
    horizon: float = 120.0
    depth: int | None = None
    max_energy: float | None = None
    seed: int = 0
    out: str = "."
    extra: dict = field(default_factory=dict)

    def validate(self):
        for name, val in (
            ("kpoints", self.kpoints),
            ("t", self.t),
            ("horizon", self.horizon),
        ):
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be positive, got {val}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.cutoff is not None and self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.depth is not None and self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")

    def tag(self) -> str:
        payload = {k: v for k, v in self.__dict__.items() if k != "extra" and v is not None}
        return config_hash(payload)


def _parse_packet_spec(spec: str) -> dict:
    """Inline ``center=0,width=4,...`` or a path to a key-value file."""
    if "=" not in spec:
        text = Path(spec).read_text()
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line and "=" in line:
                key, val = line.split("=", 1)
                kv[key.strip()] = val.strip()
    else:
        kv = dict(part.split("=", 1) for part in spec.split(","))
        kv = {k.strip(): v.strip() for k, v in kv.items()}
    out = {
        "center": float(kv.get("center", 0.0)),
        "width": float(kv.get("width", 4.0)),
        "wavenumber": float(kv.get("wavenumber", 1.0)),
        "cells": int(kv.get("cells", 64)),
        "samples": int(kv.get("samples", 16)),
    }
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bloch1d",
        description="Band structure and ballistic transport for 1D periodic and "
        "limit-periodic Schrodinger operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file; overrides flags")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--dt", type=float)

    p_bands = sub.add_parser("bands", help="band table E_n(k), v_n(k) and edges")
    p_bands.add_argument("--potential", required=True)
    p_bands.add_argument("--kpoints", type=int, default=32)
    p_bands.add_argument("--max-energy", dest="max_energy", type=float)
    common(p_bands)

    p_disc = sub.add_parser("discriminant", help="discriminant scan over energy")
    p_disc.add_argument("--potential", required=True)
    p_disc.add_argument("--kpoints", type=int, default=200, help="grid size")
    p_disc.add_argument("--max-energy", dest="max_energy", type=float)
    common(p_disc)

    p_fiber = sub.add_parser("fiber", help="fiber eigensystem at one quasimomentum")
    p_fiber.add_argument("--potential", required=True)
    p_fiber.add_argument("--k", type=float, default=0.0)
    p_fiber.add_argument("--cutoff", type=int)
    common(p_fiber)

    p_ev = sub.add_parser("evolve", help="split-step evolution and moment series")
    p_ev.add_argument("--potential", required=True)
    p_ev.add_argument("--packet", required=True)
    p_ev.add_argument("--t", type=float, default=10.0)
    common(p_ev)

    p_tr = sub.add_parser("transport", help="transport experiments")
    tr_sub = p_tr.add_subparsers(dest="transport_command", required=True)
    p_casc = tr_sub.add_parser("cascade", help="limit-periodic cascade report")
    p_casc.add_argument("--family", required=True)
    p_casc.add_argument("--packet", required=True)
    p_casc.add_argument("--depth", type=int)
    p_casc.add_argument("--horizon", type=float, default=120.0)
    common(p_casc)

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    common(p_ver)
    return parser


def _apply_config_file(cfg: RunConfig, path: str) -> None:
    kv = read_keyvalue(path)
    for key, raw in kv.items():
        name = key.replace("-", "_")
        if name in _FLOAT_KEYS:
            setattr(cfg, name, float(raw))
        elif name in _INT_KEYS:
            setattr(cfg, name, int(raw))
        elif name in ("potential", "family", "packet", "out"):
            setattr(cfg, name, raw)
        else:
            cfg.extra[name] = raw


def _config_from_args(args) -> RunConfig:
    cmd = args.command
    if cmd == "transport":
        cmd = f"transport-{args.transport_command}"
    cfg = RunConfig(command=cmd)
    for name in (
        "potential",
        "family",
        "packet",
        "kpoints",
        "cutoff",
        "k",
        "t",
        "dt",
        "horizon",
        "depth",
        "max_energy",
        "seed",
        "out",
    ):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "config", None):
        _apply_config_file(cfg, args.config)
    cfg.validate()
    return cfg


def _cmd_bands(cfg: RunConfig) -> int:
    pot = PeriodicPotential.from_file(cfg.potential)
    table = _bands.build_band_table(pot, kpoints=cfg.kpoints, max_energy=cfg.max_energy)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = cfg.tag()
    write_csv(
        outdir / f"bands-{tag}.csv",
        ["band", "k", "energy", "velocity"],
        _bands.table_to_rows(table),
    )
    write_json(
        outdir / f"bands-{tag}.json",
        {
            "period": table.period,
            "max_energy": table.max_energy,
            "edges": [float(e) for e in table.edges],
            "edge_closed": [bool(c) for c in table.edge_closed],
            "c2_hat": table.c2_hat,
            "velocity_identity_residual": _bands.velocity_identity_residual(table),
        },
    )
    print(f"wrote bands-{tag}.csv and bands-{tag}.json to {outdir}")
    return 0


def _cmd_discriminant(cfg: RunConfig) -> int:
    pot = PeriodicPotential.from_file(cfg.potential)
    top = cfg.max_energy if cfg.max_energy is not None else _bands.default_max_energy(pot)
    grid = np.linspace(-pot.bound - 1.0, top, cfg.kpoints)
    results = discriminant_scan(pot, grid)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = cfg.tag()
    scan_to_csv(results, outdir / f"discriminant-{tag}.csv")
    print(f"wrote discriminant-{tag}.csv to {outdir}")
    return 0


def _cmd_fiber(cfg: RunConfig) -> int:
    pot = PeriodicPotential.from_file(cfg.potential)
    es = fiber_eigensystem(pot, cfg.k, cfg.cutoff)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = cfg.tag()
    write_json(
        outdir / f"fiber-{tag}.json",
        {
            "quasimomentum": es.quasimomentum,
            "period": es.period,
            "cutoff": es.cutoff,
            "energies": [float(e) for e in es.energies],
            "residuals": [float(r) for r in es.residuals],
        },
    )
    np.save(outdir / f"fiber-{tag}-vectors.npy", es.vectors)
    print(f"wrote fiber-{tag}.json and fiber-{tag}-vectors.npy to {outdir}")
    return 0


def _cmd_evolve(cfg: RunConfig) -> int:
    pot = PeriodicPotential.from_file(cfg.potential)
    spec = _parse_packet_spec(cfg.packet)
    psi = gaussian_packet(
        spec["center"], spec["width"], spec["wavenumber"], pot.period, spec["cells"], spec["samples"]
    )
    times = np.linspace(0.0, cfg.t, 25)
    series = moments(pot, psi, times, cfg.dt)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = cfg.tag()
    rows = zip(
        series.times,
        series.mean_position,
        series.second_moment,
        series.x_norm,
        series.x2_norm,
        (int(b) for b in series.boundary_flags),
    )
    write_csv(
        outdir / f"evolve-{tag}.csv",
        ["t", "mean_position", "second_moment", "x_norm", "x2_norm", "boundary_flag"],
        rows,
    )
    print(f"wrote evolve-{tag}.csv to {outdir} (alpha_fit={series.alpha_fit:.6g}, "
          f"beta_growth_fit={series.beta_growth_fit:.6g})")
    return 0


def _cmd_cascade(cfg: RunConfig) -> int:
    family = ECFamily.from_file(cfg.family)
    spec = _parse_packet_spec(cfg.packet)
    depth = cfg.depth if cfg.depth is not None else family.depth
    psi = gaussian_packet(
        spec["center"],
        spec["width"],
        spec["wavenumber"],
        family.periods[depth],
        spec["cells"],
        spec["samples"],
    )
    report = cascade(family, psi, depth=depth, horizon=cfg.horizon, dt=cfg.dt)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = cfg.tag()
    write_json(outdir / f"cascade-{tag}.json", report.to_json_dict())
    write_csv(
        outdir / f"cascade-{tag}-convergence.csv",
        ["t", "error", "boundary_flag"],
        zip(
            report.convergence.times,
            report.convergence.errors,
            (int(b) for b in report.convergence.boundary_flags),
        ),
    )
    failures = report.invariant_failures()
    print(f"wrote cascade-{tag}.json to {outdir}")
    for f in failures:
        print(f"invariant failure: {f}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_verify(cfg: RunConfig) -> int:
    results = run_all(cfg.seed)
    width = max(len(name) for name, _, _ in results)
    failed = 0
    for name, ok, detail in results:
        status = "pass" if ok else "FAIL"
        print(f"{name:<{width}}  {status}  {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} invariant suites passed")
    return 1 if failed else 0


_DISPATCH = {
    "bands": _cmd_bands,
    "discriminant": _cmd_discriminant,
    "fiber": _cmd_fiber,
    "evolve": _cmd_evolve,
    "transport-cascade": _cmd_cascade,
    "verify": _cmd_verify,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config_from_args(args)
        return _DISPATCH[cfg.command](cfg)
    except Bloch1dError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2 if isinstance(exc, OSError) else 1


def main() -> None:
    sys.exit(run())
