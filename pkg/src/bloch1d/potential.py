"""Periodic cosine-series potentials and limit-periodic families.

A potential is a finite cosine series ``V(x) = a_0 + sum_j a_j cos(2 pi j x / p)``,
so its sup-norm bound ``R = sum |a_j|`` is exact and fiber matrices are banded.
A limit-periodic family stores per-level periodic components with nested
periods and an amplitude schedule that must pass an exponential-decay test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .configio import as_float, as_float_list, as_int_list, parse_keyvalue, read_keyvalue
from .errors import BadRatio, LevelOutOfRange, ScheduleViolation


@dataclass(frozen=True)
class PeriodicPotential:
    """Real potential ``a_0 + sum_j a_j cos(2 pi j x / period)``."""

    period: float
    coefficients: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        coeffs = tuple(float(c) for c in self.coefficients) or (0.0,)
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def bound(self) -> float:
        """Uniform bound ``R >= ||V||_inf`` (exact sum of coefficient moduli)."""
        return float(sum(abs(c) for c in self.coefficients))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = np.full_like(x, self.coefficients[0])
        for j, a in enumerate(self.coefficients[1:], start=1):
            if a != 0.0:
                v = v + a * np.cos(2.0 * np.pi * j / self.period * x)
        return v if v.ndim else float(v)

    def sup_norm(self, samples: int = 8192) -> float:
        """Numerical sup of |V| over one period (<= bound)."""
        x = np.linspace(0.0, self.period, samples, endpoint=False)
        return float(np.max(np.abs(self(x))))

    def with_period_multiple(self, factor: int) -> "PeriodicPotential":
        """Re-express the same function with period ``factor * period``."""
        if factor < 1 or factor != int(factor):
            raise ValueError(f"factor must be a positive integer, got {factor}")
        factor = int(factor)
        coeffs = [0.0] * ((len(self.coefficients) - 1) * factor + 1)
        coeffs[0] = self.coefficients[0]
        for j, a in enumerate(self.coefficients[1:], start=1):
            coeffs[j * factor] = a
        return PeriodicPotential(self.period * factor, tuple(coeffs))

    def to_json_dict(self) -> dict:
        return {"period": self.period, "coefficients": list(self.coefficients)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PeriodicPotential":
        return cls(float(d["period"]), tuple(float(c) for c in d["coefficients"]))

    @classmethod
    def from_config(cls, text: str) -> "PeriodicPotential":
        kv = parse_keyvalue(text)
        return cls(as_float(kv["period"]), tuple(as_float_list(kv["coefficients"])))

    @classmethod
    def from_file(cls, path) -> "PeriodicPotential":
        kv = read_keyvalue(path)
        return cls(as_float(kv["period"]), tuple(as_float_list(kv["coefficients"])))


def zero_potential(period: float = math.pi) -> PeriodicPotential:
    return PeriodicPotential(period, (0.0,))


def add_potentials(terms: list[PeriodicPotential], period: float) -> PeriodicPotential:
    """Sum potentials whose periods all divide ``period`` exactly."""
    coeffs = [0.0]
    for w in terms:
        ratio = period / w.period
        factor = round(ratio)
        if factor < 1 or abs(ratio - factor) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"period {w.period} does not divide {period}")
        lifted = w.with_period_multiple(factor)
        if len(lifted.coefficients) > len(coeffs):
            coeffs.extend([0.0] * (len(lifted.coefficients) - len(coeffs)))
        for j, a in enumerate(lifted.coefficients):
            coeffs[j] += a
    return PeriodicPotential(period, tuple(coeffs))


@dataclass(frozen=True)
class ECFamily:
    """Nested-period family ``V_n = W_0 + ... + W_n`` with exponential tail decay.

    Component ``W_n`` has period ``p_n = p_0 * ratios[0] * ... * ratios[n-1]``.
    Construction verifies the decay test: ``exp(eta * p_{n+1}) * tail(n)`` must
    be strictly decreasing over the stored levels, where ``tail(n)`` sums the
    bounds of the components above level ``n``.
    """

    base_period: float
    ratios: tuple[int, ...]
    components: tuple[PeriodicPotential, ...]
    eta: float

    def __post_init__(self):
        for r in self.ratios:
            if int(r) != r or r < 2:
                raise BadRatio(f"period ratios must be integers >= 2, got {r}")
        object.__setattr__(self, "ratios", tuple(int(r) for r in self.ratios))
        if len(self.components) != len(self.ratios) + 1:
            raise ValueError(
                f"{len(self.ratios)} ratios require {len(self.ratios) + 1} components, "
                f"got {len(self.components)}"
            )
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        for n, (w, p) in enumerate(zip(self.components, self.periods)):
            if abs(w.period - p) > 1e-9 * p:
                raise ValueError(f"component {n} has period {w.period}, expected {p}")
        self._check_schedule()

    def _check_schedule(self):
        scores = [math.exp(self.eta * self.periods[n + 1]) * self.tail(n) for n in range(self.depth)]
        for n in range(1, len(scores)):
            if not scores[n] < scores[n - 1]:
                raise ScheduleViolation(
                    "exp(eta p_{n+1}) * tail(n) is not strictly decreasing: "
                    f"level {n - 1} -> {n} gives {scores[n - 1]:.6g} -> {scores[n]:.6g}"
                )
        if scores and not math.isfinite(scores[0]):
            raise ScheduleViolation("exponential-class score overflowed; eta too large")

    @property
    def depth(self) -> int:
        return len(self.components) - 1

    @property
    def periods(self) -> tuple[float, ...]:
        out = [self.base_period]
        for r in self.ratios:
            out.append(out[-1] * r)
        return tuple(out)

    @property
    def bound(self) -> float:
        """Uniform bound R valid for every approximant."""
        return float(sum(w.bound for w in self.components))

    def tail(self, n: int) -> float:
        """Sum of component bounds above level n: certified ``||V - V_n||_inf``."""
        if not 0 <= n <= self.depth:
            raise LevelOutOfRange(f"level {n} outside stored depth {self.depth}")
        return float(sum(w.bound for w in self.components[n + 1:]))

    def approximant(self, n: int) -> PeriodicPotential:
        """Partial sum ``V_n`` expressed as a cosine series with period ``p_n``."""
        if not 0 <= n <= self.depth:
            raise LevelOutOfRange(f"level {n} outside stored depth {self.depth}")
        return add_potentials(list(self.components[: n + 1]), self.periods[n])

    def to_json_dict(self) -> dict:
        return {
            "base_period": self.base_period,
            "ratios": list(self.ratios),
            "eta": self.eta,
            "components": [w.to_json_dict() for w in self.components],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ECFamily":
        return cls(
            float(d["base_period"]),
            tuple(int(r) for r in d["ratios"]),
            tuple(PeriodicPotential.from_json_dict(w) for w in d["components"]),
            float(d["eta"]),
        )

    @classmethod
    def from_config(cls, text: str) -> "ECFamily":
        kv = parse_keyvalue(text)
        return ec_build(
            as_float(kv["p0"]),
            as_int_list(kv["ratios"]),
            as_float(kv["eta"]),
            as_float_list(kv["amplitudes"]),
        )

    @classmethod
    def from_file(cls, path) -> "ECFamily":
        return cls.from_config(__import__("pathlib").Path(path).read_text())


def ec_build(p0: float, ratios: list[int], eta: float, amplitudes: list[float]) -> ECFamily:
    """Build a family with single-harmonic components ``W_n = a_n cos(2 pi x / p_n)``.

    Rejects ratios < 2 and amplitude schedules that fail the decay test.
    """
    if len(amplitudes) != len(ratios) + 1:
        raise ValueError(
            f"{len(ratios)} ratios require {len(ratios) + 1} amplitudes, got {len(amplitudes)}"
        )
    periods = [p0]
    for r in ratios:
        if int(r) != r or r < 2:
            raise BadRatio(f"period ratios must be integers >= 2, got {r}")
        periods.append(periods[-1] * int(r))
    components = tuple(
        PeriodicPotential(p, (0.0, float(a))) for p, a in zip(periods, amplitudes)
    )
    return ECFamily(p0, tuple(int(r) for r in ratios), components, eta)


def default_family(p0: float = math.pi, depth: int = 3, eta: float = 0.4) -> ECFamily:
    """Dyadic demo family with the schedule ``a_n = exp(-eta p_{n+1})``."""
    ratios = [2] * depth
    periods = [p0 * 2**n for n in range(depth + 2)]
    amplitudes = [math.exp(-eta * periods[n + 1]) for n in range(depth + 1)]
    return ec_build(p0, ratios, eta, amplitudes)
