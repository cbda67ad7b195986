"""Key-value text configs and small CSV/JSON output helpers.

The config format is deliberately plain: one ``key = value`` pair per line,
``#`` starts a comment, list values are comma separated.
"""

from __future__ import annotations

import json
import hashlib
from pathlib import Path


def parse_keyvalue(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict of raw strings."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_keyvalue(path: str | Path) -> dict[str, str]:
    return parse_keyvalue(Path(path).read_text())


def as_float(raw: str) -> float:
    return float(raw)


def as_float_list(raw: str) -> list[float]:
    items = [s for s in (part.strip() for part in raw.split(",")) if s]
    return [float(s) for s in items]


def as_int_list(raw: str) -> list[int]:
    items = [s for s in (part.strip() for part in raw.split(",")) if s]
    return [int(s) for s in items]


def format_float(x: float) -> str:
    """Stable 12-significant-digit formatting used in all text artifacts."""
    return f"{x:.12g}"


def write_csv(path: str | Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path: str | Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def config_hash(payload) -> str:
    """Short stable hash of a JSON-serializable config, used in artifact names."""
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:8]
