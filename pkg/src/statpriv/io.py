"""CSV / JSON output with atomic writes, and the run configuration."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

__all__ = [
    "OUTPUT_DIR_ENV",
    "RunConfig",
    "MANIFEST_SCHEMA",
    "format_real",
    "to_csv",
    "atomic_write",
    "write_table",
    "series_to_rows",
    "json_default",
]

OUTPUT_DIR_ENV = "STATPRIV_OUTPUT_DIR"
COMMANDS = ("curve", "compare", "sweep", "utility-match", "preset", "verify")


def format_real(v) -> str:
    """17 significant digits; empty field for a missing value."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    if isinstance(v, Fraction):
        return format(float(v), ".17g")
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_real(v) for v in row])
    return buf.getvalue()


def atomic_write(path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def json_default(o):
    if isinstance(o, Fraction):
        return float(o)
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _json_floats(o):
    """NaN/inf are not valid JSON; map them to null / strings."""
    if isinstance(o, float):
        if math.isnan(o):
            return None
        if math.isinf(o):
            return "inf" if o > 0 else "-inf"
        return o
    if isinstance(o, dict):
        return {k: _json_floats(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_json_floats(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_json_floats(json.loads(json.dumps(obj, default=json_default))),
                      indent=2, sort_keys=True) + "\n"


def write_table(path: Optional[str], header: Sequence[str], rows: list, fmt: str = "csv",
                extra: Optional[dict] = None) -> str:
    """Render rows as CSV or JSON; write atomically when ``path`` is given."""
    if fmt == "csv":
        text = to_csv(header, rows)
    elif fmt == "json":
        payload = dict(extra or {})
        payload["columns"] = list(header)
        payload["rows"] = [dict(zip(header, r)) for r in rows]
        text = dumps(payload)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path:
        atomic_write(path, text)
    return text


def series_to_rows(series) -> tuple[list, list]:
    return ["x", "y"], [[x, y] for x, y in zip(series.x, series.y)]


@dataclass
class RunConfig:
    """Everything a CLI run depends on; serialized into manifests."""

    command: str
    n: Optional[int] = None
    pi: Optional[float] = None
    mechanism: dict = field(default_factory=lambda: {"kind": "pure"})
    eps: list = field(default_factory=list)
    output: str = "csv"
    out: Optional[str] = None
    tol: dict = field(default_factory=dict)
    preset: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.output not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output!r}")
        if any(not (v > 0) for v in self.tol.values()):
            raise ValueError("tolerances must be positive")
        if any(not (e >= 0) for e in self.eps):
            raise ValueError("epsilon values must be >= 0")
        m = self.mechanism.get("m")
        if m is not None and self.n is not None and not 1 <= m <= self.n:
            raise ValueError(f"sample size m={m} outside [1, {self.n}]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)


MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "statpriv preset manifest",
    "type": "object",
    "required": ["preset", "description", "version", "parameters", "series", "config"],
    "properties": {
        "preset": {"type": "string"},
        "description": {"type": "string"},
        "version": {"type": "string"},
        "parameters": {"type": "object"},
        "config": {
            "type": "object",
            "required": ["command"],
            "properties": {"command": {"enum": list(COMMANDS)}},
        },
        "series": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "file", "points", "meta"],
                "properties": {
                    "label": {"type": "string"},
                    "file": {"type": "string"},
                    "points": {"type": "integer", "minimum": 0},
                    "meta": {"type": "object"},
                },
            },
        },
    },
}
