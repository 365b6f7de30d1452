"""Machine-readable report output: JSON summaries and CSV detail tables.

CSV uses '.' decimal, ',' separator, a header row, UTF-8, and a fixed
shortest-roundtrip float format so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, complex):
        return f"{_fmt(x.real)}+{_fmt(x.imag)}j" if x.imag >= 0 else \
            f"{_fmt(x.real)}{_fmt(x.imag)}j"
    if isinstance(x, float):
        return repr(x)
    try:
        import numpy as np

        if isinstance(x, np.floating):
            return repr(float(x))
        if isinstance(x, np.complexfloating):
            return _fmt(complex(x))
        if isinstance(x, np.integer):
            return str(int(x))
    except ImportError:  # pragma: no cover
        pass
    return str(x)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=",", lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def check_entry(check: str, value: float, tolerance: float, passed: bool,
                meta: dict | None = None) -> dict:
    """One entry of the fixed JSON summary schema."""
    return {
        "check": str(check),
        "value": float(value),
        "tolerance": float(tolerance),
        "pass": bool(passed),
        "meta": meta or {},
    }


def bounded_check(check: str, value: float, tolerance: float,
                  meta: dict | None = None) -> dict:
    """Entry passing iff value <= tolerance."""
    return check_entry(check, value, tolerance, bool(value <= tolerance), meta)


class _JsonEncoder(json.JSONEncoder):
    def default(self, o):
        import numpy as np

        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        return super().default(o)


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, cls=_JsonEncoder)
        fh.write("\n")


def load_config(path) -> dict:
    """Read a TOML or JSON configuration file."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text.decode("utf-8"))
    raise ValueError(f"config must be .json or .toml, got {path.suffix!r}")


def ensure_outdir(out) -> Path:
    path = Path(out) if out else Path(os.getcwd()) / "reports"
    path.mkdir(parents=True, exist_ok=True)
    return path
