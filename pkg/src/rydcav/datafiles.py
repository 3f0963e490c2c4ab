"""Deterministic CSV/JSON data files with provenance headers.

Output files start with comment lines carrying the package version, a hash
of the generating configuration and any run metadata (seed, noise level),
so re-running with identical inputs yields byte-identical files.  Numbers
are written with repr (shortest round-trip), '.' decimal separator and
'\n' line endings, independent of locale.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ._version import __version__


def canonical_json(tree) -> str:
    return json.dumps(tree, sort_keys=True, separators=(",", ":"))


def config_hash(tree: dict) -> str:
    """Short stable hash of a configuration tree."""
    return hashlib.sha256(canonical_json(tree).encode()).hexdigest()[:12]


def format_number(v) -> str:
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return repr(float(v))


def meta_lines(meta: dict) -> list[str]:
    parts = [f"# rydcav {__version__}"]
    parts += [f"# {key}={meta[key]}" for key in sorted(meta)]
    return parts


def _emit(path, text: str) -> None:
    if path is None:
        import sys

        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def write_csv(path, header: str, rows, meta: dict | None = None) -> None:
    lines = meta_lines(meta or {})
    lines.append(header)
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    _emit(path, "\n".join(lines) + "\n")


def write_json(path, payload: dict, meta: dict | None = None) -> None:
    doc = dict(payload)
    doc["_meta"] = {"version": __version__, **(meta or {})}
    _emit(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_xy_csv(path):
    """Read data columns x, y and optional weights from a CSV file.

    Comment lines (#) and a single non-numeric header line are skipped.
    A third column is interpreted as per-point weights only when rows have
    exactly three columns (wider files carry diagnostics, not weights).
    """
    xs, ys, ws = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                continue  # header line
            xs.append(vals[0])
            ys.append(vals[1])
            if len(vals) == 3:
                ws.append(vals[2])
    if not xs:
        raise ValueError(f"no data rows found in {path}")
    if ws and len(ws) != len(xs):
        raise ValueError(f"inconsistent weight column in {path}")
    import numpy as np

    return (np.array(xs), np.array(ys), np.array(ws) if ws else None)
