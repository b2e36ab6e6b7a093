"""JSON density files and small table readers.

Floats are written with Python's shortest round-trip ``repr``, so a file
read back reproduces every binary64 value exactly.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bayes_space import Density
from .copula import CorrelationMatrix, MarginalTransform
from .measure_grid import GridMeasure

FORMAT = "bayesdecomp.density"
VERSION = 1


class InputError(ValueError):
    """Malformed or unreadable input (CLI exit code 2)."""


def density_payload(m: GridMeasure, values, clr=None, metadata=None) -> dict:
    out = {
        "format": FORMAT,
        "version": VERSION,
        "grid": m.to_dict(),
        "values": np.asarray(values, dtype=float).ravel().tolist(),
    }
    if clr is not None:
        out["clr"] = np.asarray(clr, dtype=float).ravel().tolist()
    out["metadata"] = dict(metadata or {})
    return out


def dumps(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"), allow_nan=False) + "\n"


def write_json(payload: dict, path) -> None:
    text = dumps(payload)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def write_density(f: Density, path, metadata=None, clr=None) -> None:
    write_json(density_payload(f.measure, f.values, clr=clr, metadata=metadata), path)


def _load_text(path) -> str:
    try:
        if str(path) == "-":
            return sys.stdin.read()
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def parse_density(payload) -> tuple[Density, dict]:
    """Validate a decoded density file; returns the density and its metadata."""
    if not isinstance(payload, dict):
        raise InputError("density file must hold a JSON object")
    if payload.get("format") != FORMAT:
        raise InputError(f"unknown format {payload.get('format')!r}, expected {FORMAT!r}")
    if payload.get("version") != VERSION:
        raise InputError(f"unsupported version {payload.get('version')!r}")
    try:
        m = GridMeasure.from_dict(payload["grid"])
    except KeyError:
        raise InputError("missing field 'grid'") from None
    except ValueError as exc:
        raise InputError(f"invalid grid: {exc}") from None
    values = payload.get("values")
    if not isinstance(values, list):
        raise InputError("missing or non-array field 'values'")
    if len(values) != m.size:
        raise InputError(f"value count {len(values)} does not match grid size {m.size}")
    try:
        arr = np.array(values, dtype=float).reshape(m.shape)
    except (TypeError, ValueError):
        raise InputError("field 'values' must contain only numbers") from None
    try:
        f = Density(m, arr)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    meta = payload.get("metadata") or {}
    return f, meta


def read_density(path) -> tuple[Density, dict]:
    text = _load_text(path)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_density(payload)


def read_correlation(path) -> CorrelationMatrix:
    try:
        data = json.loads(_load_text(path))
        return CorrelationMatrix.from_dict(data)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_marginal_csv(path, name=None) -> MarginalTransform:
    """Two-column ``x,F`` table; a non-numeric first row is taken as a header."""
    rows = list(csv.reader(_load_text(path).splitlines()))
    rows = [r for r in rows if r]
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        x = [float(r[0]) for r in rows]
        F = [float(r[1]) for r in rows]
        return MarginalTransform(x, F, name=name or Path(path).stem)
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: {exc}") from None
