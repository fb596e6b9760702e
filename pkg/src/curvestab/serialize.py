"""Input parsing and deterministic, atomic output for the command line."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .curvature import CurvatureTrace
from .errors import InputFormatError
from .jordan import JordanSpec
from .linalg import as_matrix

LINEAR_SATURATION = 1e300


def parse_system(text: str):
    """Return a JordanSpec or a square matrix parsed from ``text``.

    JSON objects with a ``"blocks"`` key are Jordan specs, objects with a
    ``"rows"`` key (optionally ``"n"``) are matrices. A bare JSON list of
    rows is accepted too. Anything else is read as whitespace separated
    rows of numbers.
    """
    stripped = text.strip()
    if not stripped:
        raise InputFormatError("empty input")
    if stripped[0] in "{[":
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"invalid JSON: {exc}") from exc
        if isinstance(data, dict) and "blocks" in data:
            return JordanSpec.from_dict(data)
        if isinstance(data, dict) and "rows" in data:
            A = _matrix(data["rows"])
            if "n" in data and data["n"] != A.shape[0]:
                raise InputFormatError(f'"n" is {data["n"]} but matrix is {A.shape[0]}x{A.shape[0]}')
            return A
        if isinstance(data, list):
            return _matrix(data)
        raise InputFormatError('JSON input needs a "blocks" or "rows" key')
    rows = [line.split() for line in stripped.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    try:
        return _matrix([[float(x) for x in row] for row in rows])
    except ValueError as exc:
        raise InputFormatError(f"could not read matrix: {exc}") from exc


def _matrix(rows) -> np.ndarray:
    try:
        A = np.array(rows, dtype=float)
        return as_matrix(A)
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"not a finite square matrix: {exc}") from exc


def load_system(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    return parse_system(text)


def parse_vector(text: str, n: int | None = None) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.replace(" ", "").split(",") if x], dtype=float)
    except ValueError as exc:
        raise InputFormatError(f"bad vector {text!r}") from exc
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise InputFormatError(f"bad vector {text!r}")
    if n is not None and v.size != n:
        raise InputFormatError(f"vector has {v.size} entries, system has dimension {n}")
    return v


def fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``null``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2) + "\n"


def _linear(log_kappa: float) -> float:
    if math.isnan(log_kappa):
        return math.nan
    if log_kappa > math.log(LINEAR_SATURATION):
        return LINEAR_SATURATION
    return math.exp(log_kappa)


def trace_csv(trace: CurvatureTrace, linear: bool = False) -> str:
    name = "kappa" if linear else "log_kappa"
    header = ["t"] + [f"{name}_{i}" for i in range(1, trace.order + 1)] + ["flags"]
    lines = [",".join(header)]
    for t, row, flag in zip(trace.times, trace.log_kappa, trace.flags):
        vals = [_linear(x) for x in row] if linear else row
        lines.append(",".join([fmt(t)] + [fmt(v) for v in vals] + [str(flag)]))
    return "\n".join(lines) + "\n"


def trace_dict(trace: CurvatureTrace, linear: bool = False) -> dict:
    key = "kappa" if linear else "log_kappa"
    rows = [[_linear(x) for x in r] if linear else list(r) for r in trace.log_kappa]
    return {
        "order": trace.order,
        "method": trace.method,
        "diagnostic": trace.diagnostic,
        "t": list(trace.times),
        key: rows,
        "flags": list(trace.flags),
    }


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
