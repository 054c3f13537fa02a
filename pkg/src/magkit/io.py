"""CSV / JSON reading and atomic writing."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError

SCHEMA_VERSION = 1


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_table(path, label_col=None):
    """Read a numeric CSV with an optional header row.

    ``label_col`` (a header name or a 0-based column index) is split off as the
    label vector.  Returns (points, labels or None, header or None).
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    if not rows:
        raise InputError(f"{path} is empty")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path} has a header but no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise InputError(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")

    li = None
    if label_col is not None:
        if header is not None and str(label_col) in header:
            li = header.index(str(label_col))
        elif str(label_col).lstrip("-").isdigit() and -width <= int(label_col) < width:
            li = int(label_col) % width
        else:
            raise InputError(f"{path}: label column {label_col!r} not found")

    cols = [j for j in range(width) if j != li]
    try:
        data = np.array([[float(r[j]) for j in cols] for r in rows], dtype=np.float64)
        labels = None if li is None else np.array([float(r[li]) for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric value ({exc})") from None
    if data.shape[1] == 0:
        raise InputError(f"{path}: no coordinate columns")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite coordinate")
    if labels is not None and np.all(labels == np.round(labels)):
        labels = labels.astype(np.int64)
    if header is not None:
        header = [header[j] for j in cols]
    return data, labels, header


def fmt(x) -> str:
    """17 significant digits: parses back to the identical double."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, payload: dict):
    """Write ``payload`` with a leading schema version; non-finite floats become null.

    Python's float repr is the shortest string that round-trips exactly.
    """
    body = {"schema": SCHEMA_VERSION, **_jsonable(payload)}
    _atomic_write(path, json.dumps(body, indent=2, sort_keys=True) + "\n")
