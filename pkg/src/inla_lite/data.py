"""Reading observation tables and writing result tables.

Input CSV: header ``unit_id,y,N,<covariate...>``, one row per observation.
Covariate columns that parse as numbers everywhere become floats, anything
else stays a string label. Output CSVs are UTF-8 with LF line endings,
floats at 17 significant digits, and are written atomically.
"""

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
import tempfile

import numpy as np

from .errors import InputError
from .model import Dataset
from .priors import read_adjacency

REQUIRED = ("unit_id", "y", "N")


def _number(text, line, column):
    try:
        return float(text)
    except ValueError:
        raise InputError(f"line {line}: column {column!r} is not a number: {text!r}") from None


def read_dataset(path, n_units=None):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError(f"{path}: empty file") from None
    if tuple(header[:3]) != REQUIRED:
        raise InputError(f"{path}: header must start with unit_id,y,N (got {','.join(header[:3])})")
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names in header")
    covs = header[3:]
    units, ys, ns = [], [], []
    raw = {c: [] for c in covs}
    for line, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        u = _number(row[0], line, "unit_id")
        y = _number(row[1], line, "y")
        n = _number(row[2], line, "N")
        if not u.is_integer() or u < 0:
            raise InputError(f"{path}: line {line}: unit_id must be a non-negative integer")
        if not (y.is_integer() and n.is_integer()):
            raise InputError(f"{path}: line {line}: y and N must be integers")
        if n < 1:
            raise InputError(f"{path}: line {line}: N must be at least 1 (got {n:g})")
        if y < 0 or y > n:
            raise InputError(f"{path}: line {line}: y={y:g} outside 0..N={n:g}")
        units.append(int(u))
        ys.append(y)
        ns.append(n)
        for c, v in zip(covs, row[3:]):
            raw[c].append(v.strip())
    if not units:
        raise InputError(f"{path}: no data rows")
    columns = {}
    for c, vals in raw.items():
        try:
            columns[c] = np.array([float(v) for v in vals])
        except ValueError:
            columns[c] = np.array(vals, dtype=object)
    n_units = max(units) + 1 if n_units is None else n_units
    if max(units) >= n_units:
        raise InputError(f"{path}: unit_id {max(units)} is not a unit of the adjacency graph (0..{n_units - 1})")
    return Dataset(np.array(units), np.array(ys), np.array(ns), columns, n_units)


def ingest(data_path, adjacency_path):
    """Load the adjacency graph and the observations, checked against each other."""
    graph = read_adjacency(adjacency_path)
    data = read_dataset(data_path, n_units=graph.n_units)
    return data, graph


# ---------------------------------------------------------------------------
# writing


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NA"
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.17g}"
    return "" if v is None else str(v)


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    atomic_write_text(path, buf.getvalue())


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_dataset(path, data):
    header = ["unit_id", "y", "N", *data.covariates]
    rows = [
        [int(data.unit_id[j]), int(data.y[j]), int(data.n[j]), *(data.covariates[c][j] for c in data.covariates)]
        for j in range(len(data))
    ]
    write_csv(path, header, rows)


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
