"""CSV/JSON reading and writing with line-numbered diagnostics and atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .law import Observation

__all__ = [
    "IngestError",
    "read_observations",
    "write_observations",
    "read_matrix",
    "write_csv",
    "write_json",
    "atomic_write",
]

OBS_COLUMNS = ("n", "s", "error")


class IngestError(ValidationError):
    """A data file could not be parsed; ``line`` is 1-based (0 for whole-file problems)."""

    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
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


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats with strings so the output is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def write_json(path, payload):
    text = json.dumps(_clean(payload), indent=2, sort_keys=True, default=_json_default)
    atomic_write(path, text + "\n")


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IngestError(path, 0, "file not found") from None
    except UnicodeDecodeError as exc:
        raise IngestError(path, 0, f"not valid UTF-8 ({exc.reason})") from None
    rows = [(i, row) for i, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(cell.strip() for cell in row)]
    if not rows:
        raise IngestError(path, 0, "file is empty")
    return rows


def _number(path, line, column, cell, allow_nan=False):
    try:
        value = float(cell)
    except ValueError:
        raise IngestError(path, line, f"column {column!r}: {cell.strip()!r} is not a number") from None
    if allow_nan and math.isnan(value):
        return value
    if not math.isfinite(value):
        raise IngestError(path, line, f"column {column!r}: value must be finite")
    return value


def read_observations(path):
    """Parse an observations CSV with header ``n,s,error[,group]``."""
    rows = _read_rows(path)
    line0, header = rows[0]
    names = [h.strip().lower() for h in header]
    missing = [c for c in OBS_COLUMNS if c not in names]
    if missing:
        raise IngestError(path, line0, f"missing column(s) {', '.join(missing)}")
    idx = {c: names.index(c) for c in OBS_COLUMNS}
    gidx = names.index("group") if "group" in names else None
    out = []
    for line, row in rows[1:]:
        if len(row) < len(names):
            raise IngestError(path, line, f"expected {len(names)} cells, got {len(row)}")
        vals = {c: _number(path, line, c, row[i]) for c, i in idx.items()}
        if vals["error"] <= 0:
            raise IngestError(path, line, f"error must be > 0, got {row[idx['error']].strip()}")
        group = row[gidx].strip() if gidx is not None else ""
        try:
            out.append(Observation(vals["n"], vals["s"], vals["error"], group))
        except ValidationError as exc:
            raise IngestError(path, line, str(exc)) from None
    if not out:
        raise IngestError(path, 0, "no data rows")
    return out


def write_observations(path, observations):
    write_csv(path, ("n", "s", "error", "group"),
              ((o.n, o.s, o.error, o.group) for o in observations))


def read_matrix(path, allow_nan=False):
    """Numeric matrix from CSV; a non-numeric first row is taken as a header.

    ``allow_nan=True`` accepts ``nan`` cells (plot data marks unobserved points so).
    """
    rows = _read_rows(path)
    first_line, first = rows[0]
    try:
        [float(c) for c in first]
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise IngestError(path, 0, "no data rows")
    width = len(rows[0][1])
    data = []
    for line, row in rows:
        if len(row) != width:
            raise IngestError(path, line, f"expected {width} columns, got {len(row)}")
        data.append([_number(path, line, f"#{j + 1}", c, allow_nan) for j, c in enumerate(row)])
    return np.asarray(data, dtype=np.float64)
