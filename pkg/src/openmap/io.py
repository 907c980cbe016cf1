"""CSV time series and JSON report writers."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParameterError

FLOAT_FORMAT = "{:.12g}"


def _fmt(x: float) -> str:
    return FLOAT_FORMAT.format(float(x))


def emit_timeseries(columns: dict, path) -> Path:
    """Write named columns as CSV, one row per grid point.

    Complex columns become ``re_<name>``/``im_<name>`` pairs.  Numbers carry
    12 significant digits and lines end with ``\\n``.
    """
    if not columns:
        raise ParameterError("no columns to write")
    header, data = [], []
    for name, values in columns.items():
        arr = np.asarray(values)
        if arr.ndim != 1:
            raise ParameterError(f"column {name!r} is not one-dimensional")
        if np.iscomplexobj(arr):
            header += [f"re_{name}", f"im_{name}"]
            data += [arr.real, arr.imag]
        else:
            header.append(name)
            data.append(arr.astype(float))
    lengths = {len(col) for col in data}
    if len(lengths) != 1 or 0 in lengths:
        raise ParameterError(f"columns must be non-empty and of equal length, got lengths {sorted(lengths)}")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*data):
            writer.writerow([_fmt(x) for x in row])
    return path


def read_timeseries(path) -> dict:
    """Read a file written by :func:`emit_timeseries`; ``re_``/``im_`` pairs are recombined."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    raw = {name: np.array([float(r[k]) for r in body]) for k, name in enumerate(header)}
    out = {}
    for name in header:
        if name.startswith("re_") and "im_" + name[3:] in raw:
            out[name[3:]] = raw[name] + 1j * raw["im_" + name[3:]]
        elif name.startswith("im_") and "re_" + name[3:] in raw:
            continue
        else:
            out[name] = raw[name]
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x) or np.isinf(x):
            return str(x)
        return x
    return obj


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n")
    return path
