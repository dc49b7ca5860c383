"""Plain-text columnar files and JSON summaries.

Column files look like::

    # {"mu": 14.54, ...}
    q re_chi im_chi
    -1.0e+02 ...

The first line is a JSON object with metadata, the second the column
names. Floats are written with 17 significant digits so values survive a
round trip bit for bit.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def dumps(obj) -> str:
    # repr-based float output in json is already shortest-round-trip
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_columns(path, names, columns, meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(names) != len(cols):
        raise ValueError("one name per column")
    if len({c.shape for c in cols}) > 1:
        raise ValueError("columns must have equal length")
    for n in names:
        if not n or any(ch.isspace() for ch in n):
            raise ValueError(f"bad column name {n!r}")
    table = np.column_stack(cols) if cols else np.empty((0, 0))
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta or {}, sort_keys=True, default=_json_default) + "\n")
        fh.write(" ".join(names) + "\n")
        np.savetxt(fh, table, fmt=FLOAT_FMT)


def read_columns(path):
    """Return ({name: array}, meta)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = json.loads(first[1:])
        names = fh.readline().split()
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        data = np.empty((0, len(names)))
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {len(names)} names but {data.shape[1]} columns")
    return {n: data[:, i].copy() for i, n in enumerate(names)}, meta


def default_output_dir():
    return Path(os.environ.get("BECTRANSPORT_OUT", "bectransport-out"))
