"""Matrix files in and fit results out.

Input formats: MatrixMarket coordinate (``.mtx``; 1-indexed, listed entries
are observed) and dense CSV (an empty cell is an unobserved entry).
Outputs are plain CSV factor files, one-column CSVs for vector results
(predictions, cluster labels), ``history.csv`` and ``result.json``;
floats are written with 17 significant digits so they read back exactly.
"""

import csv
import json
import math
import os

import numpy as np

from .errors import DimensionError, ParseError

FORMATS = ("matrixmarket", "csv")

FACTOR_FILES = {"U": "U.csv", "V": "V.csv", "H": "H.csv", "W": "W.csv",
                "G": "G.csv", "G*": "Gstar.csv", "S": "S.csv"}

RESULT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["model", "config", "converged", "iterations", "objective", "metrics", "files"],
    "properties": {
        "model": {"type": "string"},
        "config": {"type": "object"},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 0},
        "objective": {"type": "number"},
        "kkt_residual": {"type": ["number", "null"]},
        "metrics": {"type": "object", "additionalProperties": {"type": ["number", "string", "null"]}},
        "files": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


def fmt(value):
    return format(float(value), ".17g")


def guess_format(path):
    return "matrixmarket" if str(path).lower().endswith(".mtx") else "csv"


def parse_matrix_file(path, format=None):
    """Read ``path`` and return ``(matrix, mask)``.

    Unobserved entries hold 0 in ``matrix`` and 0 in ``mask``.
    """
    format = format or guess_format(path)
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    with open(path, newline="") as fh:
        text = fh.read()
    if format == "matrixmarket":
        return parse_matrixmarket(text)
    return parse_csv(text)


def parse_matrixmarket(text):
    lines = text.splitlines()
    shape = None
    x = mask = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            if line.lower().startswith("%%matrixmarket"):
                _check_banner(line, lineno)
            continue
        parts = line.split()
        if shape is None:
            if len(parts) != 3:
                raise ParseError("size line must be 'rows cols entries'", lineno)
            try:
                rows, cols, nnz = (int(t) for t in parts)
            except ValueError:
                raise ParseError(f"non-integer size line {line!r}", lineno) from None
            if rows <= 0 or cols <= 0 or nnz < 0:
                raise ParseError("sizes must be positive", lineno)
            shape = (rows, cols)
            x = np.zeros(shape)
            mask = np.zeros(shape)
            count = 0
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'row col value', got {line!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            val = float(parts[2])
        except ValueError:
            raise ParseError(f"malformed entry {line!r}", lineno) from None
        if not (1 <= i <= shape[0] and 1 <= j <= shape[1]):
            raise ParseError(f"index ({i}, {j}) outside {shape[0]}x{shape[1]}", lineno)
        if not math.isfinite(val):
            raise ParseError(f"non-finite value {parts[2]!r}", lineno)
        if mask[i - 1, j - 1]:
            raise ParseError(f"duplicate entry ({i}, {j})", lineno)
        x[i - 1, j - 1] = val
        mask[i - 1, j - 1] = 1.0
        count += 1
    if shape is None:
        raise ParseError("missing size line")
    if count != nnz:
        raise DimensionError(f"size line declares {nnz} entries, found {count}")
    return x, mask


def _check_banner(line, lineno):
    words = line.lower().split()
    if len(words) < 5 or words[1] != "matrix" or words[2] != "coordinate":
        raise ParseError("only 'matrix coordinate' MatrixMarket files are supported", lineno)
    if words[3] not in ("real", "integer", "double"):
        raise ParseError(f"unsupported field type {words[3]!r}", lineno)
    if words[4] != "general":
        raise ParseError(f"unsupported symmetry {words[4]!r}", lineno)


def parse_csv(text):
    rows = []
    width = None
    for lineno, cells in enumerate(csv.reader(text.splitlines()), start=1):
        if not cells:
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"expected {width} columns, got {len(cells)}", lineno)
        row = []
        for c in cells:
            c = c.strip()
            if c == "":
                row.append(math.nan)
                continue
            try:
                val = float(c)
            except ValueError:
                raise ParseError(f"cannot parse {c!r} as a number", lineno) from None
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {c!r}", lineno)
            row.append(val)
        rows.append(row)
    if not rows:
        raise ParseError("empty file")
    x = np.array(rows)
    mask = (~np.isnan(x)).astype(np.float64)
    x[np.isnan(x)] = 0.0
    return x, mask


def write_matrixmarket(path, x, mask=None):
    x = np.asarray(x, dtype=np.float64)
    mask = np.ones_like(x) if mask is None else np.asarray(mask)
    idx = np.argwhere(mask > 0)
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{x.shape[0]} {x.shape[1]} {len(idx)}\n")
        for i, j in idx:
            fh.write(f"{i + 1} {j + 1} {fmt(x[i, j])}\n")


def write_csv_matrix(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _history_columns(result):
    cols = ["iteration", "objective"]
    for name in ("kkt_residual", "u_ortho_gap", "v_ortho_gap"):
        if name in result.diagnostics:
            cols.append(name)
    return cols


def _json_metric(value):
    if isinstance(value, (str, type(None))):
        return value
    value = float(value)
    return value if math.isfinite(value) else None


def write_outputs(result, out_dir, model="", config=None, metrics=None):
    """Write factor CSVs, ``history.csv`` and ``result.json``; return the paths.

    Contents depend only on ``result`` and the arguments, so identical fits
    give byte-identical files.
    """
    if not result.objective_history:
        raise ValueError("result has an empty objective history")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for key, fname in FACTOR_FILES.items():
        if key in result.factors:
            path = os.path.join(out_dir, fname)
            write_csv_matrix(path, result.factors[key])
            paths.append(path)

    for key in sorted(result.extras):
        value = result.extras[key]
        if isinstance(value, np.ndarray) and value.ndim == 1:
            path = os.path.join(out_dir, f"{key}.csv")
            with open(path, "w") as fh:
                fh.writelines(fmt(v) + "\n" for v in value)
            paths.append(path)

    cols = _history_columns(result)
    path = os.path.join(out_dir, "history.csv")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for it, f in enumerate(result.objective_history):
            row = [str(it), fmt(f)] + [fmt(result.diagnostics[c][it]) for c in cols[2:]]
            fh.write(",".join(row) + "\n")
    paths.append(path)

    metrics = dict(metrics or {})
    for key, value in result.extras.items():
        if np.ndim(value) == 0:
            metrics.setdefault(key, value)
    doc = {
        "model": model,
        "config": config or {},
        "converged": bool(result.converged),
        "iterations": result.iterations,
        "objective": float(result.objective),
        "kkt_residual": None if result.kkt_residual is None else float(result.kkt_residual),
        "metrics": {k: _json_metric(v) for k, v in sorted(metrics.items())},
        "files": [os.path.basename(p) for p in paths] + ["result.json"],
    }
    path = os.path.join(out_dir, "result.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(path)
    return paths


def read_csv_matrix(path):
    x, mask = parse_matrix_file(path, "csv")
    if not mask.all():
        raise ParseError(f"{path}: unexpected empty cells")
    return x
