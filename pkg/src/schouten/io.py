"""Reports (JSON), run histories (JSON lines) and field dumps (CSV)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, numpy types converted)."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_history(path, header: dict, states: list) -> Path:
    """Header line followed by one line per accepted state."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_plain({"kind": "header", **header}), sort_keys=True) + "\n")
        for state in states:
            fh.write(json.dumps(_plain({"kind": "state", **state}), sort_keys=True) + "\n")
    return path


def read_history(path) -> tuple[dict, list]:
    header, states = None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("kind") == "header":
                header = rec
            else:
                states.append(rec)
    if header is None:
        raise ValueError(f"{path}: history has no header line")
    return header, states


def field_columns(chart, fields: dict) -> tuple[list, list]:
    """Column names and arrays for a per-node dump.

    ``fields`` maps a name to a per-node array; trailing (n, n) tensor axes
    are written as upper-triangle components ``name_ij``.
    """
    names, cols = [], []
    idx = np.indices(chart.shape).reshape(chart.ndim, -1)
    coords = chart.coordinates()
    for a in range(chart.ndim):
        names.append(f"i{a}")
        cols.append(idx[a])
    for a in range(chart.ndim):
        names.append(f"x{a}")
        cols.append(coords[a].reshape(-1))
    for key, arr in fields.items():
        arr = np.asarray(arr)
        if arr.shape == chart.shape:
            names.append(key)
            cols.append(arr.reshape(-1))
            continue
        n = arr.shape[-1]
        flat = arr.reshape(chart.size, n, n)
        for i in range(n):
            for j in range(i, n):
                names.append(f"{key}_{i}{j}")
                cols.append(flat[:, i, j])
    return names, cols


def write_field_csv(path, chart, fields: dict) -> Path:
    path = Path(path)
    names, cols = field_columns(chart, fields)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow([int(v) if k.startswith("i") and k[1:].isdigit() else repr(float(v))
                             for k, v in zip(names, row)])
    return path


def read_field_csv(path, column: str = "u") -> tuple[np.ndarray, np.ndarray]:
    """(multi-index array of shape (rows, ndim), values of ``column``)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [r for r in reader if r]
    if column not in names:
        raise ValueError(f"{path}: no column {column!r}")
    idx_cols = [i for i, name in enumerate(names) if name.startswith("i") and name[1:].isdigit()]
    index = np.array([[int(r[i]) for i in idx_cols] for r in rows], dtype=int)
    values = np.array([float(r[names.index(column)]) for r in rows])
    return index, values


def field_from_rows(chart, index: np.ndarray, values: np.ndarray) -> np.ndarray:
    if index.shape[1] != chart.ndim:
        raise ValueError("field file does not match the chart dimension")
    out = np.full(chart.shape, np.nan)
    out[tuple(index.T)] = values
    if np.isnan(out).any():
        raise ValueError("field file does not cover every node of the chart")
    return out


def write_profile_csv(path, profile) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "w_hat", "two_log_r"])
        for r, w in profile:
            writer.writerow([repr(float(r)), repr(float(w)), repr(float(2 * np.log(r)))])
    return path
