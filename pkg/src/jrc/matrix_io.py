"""CSV matrix files and JSON trace documents.

Matrix files start with a ``rows,cols`` line giving the dimensions,
followed by one comma-separated line per row::

    2,3
    1,0,0.5
    0,1,-2
"""

import json

import numpy as np

from .matrixcore import ShapeError
from .solver import TRACE_SCHEMA

__all__ = ["read_matrix_csv", "write_matrix_csv", "write_trace_json", "read_trace_json"]


def read_matrix_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        rows, cols = (int(v) for v in lines[0].split(","))
    except ValueError:
        raise ValueError(f"{path}: first line must be 'rows,cols', got {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != rows:
        raise ShapeError(f"{path}: header says {rows} rows, found {len(body)}")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in body], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.shape != (rows, cols):
        raise ShapeError(f"{path}: expected shape ({rows}, {cols}), found rows of other lengths")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite entries")
    return data


def write_matrix_csv(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{M.shape[0]},{M.shape[1]}\n")
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_trace_json(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace.to_dict(), fh, indent=2)
        fh.write("\n")


def read_trace_json(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != TRACE_SCHEMA:
        raise ValueError(f"{path}: unsupported trace schema {doc.get('schema')!r}")
    return doc
