"""Reading kernels, graphs, partitions and polynomials; writing JSON reports."""

from __future__ import annotations

import hashlib
import json
import os
import sys

import numpy as np
import scipy.io
import scipy.sparse

from .errors import WeakRegError
from .kernel import Kernel
from .partitions import Partition
from .poly import HomogeneousPoly
from .regularity import Graph


class FormatError(WeakRegError):
    """Unsupported or malformed input file."""


def digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _ext(path: str) -> str:
    return os.path.splitext(path)[1].lower()


def read_edge_list(path: str, n: int | None = None) -> Graph:
    """Whitespace-separated ``u v`` pairs, 0-indexed; '#' and '%' start comments."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].split("%", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise FormatError(f"{path}:{lineno}: expected 'u<TAB>v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if u < 0 or v < 0:
                raise FormatError(f"{path}:{lineno}: negative vertex index")
            edges.append((u, v))
    size = max((max(e) for e in edges), default=-1) + 1
    if n is None:
        n = size
    elif n < size:
        raise FormatError(f"edge list mentions vertex {size - 1} but n={n}")
    if n == 0:
        raise FormatError(f"{path}: no vertices")
    return Graph.from_edges(n, edges)


def read_matrix_market(path: str) -> np.ndarray:
    try:
        m = scipy.io.mmread(path)
    except (ValueError, OSError) as exc:
        raise FormatError(f"{path}: not a Matrix Market file ({exc})") from None
    if scipy.sparse.issparse(m):
        m = m.toarray()
    return np.asarray(m, dtype=float)


def read_kernel(path: str, scale: float | None = None) -> Kernel:
    ext = _ext(path)
    if ext == ".mtx":
        return Kernel(read_matrix_market(path), scale)
    if ext in (".tsv", ".txt", ".edges"):
        return Kernel(read_edge_list(path).adjacency.astype(float), scale)
    if ext == ".json":
        with open(path) as fh:
            d = json.load(fh)
        return Kernel(np.array(d["values"], dtype=float), d.get("scale", scale))
    raise FormatError(f"unknown kernel format {ext!r} (expected .mtx, .tsv or .json)")


def read_graph(path: str, n: int | None = None) -> Graph:
    ext = _ext(path)
    if ext in (".tsv", ".txt", ".edges"):
        return read_edge_list(path, n)
    if ext == ".mtx":
        m = read_matrix_market(path)
        return Graph((m != 0).astype(np.int64))
    raise FormatError(f"unknown graph format {ext!r} (expected .tsv or .mtx)")


def read_partition(path: str) -> Partition:
    with open(path) as fh:
        return Partition.from_dict(json.load(fh))


def read_poly(path: str) -> HomogeneousPoly:
    with open(path) as fh:
        try:
            return HomogeneousPoly.from_dict(json.load(fh))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: malformed polynomial JSON ({exc})") from None


def read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    # json emits floats via repr, which round-trips exactly
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path: str | None = None):
    text = dumps(obj)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
