"""
Kernels, rectangles and the cut norm.

A kernel is a real n x m matrix read as a step function on a product of two
finite measure spaces: every cell carries the same measure ``scale``.  With the
default ``scale = 1/(n*m)`` the whole square has measure 1 and every rectangle
indicator has norm at most 1.

The rectangle indicators play the role of the spanning set R; the cut norm
``sup_r |<r, x>|`` is the metric d_R(x, 0).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError, SizeError

__all__ = [
    "Kernel",
    "Rectangle",
    "PermGroup",
    "inner_product",
    "cut_norm_exact",
    "cut_norm_heuristic",
    "cut_norm",
    "d_R",
    "delta_R",
    "eval_strong_regularity",
    "phi_grid",
    "holder_chain_check",
    "scalar_power_inequality_check",
    "lp_norm",
]

EXACT_THRESHOLD = 20
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class Kernel:
    """A real matrix with a per-cell measure ``scale``."""

    values: np.ndarray
    scale: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise DimensionError(f"kernel values must be a nonempty 2-d array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("kernel entries must be finite")
        v.setflags(write=False)
        scale = 1.0 / v.size if self.scale is None else float(self.scale)
        if not scale > 0 or not math.isfinite(scale):
            raise PreconditionError(f"scale must be positive, got {scale}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "scale", scale)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def norm(self) -> float:
        """The L2 norm, sqrt(scale * sum of squares)."""
        return math.sqrt(self.scale * float(np.sum(self.values * self.values)))

    def inner(self, other: "Kernel") -> float:
        _check_compatible(self, other)
        return self.scale * float(np.sum(self.values * other.values))

    def with_values(self, values) -> "Kernel":
        return Kernel(values, self.scale)

    def __sub__(self, other: "Kernel") -> "Kernel":
        _check_compatible(self, other)
        return Kernel(self.values - other.values, self.scale)

    def __add__(self, other: "Kernel") -> "Kernel":
        _check_compatible(self, other)
        return Kernel(self.values + other.values, self.scale)

    def permuted(self, perm: Sequence[int]) -> "Kernel":
        """Kernel y^pi with y^pi[pi(i), pi(j)] = y[i, j]."""
        if self.n != self.m:
            raise DimensionError("only square kernels can be permuted")
        perm = np.asarray(perm, dtype=int)
        if perm.shape != (self.n,) or sorted(perm.tolist()) != list(range(self.n)):
            raise DimensionError(f"not a permutation of range({self.n}): {perm.tolist()}")
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.n)
        return Kernel(self.values[np.ix_(inv, inv)], self.scale)

    @classmethod
    def zeros(cls, n: int, m: int | None = None, scale: float | None = None) -> "Kernel":
        return cls(np.zeros((n, n if m is None else m)), scale)


def _check_compatible(x: Kernel, y: Kernel):
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    if not math.isclose(x.scale, y.scale, rel_tol=1e-15, abs_tol=0.0):
        raise DimensionError(f"scale mismatch: {x.scale} vs {y.scale}")


@dataclass(frozen=True, order=True)
class Rectangle:
    """An index-set pair (rows, cols); the indicator of rows x cols.

    Ordering is lexicographic on (rows, cols), which is the tie-break used by
    every witness search in the package.
    """

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    zero: bool = field(default=False, compare=False)

    def __post_init__(self):
        rows = tuple(sorted({int(i) for i in self.rows}))
        cols = tuple(sorted({int(j) for j in self.cols}))
        if not self.zero and (not rows or not cols):
            raise PreconditionError("rectangle rows and cols must be nonempty")
        if any(i < 0 for i in rows + cols):
            raise DimensionError("negative index in rectangle")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @property
    def size(self) -> int:
        return len(self.rows) * len(self.cols)

    def norm(self, scale: float) -> float:
        return math.sqrt(scale * self.size)

    def overlap(self, other: "Rectangle") -> int:
        """Number of shared cells, so <r, s> = scale * overlap."""
        return len(set(self.rows) & set(other.rows)) * len(set(self.cols) & set(other.cols))

    def indicator(self, shape: tuple[int, int]) -> np.ndarray:
        _check_bounds(self, shape)
        out = np.zeros(shape)
        out[np.ix_(self.rows, self.cols)] = 1.0
        return out

    def to_dict(self) -> dict:
        return {"rows": list(self.rows), "cols": list(self.cols)}

    @classmethod
    def from_dict(cls, d: dict) -> "Rectangle":
        return cls(tuple(d["rows"]), tuple(d["cols"]))


def _check_bounds(r: Rectangle, shape):
    if r.rows and r.rows[-1] >= shape[0] or r.cols and r.cols[-1] >= shape[1]:
        raise DimensionError(f"rectangle out of bounds for kernel of shape {shape}")


class PermGroup:
    """A finite group of permutations of range(n), acting on square kernels.

    The constructor checks closure, inverses and the identity, so only pass
    explicit lists for small groups; the named constructors build groups that
    are closed by construction.
    """

    def __init__(self, perms: Iterable[Sequence[int]], n: int | None = None, check: bool = True):
        perms = sorted({tuple(int(i) for i in p) for p in perms})
        if not perms:
            raise PreconditionError("a group needs at least the identity")
        self.n = len(perms[0]) if n is None else n
        for p in perms:
            if sorted(p) != list(range(self.n)):
                raise DimensionError(f"group element out of range: {p}")
        self.perms = perms
        if check:
            self._check_group()

    def _check_group(self):
        elems = set(self.perms)
        if tuple(range(self.n)) not in elems:
            raise PreconditionError("group does not contain the identity")
        for p in self.perms:
            inv = [0] * self.n
            for i, pi in enumerate(p):
                inv[pi] = i
            if tuple(inv) not in elems:
                raise PreconditionError(f"group not closed under inverse: {p}")
            for q in self.perms:
                if tuple(p[q[i]] for i in range(self.n)) not in elems:
                    raise PreconditionError("group not closed under composition")

    def __len__(self):
        return len(self.perms)

    def __iter__(self):
        return iter(self.perms)

    @classmethod
    def trivial(cls, n: int) -> "PermGroup":
        return cls([tuple(range(n))], n, check=False)

    @classmethod
    def symmetric(cls, n: int) -> "PermGroup":
        if n > 8:
            raise SizeError(f"the full symmetric group on {n} points is too large to enumerate")
        return cls(itertools.permutations(range(n)), n, check=False)

    @classmethod
    def block_permutations(cls, blocks: Sequence[Sequence[int]]) -> "PermGroup":
        """Permutations moving whole blocks onto blocks of the same size, order-preserving inside."""
        blocks = [sorted(b) for b in blocks]
        n = sum(len(b) for b in blocks)
        by_size: dict[int, list[list[int]]] = {}
        for b in blocks:
            by_size.setdefault(len(b), []).append(b)
        classes = list(by_size.values())
        perms = []
        for choice in itertools.product(*(itertools.permutations(range(len(c))) for c in classes)):
            p = list(range(n))
            for cls_blocks, order in zip(classes, choice):
                for src, dst in zip(cls_blocks, (cls_blocks[o] for o in order)):
                    for i, j in zip(src, dst):
                        p[i] = j
            perms.append(p)
        return cls(perms, n, check=False)


def inner_product(k: Kernel, r: Rectangle) -> float:
    """<r, k> = scale * sum of k over the rectangle."""
    _check_bounds(r, k.shape)
    if not r.rows or not r.cols:
        return 0.0
    return k.scale * float(np.sum(k.values[np.ix_(r.rows, r.cols)]))


def _rect_sum(values: np.ndarray, rows, cols):
    return values[np.ix_(rows, cols)].sum()


def max_abs_rectangle_sum(values: np.ndarray, exact_threshold: int = EXACT_THRESHOLD):
    """Exact max over nonempty (S, T) of |sum values[S x T]|.

    Enumerates row subsets (or column subsets when there are fewer columns);
    for a fixed row set the best column set is the positive (or negative)
    support of the column sums.  Integer input is handled in exact integer
    arithmetic.  Returns ``(best_abs_sum, rows, cols)`` with the
    lexicographically least witness among the maximizers found.
    """
    values = np.asarray(values)
    n, m = values.shape
    transpose = n > m
    w = values.T if transpose else values
    n, m = w.shape
    if n > exact_threshold:
        raise SizeError(
            f"exact enumeration over 2^{n} subsets exceeds exact_threshold={exact_threshold}; "
            "use the heuristic mode"
        )
    is_int = np.issubdtype(w.dtype, np.integer)
    w = w.astype(np.int64) if is_int else w.astype(float)
    shifts = np.arange(n, dtype=np.int64)
    best = 0
    cands: list = []
    total = 1 << n
    for start in range(1, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        bits = (idx[:, None] >> shifts) & 1
        sums = bits @ w if is_int else bits.astype(float) @ w
        pos = np.where(sums > 0, sums, 0).sum(axis=1)
        neg = -np.where(sums < 0, sums, 0).sum(axis=1)
        cmax = max(pos.max(), neg.max())
        if cmax == 0 or cmax < best - _tie_tol(best, is_int):
            continue
        best = max(best, cmax)
        floor = best - _tie_tol(best, is_int)
        for sign, side in ((1, pos), (-1, neg)):
            for h in np.nonzero(side >= floor)[0].tolist():
                rows = tuple(np.nonzero(bits[h])[0].tolist())
                cols = tuple(np.nonzero(sums[h] * sign > 0)[0].tolist())
                cands.append((rows, cols, side[h]))
    if best == 0:
        return (0 if is_int else 0.0), (0,), (0,)
    floor = best - _tie_tol(best, is_int)
    cands = [(r, c) for r, c, v in cands if v >= floor]
    if transpose:
        cands = [(c, r) for r, c in cands]
    rows, cols = min(cands)
    value = abs(_rect_sum(values, rows, cols))
    return value, rows, cols


def _tie_tol(best, is_int: bool = False) -> float:
    return 0 if is_int else 1e-12 * max(1.0, abs(float(best)))


def cut_norm_exact(k: Kernel, exact_threshold: int = EXACT_THRESHOLD) -> tuple[float, Rectangle]:
    """Exact cut norm sup_r |<r, k>| with a lexicographically least witness.

    Cost is O(2^min(n, m) * max(n, m)).
    """
    _, rows, cols = max_abs_rectangle_sum(k.values, exact_threshold)
    witness = Rectangle(rows, cols)
    return abs(inner_product(k, witness)), witness


def alternating_max_rectangle(values: np.ndarray, restarts: int = 8, seed: int = 0):
    """Alternating maximization of |sum values[S x T]|; a lower bound on the exact maximum.

    Restart 0 starts from the row holding the largest |entry|; the others from
    random row subsets.  Each restart alternates best-columns / best-rows
    until the value stops increasing.  Returns ``(best_abs_sum, rows, cols)``.
    """
    if restarts < 1:
        raise PreconditionError("restarts must be at least 1")
    w = np.asarray(values, dtype=float)
    n, m = w.shape
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        if r == 0:
            i0 = int(np.argmax(np.abs(w).max(axis=1)))
            rows = np.zeros(n, dtype=bool)
            rows[i0] = True
        else:
            rows = rng.random(n) < 0.5
            if not rows.any():
                rows[rng.integers(n)] = True
        val, rows, cols = _alternate(w, rows)
        cand = (val, tuple(np.nonzero(rows)[0].tolist()), tuple(np.nonzero(cols)[0].tolist()))
        if best is None or cand[0] > best[0] or (cand[0] == best[0] and cand[1:] < best[1:]):
            best = cand
    return best


def _best_side(sums: np.ndarray):
    pos = sums[sums > 0].sum()
    neg = -sums[sums < 0].sum()
    if pos >= neg:
        sel = sums > 0
    else:
        sel = sums < 0
    if not sel.any():
        sel = np.zeros_like(sel)
        sel[int(np.argmax(np.abs(sums)))] = True
    return sel


def _alternate(w: np.ndarray, rows: np.ndarray, max_iter: int = 1000):
    val = -1.0
    cols = None
    for _ in range(max_iter):
        cols_new = _best_side(rows.astype(float) @ w)
        rows_new = _best_side(w @ cols_new.astype(float))
        new_val = abs(float(w[np.ix_(rows_new, cols_new)].sum()))
        if new_val <= val:
            break
        val, rows, cols = new_val, rows_new, cols_new
    return val, rows, cols


def cut_norm_heuristic(k: Kernel, restarts: int = 8, seed: int = 0) -> tuple[float, Rectangle]:
    """Lower bound on the cut norm by alternating maximization over ``restarts`` starts."""
    _, rows, cols = alternating_max_rectangle(k.values, restarts, seed)
    witness = Rectangle(rows, cols)
    return abs(inner_product(k, witness)), witness


def cut_norm(k: Kernel, mode: str = "exact", exact_threshold: int = EXACT_THRESHOLD,
             restarts: int = 8, seed: int = 0) -> tuple[float, Rectangle]:
    if mode == "exact":
        return cut_norm_exact(k, exact_threshold)
    if mode == "heuristic":
        return cut_norm_heuristic(k, restarts, seed)
    raise PreconditionError(f"unknown mode {mode!r}")


def d_R(x: Kernel, y: Kernel, mode: str = "exact", **kwargs) -> float:
    """Cut distance d_R(x, y) = sup_r |<r, x - y>|."""
    return cut_norm(x - y, mode, **kwargs)[0]


def delta_R(x: Kernel, y: Kernel, g: PermGroup, mode: str = "exact", **kwargs) -> tuple[float, tuple[int, ...]]:
    """min over pi in g of d_R(x, y^pi), with the first minimizing permutation.

    Over a finite subgroup this is an upper bound on the infimum over a larger group.
    """
    if g.n != y.n:
        raise DimensionError(f"group acts on {g.n} points, kernel has {y.n} rows")
    best_val, best_perm = math.inf, None
    for perm in g:
        val = d_R(x, y.permuted(perm), mode, **kwargs)
        if val < best_val:
            best_val, best_perm = val, perm
    return best_val, best_perm


def lp_norm(values, p: float) -> float:
    """l_p norm of a vector; p = inf is the max norm."""
    v = np.abs(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0.0
    if math.isinf(p):
        return float(v.max())
    top = v.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((v / top) ** p) ** (1.0 / p))


def _holder_exponent(t: float) -> float:
    return math.inf if t >= 2 else 2.0 / (2.0 - t)


def _check_orthogonal(rs: Sequence[Rectangle], shape):
    for r in rs:
        _check_bounds(r, shape)
    for a, b in itertools.combinations(rs, 2):
        if a.overlap(b):
            raise PreconditionError(f"rectangles {a} and {b} are not orthogonal")


def eval_strong_regularity(x: Kernel, z: Kernel, rs: Sequence[Rectangle], t: float, eps: float):
    """Both sides of the strong-regularity inequality at a single exponent t.

    lhs = sum_i |<r_i, x - z>|^t
    rhs = eps * (1 + ||(||r_1||^t, ..., ||r_k||^t)||_p),  p = 2/(2-t)
    """
    if not 0 < eps <= 2:
        raise PreconditionError(f"eps must lie in (0, 2], got {eps}")
    if not eps <= t <= 2:
        raise PreconditionError(f"t must lie in [eps, 2], got {t}")
    _check_orthogonal(rs, x.shape)
    y = x - z
    lhs = sum(abs(inner_product(y, r)) ** t for r in rs)
    norms = [r.norm(x.scale) ** t for r in rs]
    rhs = eps * (1.0 + lp_norm(norms, _holder_exponent(t)))
    return float(lhs), float(rhs)


def phi_grid(y: Kernel, rs: Sequence[Rectangle], eps: float, ts: Sequence[float] | None = None) -> tuple[float, float]:
    """Grid lower bound on the sup over t in [eps, 2] of the ratio
    sum_i |<r_i, y>|^t / (1 + ||(||r_i||^t)||_p) for fixed orthogonal rectangles.

    Returns ``(value, t_attaining)``.  Only the supplied t values are tried.
    """
    if ts is None:
        ts = np.linspace(eps, 2.0, 33)
    _check_orthogonal(rs, y.shape)
    ips = [abs(inner_product(y, r)) for r in rs]
    best = (-1.0, float(ts[0]))
    for t in ts:
        if not eps <= t <= 2:
            raise PreconditionError(f"grid point t={t} outside [eps, 2]")
        num = sum(v ** t for v in ips)
        den = 1.0 + lp_norm([r.norm(y.scale) ** t for r in rs], _holder_exponent(t))
        if num / den > best[0]:
            best = (num / den, float(t))
    return best


def holder_chain_check(y: Kernel, rs: Sequence[Rectangle], t: float, slack: float = 1e-9) -> bool:
    """Check sum_i |<r_i, y>|^t <= rho * ||y||^t for orthogonal nonzero r_i.

    rho is the l_p norm of (||r_i||^t) with p = 2/(2-t).  Bessel's inequality
    plus Hoelder make this hold for every valid input.
    """
    if not 0 < t <= 2:
        raise PreconditionError(f"t must lie in (0, 2], got {t}")
    if any(r.zero or r.size == 0 for r in rs):
        raise PreconditionError("zero rectangle in holder chain")
    _check_orthogonal(rs, y.shape)
    lhs = sum(abs(inner_product(y, r)) ** t for r in rs)
    rho = lp_norm([r.norm(y.scale) ** t for r in rs], _holder_exponent(t))
    return lhs <= rho * y.norm() ** t + slack


def scalar_power_inequality_check(a: float, b: float, t: float, eps: float) -> bool:
    """Check a^t - b^t <= 2 (a - b)^eps for 0 <= b <= a <= 1, 0 < eps <= 1, t in [eps, 2]."""
    if not 0 <= b <= a <= 1:
        raise PreconditionError(f"need 0 <= b <= a <= 1, got a={a}, b={b}")
    if not 0 < eps <= 1:
        raise PreconditionError(f"eps must lie in (0, 1], got {eps}")
    if not eps <= t <= 2:
        raise PreconditionError(f"t must lie in [eps, 2], got {t}")
    return a ** t - b ** t <= 2.0 * (a - b) ** eps + 1e-12
