"""
Partitions of range(n), their meet, step-function projections, and the two
refinements with explicit size bounds:

* ``balanced_refine``: every partition P has an eps-balanced refinement Q with
  |Q| <= (1 + 1/eps) |P|.
* ``product_round_refine``: a product step function sum alpha_I beta_J (I x J)
  over N is within eps (in L2) of its projection onto a coarsening P >= N with
  |P| <= (1 + 2/eps)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError
from .kernel import Kernel, Rectangle

__all__ = [
    "Partition",
    "StepProjection",
    "meet",
    "project",
    "balanced_refine",
    "product_round_refine",
    "rectangle_factors",
    "refine_for_rectangle",
    "rank1_size_bound",
    "combined_size_bound",
    "product_step_kernel",
]


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks covering range(n), sorted by smallest element."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = [tuple(sorted(int(i) for i in b)) for b in self.blocks]
        if any(len(b) == 0 for b in blocks):
            raise PreconditionError("partition has an empty block")
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(len(flat))):
            raise PreconditionError("blocks must be disjoint and cover range(n)")
        object.__setattr__(self, "blocks", tuple(sorted(blocks)))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    @property
    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    @property
    def is_contiguous(self) -> bool:
        return all(b[-1] - b[0] + 1 == len(b) for b in self.blocks)

    def labels(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for a, b in enumerate(self.blocks):
            out[list(b)] = a
        return out

    def indicator(self) -> np.ndarray:
        """|P| x n 0/1 matrix of block memberships."""
        out = np.zeros((len(self), self.n))
        out[self.labels(), np.arange(self.n)] = 1.0
        return out

    def refines(self, other: "Partition") -> bool:
        """True iff self <= other, i.e. every block of self lies inside a block of other."""
        if self.n != other.n:
            return False
        lab = other.labels()
        return all(len({lab[i] for i in b}) == 1 for b in self.blocks)

    def to_dict(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks], "contiguous": self.is_contiguous}

    @classmethod
    def from_dict(cls, d: dict) -> "Partition":
        p = cls(tuple(tuple(b) for b in d["blocks"]))
        if d.get("contiguous") and not p.is_contiguous:
            raise PreconditionError("partition flagged contiguous but has a non-interval block")
        return p

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls((tuple(range(n)),))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return cls(tuple(tuple(g) for g in groups.values()))

    @classmethod
    def intervals(cls, sizes: Iterable[int]) -> "Partition":
        blocks, start = [], 0
        for s in sizes:
            blocks.append(tuple(range(start, start + s)))
            start += s
        return cls(tuple(blocks))


def meet(p: Partition, q: Partition) -> Partition:
    """Coarsest common refinement: all nonempty pairwise block intersections."""
    if p.n != q.n:
        raise DimensionError(f"ground sets differ: {p.n} vs {q.n}")
    return Partition.from_labels(list(zip(p.labels().tolist(), q.labels().tolist())))


@dataclass(frozen=True, eq=False)
class StepProjection:
    """x_P: the orthogonal projection of a kernel onto functions constant on blocks."""

    partition_rows: Partition
    partition_cols: Partition
    values: np.ndarray
    scale: float

    def to_kernel(self) -> Kernel:
        lr = self.partition_rows.labels()
        lc = self.partition_cols.labels()
        return Kernel(self.values[np.ix_(lr, lc)], self.scale)

    def norm(self) -> float:
        sr = np.array(self.partition_rows.sizes, dtype=float)
        sc = np.array(self.partition_cols.sizes, dtype=float)
        return math.sqrt(self.scale * float(np.sum(self.values ** 2 * np.outer(sr, sc))))


def project(k: Kernel, p: Partition, q: Partition | None = None) -> StepProjection:
    """Block averages of ``k`` over p x q (q defaults to p for square kernels)."""
    q = p if q is None else q
    if p.n != k.n or q.n != k.m:
        raise DimensionError(f"partition sizes ({p.n}, {q.n}) do not match kernel {k.shape}")
    pr, pc = p.indicator(), q.indicator()
    sums = pr @ k.values @ pc.T
    counts = np.outer(pr.sum(axis=1), pc.sum(axis=1))
    return StepProjection(p, q, sums / counts, k.scale)


def decimal_fraction(x) -> Fraction:
    """Exact rational for x; floats are read as the decimal they print as, so 0.1 is 1/10."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return Fraction(repr(float(x)))


def balanced_refine(p: Partition, eps: float) -> tuple[Partition, frozenset[int]]:
    """Split every block into chunks of size ceil(t), t = eps * n / |p|.

    Each block leaves at most one remainder chunk of size < t; the indices (in
    the returned partition) of those remainders are the second return value.
    Chunks follow the sorted order of each block, so interval blocks stay
    intervals.
    """
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    t = decimal_fraction(eps) * p.n / len(p)
    size = max(1, math.ceil(t))
    chunks = []
    for b in p.blocks:
        for s in range(0, len(b), size):
            chunks.append(b[s:s + size])
    q = Partition(tuple(chunks))
    small = frozenset(i for i, b in enumerate(q.blocks) if len(b) < t)
    return q, small


def _round_down(v: float, step: Fraction) -> Fraction:
    return math.floor(Fraction(v) / step) * step


def product_round_refine(alpha: Sequence[float], beta: Sequence[float], n_part: Partition, eps: float) -> Partition:
    """Merge blocks of ``n_part`` whose (alpha, beta) values agree after rounding
    down to multiples of eps/2.  The result P >= n_part has |P| <= (1 + 2/eps)^2.
    """
    if not 0 < eps <= 1:
        raise PreconditionError(f"eps must lie in (0, 1], got {eps}")
    alpha, beta = list(alpha), list(beta)
    if len(alpha) != len(n_part) or len(beta) != len(n_part):
        raise DimensionError("alpha and beta must be indexed by the blocks of n_part")
    if any(not 0 <= v <= 1 for v in alpha + beta):
        raise PreconditionError("alpha and beta values must lie in [0, 1]")
    step = Fraction(eps) / 2
    keys = [(_round_down(a, step), _round_down(b, step)) for a, b in zip(alpha, beta)]
    merged: dict = {}
    for key, block in zip(keys, n_part.blocks):
        merged.setdefault(key, []).extend(block)
    return Partition(tuple(tuple(b) for b in merged.values()))


def rectangle_factors(rect: Rectangle, n_part: Partition) -> tuple[list[float], list[float]]:
    """alpha_I = |rows & I|/|I|, beta_J = |cols & J|/|J|; the projection of a
    square rectangle indicator onto n_part x n_part is sum alpha_I beta_J (I x J)."""
    rows, cols = set(rect.rows), set(rect.cols)
    alpha = [len(rows.intersection(b)) / len(b) for b in n_part.blocks]
    beta = [len(cols.intersection(b)) / len(b) for b in n_part.blocks]
    return alpha, beta


def refine_for_rectangle(rect: Rectangle, n_part: Partition, eps: float) -> Partition:
    """Rounded refinement for a single rectangle x = rect."""
    alpha, beta = rectangle_factors(rect, n_part)
    return product_round_refine(alpha, beta, n_part, eps)


def product_step_kernel(alpha, beta, n_part: Partition) -> Kernel:
    """The kernel sum_{I,J} alpha_I beta_J (I x J) on range(n) with scale 1/n^2."""
    lab = n_part.labels()
    a = np.asarray(alpha, dtype=float)[lab]
    b = np.asarray(beta, dtype=float)[lab]
    return Kernel(np.outer(a, b))


def rank1_size_bound(eps: float) -> float:
    return (1 + 2 / eps) ** 2


def combined_size_bound(t_x: float, t_y: float) -> float:
    """Size bound for x + y at accuracy eps from the bounds of x and y at eps/2.

    Refining by the meet of the two coarsenings multiplies their sizes.
    """
    return t_x * t_y
