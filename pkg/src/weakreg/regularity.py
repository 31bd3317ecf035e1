"""
Certified regularity partitions of graphs.

For blocks A, B of a partition Q the irregularity score is

    m(A, B) = max over nonempty C <= A, D <= B of |C||D| |d(C, D) - d(A, B)|

which equals the largest |sum| of the shifted adjacency (adj - d(A, B)) over a
sub-rectangle.  Two functionals are certified:

* subsets:   sum_{A,B} m(A, B)^2 < eps n^2
* intervals: sum_{A,B} m_int(A, B) < eps n^2, with m_int maximizing over
  sub-intervals only.

Partitions are found by energy increment: refine every heavy pair by its
witness, re-balance, and repeat.  Each failing round strictly refines Q and
raises the index ||x_Q||^2 by at least sum m^2 / (n^2 |C||D|) over the
refined pairs, so the loop ends after at most n rounds.  The certificate is
checkable independently of how Q was produced.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DimensionError, PreconditionError, SizeError
from .kernel import EXACT_THRESHOLD, Kernel, alternating_max_rectangle, max_abs_rectangle_sum
from .partitions import Partition, balanced_refine, project

__all__ = [
    "Graph",
    "PairScore",
    "RegularityCertificate",
    "density",
    "irregularity_exact",
    "irregularity_heuristic",
    "interval_irregularity_exact",
    "szemeredi_partition",
    "interval_regularity_partition",
    "interpret_certificate",
    "partition_energy",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on range(n) as a symmetric 0/1 matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DimensionError(f"adjacency must be square, got {adj.shape}")
        if not np.all((adj == 0) | (adj == 1)):
            raise PreconditionError("adjacency must be 0/1")
        adj = adj.astype(np.int64)
        if not np.array_equal(adj, adj.T):
            raise PreconditionError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise PreconditionError("adjacency must have a zero diagonal")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def to_kernel(self) -> Kernel:
        return Kernel(self.adjacency.astype(float))

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Self-loops are dropped; repeated edges collapse."""
        adj = np.zeros((n, n), dtype=np.int64)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise DimensionError(f"edge ({u}, {v}) outside range({n})")
            if u != v:
                adj[u, v] = adj[v, u] = 1
        return cls(adj)

    @classmethod
    def gnp(cls, n: int, p: float, seed: int = 0) -> "Graph":
        rng = np.random.default_rng(seed)
        upper = np.triu(rng.random((n, n)) < p, 1)
        return cls((upper | upper.T).astype(np.int64))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n), dtype=np.int64))


def _as_index(s) -> np.ndarray:
    idx = np.array(sorted(set(int(i) for i in s)), dtype=np.int64)
    return idx


def density(g: Graph, c, d) -> float:
    """e(C, D) / (|C||D|), counting ordered adjacent pairs in C x D."""
    c, d = _as_index(c), _as_index(d)
    if c.size == 0 or d.size == 0:
        raise PreconditionError("density of an empty set")
    return float(g.adjacency[np.ix_(c, d)].sum()) / (c.size * d.size)


def _scaled_deviation(g: Graph, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|A||B| (adj - d(A, B)) on A x B, in exact integers."""
    block = g.adjacency[np.ix_(a, b)]
    return a.size * b.size * block - int(block.sum())


def irregularity_exact(g: Graph, a, b, exact_threshold: int = EXACT_THRESHOLD):
    """Exact m(A, B) with the lexicographically least witness (C, D).

    Enumerates subsets of the smaller block, so the cost is
    O(2^min(|A|,|B|) * max(|A|,|B|)).
    """
    a, b = _as_index(a), _as_index(b)
    if a.size == 0 or b.size == 0:
        raise PreconditionError("irregularity of an empty block")
    if min(a.size, b.size) > exact_threshold:
        raise SizeError(f"blocks of sizes {a.size}, {b.size} exceed exact_threshold={exact_threshold}")
    w = _scaled_deviation(g, a, b)
    best, rows, cols = max_abs_rectangle_sum(w, exact_threshold)
    m = int(best) / (a.size * b.size)
    return m, (tuple(a[list(rows)].tolist()), tuple(b[list(cols)].tolist()))


def irregularity_heuristic(g: Graph, a, b, restarts: int = 8, seed: int = 0):
    """Lower bound on m(A, B) by alternating maximization."""
    a, b = _as_index(a), _as_index(b)
    if a.size == 0 or b.size == 0:
        raise PreconditionError("irregularity of an empty block")
    w = _scaled_deviation(g, a, b)
    _, rows, cols = alternating_max_rectangle(w, restarts, seed)
    m = abs(int(w[np.ix_(rows, cols)].sum())) / (a.size * b.size)
    return m, (tuple(a[list(rows)].tolist()), tuple(b[list(cols)].tolist()))


def _interval_of(s) -> np.ndarray:
    idx = _as_index(s)
    if idx.size == 0:
        raise PreconditionError("empty interval")
    if idx[-1] - idx[0] + 1 != idx.size:
        raise PreconditionError(f"not a contiguous index range: {idx.tolist()}")
    return idx


def interval_irregularity_exact(g: Graph, a, b):
    """max over sub-intervals I <= A, J <= B of |I||J| |d(I, J) - d(A, B)|.

    For every row interval the column sums are turned into prefix sums P; the
    best column interval has |sum| = max(P) - min(P).  O(|A|^2 |B|) in total.
    The witness ``((i0, i1), (j0, j1))`` holds half-open global ranges and is
    the lexicographically least maximizer.
    """
    a, b = _interval_of(a), _interval_of(b)
    w = _scaled_deviation(g, a, b)
    na, nb = w.shape
    ps = np.zeros((na + 1, nb + 1), dtype=np.int64)
    ps[1:, 1:] = w.cumsum(axis=0).cumsum(axis=1)
    i0, i1 = np.triu_indices(na + 1, 1)  # all row intervals [i0, i1), lexicographic
    diffs = ps[i1] - ps[i0]
    spread = diffs.max(axis=1) - diffs.min(axis=1)
    best = int(spread.max())
    r = int(np.nonzero(spread == best)[0][0])
    if best == 0:
        j0, j1 = 0, 1
    else:
        row = diffs[r]
        j0 = j1 = None
        for s in range(nb):
            hits = np.nonzero(np.abs(row[s + 1:] - row[s]) == best)[0]
            if hits.size:
                j0, j1 = s, s + 1 + int(hits[0])
                break
    wit = ((int(a[0] + i0[r]), int(a[0] + i1[r])), (int(b[0] + j0), int(b[0] + j1)))
    return best / (na * nb), wit


@dataclass(frozen=True)
class PairScore:
    """m(A, B) with its witness; interval witnesses are half-open ranges."""

    score: float
    witness: tuple
    exact: bool
    interval: bool = False

    def witness_sets(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        c, d = self.witness
        if self.interval:
            return tuple(range(*c)), tuple(range(*d))
        return c, d

    def transposed(self) -> "PairScore":
        return PairScore(self.score, (self.witness[1], self.witness[0]), self.exact, self.interval)


@dataclass(eq=False)
class RegularityCertificate:
    partition: Partition
    small_blocks: frozenset
    pair_scores: dict
    total: float
    eps: float
    functional: str  # "squared" (subset witnesses) or "unsquared" (interval witnesses)
    n: int
    irregular_pairs: frozenset = frozenset()
    rounds: list = field(default_factory=list)
    round_bound: int = 0

    @property
    def threshold(self) -> float:
        return self.eps * self.n ** 2

    @property
    def exact(self) -> bool:
        return all(s.exact for s in self.pair_scores.values())

    @property
    def passed(self) -> bool:
        return self.total < self.threshold

    def recompute_total(self) -> float:
        power = 2 if self.functional == "squared" else 1
        return sum(s.score ** power for _, s in sorted(self.pair_scores.items()))

    def good_blocks(self) -> list[int]:
        return [i for i in range(len(self.partition)) if i not in self.small_blocks]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "eps": self.eps,
            "functional": self.functional,
            "partition": self.partition.to_dict(),
            "small_blocks": sorted(self.small_blocks),
            "num_blocks": len(self.partition),
            "total": self.total,
            "threshold": self.threshold,
            "passed": self.passed,
            "exact": self.exact,
            "pair_scores": [
                {"a": i, "b": j, "score": s.score, "witness": [list(s.witness[0]), list(s.witness[1])],
                 "exact": s.exact}
                for (i, j), s in sorted(self.pair_scores.items())
            ],
            "irregular_pairs": sorted(list(p) for p in self.irregular_pairs),
            "rounds": self.rounds,
            "round_bound": self.round_bound,
        }


def partition_energy(g: Graph, q: Partition) -> float:
    """||x_Q||^2 for the normalized graph kernel."""
    return project(g.to_kernel(), q).norm() ** 2


def _irregular_pairs(q: Partition, small, scores: dict, eps: float) -> frozenset:
    sizes = q.sizes
    root = math.sqrt(eps)
    return frozenset(
        (i, j) for (i, j), s in scores.items()
        if i not in small and j not in small and s.score >= root * sizes[i] * sizes[j]
    )


def _score_subsets(g: Graph, q: Partition, exact_threshold: int, restarts: int, seed: int, threads: int) -> dict:
    blocks = q.blocks
    pairs = [(i, j) for i in range(len(blocks)) for j in range(i, len(blocks))]

    def score(pair):
        i, j = pair
        a, b = blocks[i], blocks[j]
        if min(len(a), len(b)) <= exact_threshold:
            m, wit = irregularity_exact(g, a, b, exact_threshold)
            return PairScore(m, wit, True)
        m, wit = irregularity_heuristic(g, a, b, restarts, seed + i * len(blocks) + j)
        return PairScore(m, wit, False)

    results = _map(score, pairs, threads)
    return _mirror(pairs, results)


def _score_intervals(g: Graph, q: Partition, threads: int) -> dict:
    blocks = q.blocks
    pairs = [(i, j) for i in range(len(blocks)) for j in range(i, len(blocks))]

    def score(pair):
        m, wit = interval_irregularity_exact(g, blocks[pair[0]], blocks[pair[1]])
        return PairScore(m, wit, True, interval=True)

    results = _map(score, pairs, threads)
    return _mirror(pairs, results)


def _map(fn, items, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _mirror(pairs, results) -> dict:
    # m(B, A) = m(A, B) with the witness transposed, since adjacency is symmetric
    scores = {}
    for (i, j), s in zip(pairs, results):
        scores[(i, j)] = s
        if i != j:
            scores[(j, i)] = s.transposed()
    return scores


def _refine_by_sets(q: Partition, cuts: dict) -> Partition:
    """Split every block into the atoms of the cut sets assigned to it."""
    lab = q.labels()
    n = q.n
    sig = [[lab[v]] for v in range(n)]
    for bi, sets in sorted(cuts.items()):
        for s in sets:
            members = set(s)
            for v in q.blocks[bi]:
                sig[v].append(v in members)
    return Partition.from_labels([tuple(s) for s in sig])


def _refine_by_cut_points(q: Partition, cuts: dict) -> Partition:
    """Cut every interval block at the given interior points."""
    blocks = []
    for bi, b in enumerate(q.blocks):
        points = sorted({p for p in cuts.get(bi, ()) if b[0] < p <= b[-1]})
        edges = [b[0]] + points + [b[-1] + 1]
        blocks.extend(tuple(range(s, e)) for s, e in zip(edges, edges[1:]))
    return Partition(tuple(blocks))


def _regularity_loop(g: Graph, q0: Partition, eps: float, functional: str, scorer, refiner, max_rounds):
    n = g.n
    power = 2 if functional == "squared" else 1
    q, small = balanced_refine(q0, eps)
    rounds = []
    round_bound = n if max_rounds is None else max_rounds
    energy = partition_energy(g, q)
    cert = None
    for rnd in range(round_bound + 1):
        scores = scorer(q)
        total = sum(s.score ** power for _, s in sorted(scores.items()))
        cert = RegularityCertificate(
            partition=q, small_blocks=small, pair_scores=scores, total=total, eps=eps,
            functional=functional, n=n, irregular_pairs=_irregular_pairs(q, small, scores, eps),
            rounds=rounds, round_bound=round_bound,
        )
        record = {"round": rnd, "blocks": len(q), "total": total, "energy": energy}
        if cert.passed:
            rounds.append(record)
            return cert
        if rnd == round_bound:
            rounds.append(record)
            break
        # heavy pairs: the remaining ones sum to less than the threshold
        heavy_cut = eps * n * n / len(q) ** 2
        heavy = [(i, j) for (i, j), s in sorted(scores.items()) if i <= j and s.score ** power >= heavy_cut]
        cuts: dict = {}
        increment_bound = 0.0
        for i, j in heavy:
            s = scores[(i, j)]
            cuts.setdefault(i, []).append(s.witness[0])
            cuts.setdefault(j, []).append(s.witness[1])
            c, d = s.witness_sets()
            increment_bound += s.score ** 2 / (n * n * len(c) * len(d))
        refined = refiner(q, cuts)
        if len(refined) <= len(q):
            raise AssertionError("a failing round must strictly refine the partition")
        refined_energy = partition_energy(g, refined)
        q, small = balanced_refine(refined, eps)
        new_energy = partition_energy(g, q)
        record.update({
            "heavy_pairs": len(heavy),
            "increment_bound": increment_bound,
            "energy_after_refine": refined_energy,
            "increment": refined_energy - energy,
        })
        if refined_energy - energy < increment_bound - 1e-12:
            raise AssertionError(f"energy increment {refined_energy - energy} below its bound {increment_bound}")
        rounds.append(record)
        energy = new_energy
    raise ConvergenceError(f"no certificate after {round_bound} rounds", cert)


def szemeredi_partition(g: Graph, p: Partition | None = None, eps: float = 0.25, seed: int = 0,
                        exact_threshold: int = EXACT_THRESHOLD, restarts: int = 8, threads: int = 1,
                        max_rounds: int | None = None) -> RegularityCertificate:
    """An eps-balanced refinement Q of p with sum_{A,B} m(A, B)^2 < eps n^2.

    Pairs whose smaller block exceeds ``exact_threshold`` are scored by the
    heuristic; such a certificate is flagged non-exact.
    """
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
    p = Partition.trivial(g.n) if p is None else p
    if p.n != g.n:
        raise DimensionError(f"partition of {p.n} points for a graph on {g.n} vertices")
    return _regularity_loop(
        g, p, eps, "squared",
        lambda q: _score_subsets(g, q, exact_threshold, restarts, seed, threads),
        _refine_by_sets, max_rounds,
    )


def interval_regularity_partition(g: Graph, p: Partition | None = None, eps: float = 0.2,
                                  threads: int = 1, max_rounds: int | None = None) -> RegularityCertificate:
    """An interval refinement Q of the interval partition p with sum m_int(A, B) < eps n^2.

    All intervals of Q have the same length except small ones covering at
    most eps n vertices.  Scoring is always exact.
    """
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
    p = Partition.trivial(g.n) if p is None else p
    if p.n != g.n:
        raise DimensionError(f"partition of {p.n} points for a graph on {g.n} vertices")
    if not p.is_contiguous:
        raise PreconditionError("interval regularity needs a partition into intervals")

    def refiner(q, cuts):
        points = {bi: [v for c in cs for v in c] for bi, cs in cuts.items()}
        return _refine_by_cut_points(q, points)

    return _regularity_loop(g, p, eps, "unsquared", lambda q: _score_intervals(g, q, threads), refiner, max_rounds)


def interpret_certificate(c: RegularityCertificate) -> dict:
    """Read a certificate as a statement about irregular pairs.

    With Q'' the non-small blocks and Z the pairs in Q'' x Q'' with
    m(A, B) >= sqrt(eps)|A||B|, checks

        sum_Z |A||B| <= sqrt(eps) n^2
        sum_{Q'' x Q''} |A||B| >= (1 - 2 eps) n^2
        |Z| < 2 sqrt(eps) |Q''|^2

    and, for every other pair of Q'', that each sub-rectangle covering at
    least a eps^(1/4) fraction of A x B has density within eps^(1/4) of d(A, B).
    """
    eps, n = c.eps, c.n
    if eps > 0.25:
        raise PreconditionError(f"interpretation needs eps <= 1/4, got {eps}")
    sizes = c.partition.sizes
    good = c.good_blocks()
    root, quart = math.sqrt(eps), eps ** 0.25
    z = sorted(c.irregular_pairs)
    z_mass = sum(sizes[i] * sizes[j] for i, j in z)
    good_mass = sum(sizes[i] for i in good) ** 2
    checks = []

    def add(name, passed, **detail):
        checks.append({"name": name, "passed": bool(passed), **detail})

    small_mass = sum(sizes[i] for i in c.small_blocks)
    add("balanced", len({sizes[i] for i in good}) <= 1 and small_mass <= eps * n,
        small_mass=small_mass, bound=eps * n)
    add("irregular_mass", z_mass <= root * n * n, value=z_mass, bound=root * n * n)
    add("good_mass", good_mass >= (1 - 2 * eps) * n * n, value=good_mass, bound=(1 - 2 * eps) * n * n)
    add("irregular_count", len(z) < 2 * root * len(good) ** 2, value=len(z), bound=2 * root * len(good) ** 2)

    worst = 0.0
    regular_ok = True
    witness_ok = True
    for i in good:
        for j in good:
            if (i, j) in c.irregular_pairs:
                continue
            s = c.pair_scores[(i, j)]
            area = sizes[i] * sizes[j]
            bound = s.score / (quart * area)  # deviation bound for rectangles of area >= quart * |A||B|
            worst = max(worst, bound)
            regular_ok &= bound < quart
            cw, dw = s.witness_sets()
            if s.score > 0 and len(cw) * len(dw) >= quart * area:
                witness_ok &= s.score / (len(cw) * len(dw)) < quart
    add("regular_pairs", regular_ok, worst_deviation_bound=worst, bound=quart)
    add("witness_deviation", witness_ok)
    exact = c.exact
    passed = all(ch["passed"] for ch in checks)
    return {
        "eps": eps,
        "q_good": len(good),
        "irregular_pairs": [list(p) for p in z],
        "checks": checks,
        "passed": passed,
        "exact": exact,
        "proved": passed and exact and c.passed,
    }
