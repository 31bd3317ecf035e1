"""Fast invariant sweeps used by ``weakreg selftest``."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .greedy import greedy_decompose, verify_certificate
from .kernel import (Kernel, Rectangle, cut_norm_exact, cut_norm_heuristic, holder_chain_check,
                     scalar_power_inequality_check)
from .partitions import (Partition, balanced_refine, decimal_fraction, product_round_refine, product_step_kernel,
                         project)
from .poly import bombieri_inner, power_form
from .regularity import Graph, interval_irregularity_exact


def _random_partition(rng, n, parts):
    labels = rng.integers(parts, size=n)
    return Partition.from_labels(labels.tolist())


def _disjoint_rectangles(rng, n, count):
    rows = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=count - 1, replace=False)) if count > 1 else []
    out = []
    for chunk in np.split(rows, cuts):
        cols = rng.choice(n, size=rng.integers(1, n + 1), replace=False)
        out.append(Rectangle(tuple(chunk.tolist()), tuple(cols.tolist())))
    return out


def check_cut_norm(rng, trials=40) -> int:
    bad = 0
    for _ in range(trials):
        k = Kernel(rng.normal(size=(rng.integers(1, 8), rng.integers(1, 8))))
        exact, _ = cut_norm_exact(k)
        low, _ = cut_norm_heuristic(k, 4, int(rng.integers(1 << 30)))
        bad += low > exact + 1e-12
    return bad


def check_greedy(rng, trials=10) -> int:
    bad = 0
    for _ in range(trials):
        a = Kernel(rng.choice([-1.0, 1.0], size=(8, 8)))
        k = int(rng.choice([4, 9]))
        cert = greedy_decompose(a, k)
        bad += not verify_certificate(a, cert).passed
    return bad


def check_holder(rng, trials=200) -> int:
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 8))
        y = Kernel(rng.normal(size=(n, n)))
        rs = _disjoint_rectangles(rng, n, int(rng.integers(1, n + 1)))
        bad += not holder_chain_check(y, rs, float(rng.uniform(0.05, 2.0)))
    return bad


def check_scalar(rng, trials=2000) -> int:
    bad = 0
    for _ in range(trials):
        a, b = sorted(rng.random(2), reverse=True)
        eps = float(rng.uniform(1e-3, 1))
        t = float(rng.uniform(eps, 2))
        bad += not scalar_power_inequality_check(float(a), float(b), t, eps)
    return bad


def check_balanced(rng, trials=100) -> int:
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(1, 500))
        p = _random_partition(rng, n, int(rng.integers(1, 20)))
        eps = float(rng.choice([0.1, 0.3, 0.5]))
        q, small = balanced_refine(p, eps)
        e = decimal_fraction(eps)
        bad += not (len(q) * e <= (1 + e) * len(p))
        bad += not (sum(len(q[i]) for i in small) <= e * n)
        bad += not q.refines(p)
    return bad


def check_product_round(rng, trials=100) -> int:
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 40))
        part = _random_partition(rng, n, int(rng.integers(1, 10)))
        alpha, beta = rng.random(len(part)), rng.random(len(part))
        eps = float(rng.uniform(0.05, 1))
        p = product_round_refine(alpha, beta, part, eps)
        x = product_step_kernel(alpha, beta, part)
        err = (x - project(x, p).to_kernel()).norm()
        bad += len(p) > (1 + 2 / eps) ** 2 or err > eps + 1e-10 or not part.refines(p)
    return bad


def check_bombieri(rng, trials=100) -> int:
    bad = 0
    for _ in range(trials):
        n, d = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        a, b = rng.normal(size=n), rng.normal(size=n)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        bad += abs(bombieri_inner(power_form(a, d), power_form(b, d)) - (a @ b) ** d) > 1e-9
    return bad


def check_interval(rng, trials=5) -> int:
    bad = 0
    for _ in range(trials):
        g = Graph.gnp(10, 0.5, int(rng.integers(1 << 30)))
        a, b = range(0, 6), range(3, 10)
        m, _ = interval_irregularity_exact(g, a, b)
        adj = g.adjacency
        d = adj[np.ix_(list(a), list(b))].mean()
        brute = 0.0
        for i0, i1 in itertools.combinations(range(7), 2):
            for j0, j1 in itertools.combinations(range(8), 2):
                brute = max(brute, abs(adj[i0:i1, 3 + j0:3 + j1].sum() - d * (i1 - i0) * (j1 - j0)))
        bad += not math.isclose(m, brute, abs_tol=1e-9)
    return bad


SUITES = {
    "cut_norm_heuristic_below_exact": check_cut_norm,
    "greedy_certificates_verify": check_greedy,
    "holder_chain": check_holder,
    "scalar_power_inequality": check_scalar,
    "balanced_refinement_bounds": check_balanced,
    "product_rounding_bounds": check_product_round,
    "bombieri_identity": check_bombieri,
    "interval_scores_match_brute_force": check_interval,
}


def run(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    results = {name: int(fn(rng)) for name, fn in SUITES.items()}
    return {"violations": results, "passed": not any(results.values())}
