"""
Greedy weak-regularity decomposition.

Starting from a kernel a with ||a|| <= 1, repeatedly pick the rectangle r
maximizing |<r, a_i>| and subtract its projection:

    a_{i+1} = a_i - <r, a_i> r

Each step lowers the energy ||a_i||^2 by at least <r, a_i>^2, so with steps
only taken while |<r, a_i>| > 1/sqrt(k) at most k terms are ever needed and
the remainder has cut norm <= 1/sqrt(k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .kernel import EXACT_THRESHOLD, Kernel, Rectangle, cut_norm, cut_norm_exact, inner_product

__all__ = ["DecompositionCertificate", "greedy_decompose", "verify_certificate", "CheckReport"]


@dataclass(frozen=True, eq=False)
class DecompositionCertificate:
    terms: tuple[tuple[float, Rectangle], ...]
    residual: Kernel
    energies: tuple[float, ...]
    final_cut_bound: float
    final_witness: Rectangle
    mode: str
    k: int

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def approximation(self) -> Kernel:
        out = np.zeros(self.residual.shape)
        for coeff, rect in self.terms:
            out[np.ix_(rect.rows, rect.cols)] += coeff
        return Kernel(out, self.residual.scale)

    def to_dict(self) -> dict:
        return {
            "terms": [{"coeff": c, **r.to_dict()} for c, r in self.terms],
            "energies": list(self.energies),
            "final_cut_bound": self.final_cut_bound,
            "final_witness": self.final_witness.to_dict(),
            "mode": self.mode,
            "k": self.k,
            "scale": self.residual.scale,
            "residual": self.residual.values.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecompositionCertificate":
        return cls(
            terms=tuple((float(t["coeff"]), Rectangle.from_dict(t)) for t in d["terms"]),
            residual=Kernel(np.array(d["residual"], dtype=float), d["scale"]),
            energies=tuple(float(e) for e in d["energies"]),
            final_cut_bound=float(d["final_cut_bound"]),
            final_witness=Rectangle.from_dict(d["final_witness"]),
            mode=d["mode"],
            k=int(d["k"]),
        )


def greedy_decompose(a: Kernel, k: int, mode: str = "exact", seed: int = 0,
                     exact_threshold: int = EXACT_THRESHOLD, restarts: int = 8) -> DecompositionCertificate:
    """Approximate ``a`` within cut distance 1/sqrt(k) by at most k weighted rectangles.

    The coefficient of each term is the signed inner product <r, a_i>, so the
    sign of r is folded into it.  In heuristic mode the stopping test uses the
    heuristic lower bound, so the final bound certifies nothing about the
    true cut norm of the residual.
    """
    if k < 1:
        raise PreconditionError("k must be at least 1")
    if a.norm() > 1 + 1e-12:
        raise PreconditionError(
            f"||a|| = {a.norm():.6g} > 1; rescale the kernel (divide values by its norm) first"
        )
    threshold = 1 / math.sqrt(k)
    values = np.array(a.values)
    terms: list[tuple[float, Rectangle]] = []
    energies = [a.norm() ** 2]

    def best_rect(step):
        current = Kernel(values, a.scale)
        _, rect = cut_norm(current, mode, exact_threshold=exact_threshold, restarts=restarts, seed=seed + step)
        return rect, inner_product(current, rect)

    while True:
        rect, coeff = best_rect(len(terms))
        if abs(coeff) <= threshold or len(terms) == k:
            break
        terms.append((coeff, rect))
        values[np.ix_(rect.rows, rect.cols)] -= coeff
        energies.append(a.scale * float(np.sum(values * values)))

    if mode == "exact" and abs(coeff) > threshold:
        # k increments above 1/sqrt(k) would push the energy below zero
        raise AssertionError(f"greedy used all {k} terms but the residual cut norm is {abs(coeff)}")
    return DecompositionCertificate(
        terms=tuple(terms),
        residual=Kernel(values, a.scale),
        energies=tuple(energies),
        final_cut_bound=abs(coeff),
        final_witness=rect,
        mode=mode,
        k=k,
    )


@dataclass
class CheckReport:
    """Named pass/fail checks with free-form details."""

    checks: list[dict] = field(default_factory=list)

    def add(self, name: str, passed: bool, **detail):
        self.checks.append({"name": name, "passed": bool(passed), **detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c["name"] for c in self.checks if not c["passed"]]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "failed": self.failed, "checks": self.checks}


def verify_certificate(a: Kernel, c: DecompositionCertificate, mode: str = "exact",
                       exact_threshold: int = EXACT_THRESHOLD, tol: float = 1e-10) -> CheckReport:
    """Re-derive everything a certificate claims from the input kernel."""
    report = CheckReport()
    if a.shape != c.residual.shape:
        report.add("shape", False, expected=list(a.shape), got=list(c.residual.shape))
        return report
    recomputed = a.values - c.approximation().values
    err = float(np.max(np.abs(recomputed - c.residual.values)))
    report.add("residual", err <= tol, max_abs_error=err)
    report.add("term_count", len(c.terms) <= c.k, terms=len(c.terms), k=c.k)

    # walk the chain in the recorded order
    cur = np.array(a.values)
    chain_ok, decrease_ok, identity_ok = True, True, True
    worst_identity = 0.0
    energies = [a.scale * float(np.sum(cur * cur))]
    for coeff, rect in c.terms:
        ip = a.scale * float(cur[np.ix_(rect.rows, rect.cols)].sum())
        before = energies[-1]
        cur[np.ix_(rect.rows, rect.cols)] -= coeff
        after = a.scale * float(np.sum(cur * cur))
        energies.append(after)
        rnorm2 = a.scale * rect.size
        expected = before - 2 * coeff * ip + coeff ** 2 * rnorm2
        worst_identity = max(worst_identity, abs(after - expected))
        identity_ok &= abs(after - expected) <= tol
        decrease_ok &= after <= before - ip ** 2 + 1e-12
        chain_ok &= abs(coeff - ip) <= tol
    report.add("coefficients_are_inner_products", chain_ok)
    report.add("energy_identity", identity_ok, max_error=worst_identity)
    report.add("energy_decrease", decrease_ok)
    if len(energies) == len(c.energies):
        e_err = max(abs(x - y) for x, y in zip(energies, c.energies))
        report.add("recorded_energies", e_err <= tol, max_error=e_err)
    else:
        report.add("recorded_energies", False, expected=len(energies), got=len(c.energies))

    res = Kernel(recomputed, a.scale)
    bound = 1 / math.sqrt(c.k)
    if mode == "exact":
        value, witness = cut_norm_exact(res, exact_threshold)
        if c.mode == "exact":
            report.add("final_cut_bound", abs(value - c.final_cut_bound) <= tol,
                       recomputed=value, recorded=c.final_cut_bound)
        else:
            report.add("final_cut_bound", c.final_cut_bound <= value + tol,
                       recomputed=value, recorded=c.final_cut_bound)
        report.add("weak_regularity_bound", value <= bound + 1e-12, cut_norm=value, bound=bound)
    else:
        ip = abs(inner_product(res, c.final_witness))
        report.add("final_cut_bound", abs(ip - c.final_cut_bound) <= tol, recomputed=ip, recorded=c.final_cut_bound)
        report.add("weak_regularity_bound", c.final_cut_bound <= bound + 1e-12, exact=False)
    return report
