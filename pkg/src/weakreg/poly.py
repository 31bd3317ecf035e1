"""
Homogeneous polynomials as an inner product space spanned by powers of
linear forms.

Under the Bombieri (apolar) inner product

    <p, q> = sum_alpha (alpha! / d!) p_alpha q_alpha

one has <(a.x)^d, (b.x)^d> = (a.b)^d, and <p, (a.x)^d> = p(a).  The greedy
decomposition therefore subtracts p(a) (a.x)^d for a unit a maximizing |p(a)|.

Concentration on the first k variables is measured with the plain coefficient
norm: writing p = sum_mu mu p_mu over monomials mu in x_1..x_k,

    conc_k(p) = sum_{deg mu < d} max_{|y| = 1} p_mu(y)^2 / ||p||^2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .errors import DimensionError, PreconditionError

__all__ = [
    "HomogeneousPoly",
    "PowerTerm",
    "monomials",
    "power_form",
    "bombieri_inner",
    "bombieri_norm",
    "coeff_norm",
    "best_rank1",
    "greedy_power_decompose",
    "rotate",
    "split_first_vars",
    "sphere_max_sq",
    "concentration",
    "concentration_terms",
    "concentrate_pipeline",
    "orthonormal_completion",
]

Exponent = tuple[int, ...]


@lru_cache(maxsize=None)
def monomials(n: int, d: int) -> tuple[Exponent, ...]:
    """Exponent vectors of degree d in n variables, graded-lex (x_1^d first)."""
    if n == 0:
        return ((),) if d == 0 else ()
    out = []
    for first in range(d, -1, -1):
        for rest in monomials(n - 1, d - first):
            out.append((first,) + rest)
    return tuple(out)


def _factorial_prod(alpha: Exponent) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def multinomial(alpha: Exponent) -> int:
    return math.factorial(sum(alpha)) // _factorial_prod(alpha)


@dataclass(frozen=True, eq=False)
class HomogeneousPoly:
    degree: int
    nvars: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for alpha, c in dict(self.coeffs).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.nvars or sum(alpha) != self.degree or min(alpha, default=0) < 0:
                raise DimensionError(f"exponent {alpha} is not of degree {self.degree} in {self.nvars} variables")
            c = float(c)
            if not math.isfinite(c):
                raise PreconditionError("coefficients must be finite")
            if c != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + c
        object.__setattr__(self, "coeffs", {a: c for a, c in clean.items() if c != 0.0})

    def __getitem__(self, alpha) -> float:
        return self.coeffs.get(tuple(alpha), 0.0)

    def dense(self) -> np.ndarray:
        return np.array([self[a] for a in monomials(self.nvars, self.degree)])

    @classmethod
    def from_dense(cls, n: int, d: int, values) -> "HomogeneousPoly":
        return cls(d, n, dict(zip(monomials(n, d), np.asarray(values, dtype=float).tolist())))

    @classmethod
    def zero(cls, n: int, d: int) -> "HomogeneousPoly":
        return cls(d, n, {})

    @classmethod
    def random(cls, n: int, d: int, rng: np.random.Generator) -> "HomogeneousPoly":
        return cls.from_dense(n, d, rng.normal(size=len(monomials(n, d))))

    def __add__(self, other: "HomogeneousPoly") -> "HomogeneousPoly":
        _check_same_space(self, other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0.0) + c
        return HomogeneousPoly(self.degree, self.nvars, out)

    def __mul__(self, s: float) -> "HomogeneousPoly":
        return HomogeneousPoly(self.degree, self.nvars, {a: s * c for a, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __sub__(self, other: "HomogeneousPoly") -> "HomogeneousPoly":
        return self + (-1.0) * other

    @cached_property
    def _arrays(self):
        # exponent matrix, coefficients, and the derivative tables used by gradient
        exps = np.array(list(self.coeffs), dtype=np.int64).reshape(len(self.coeffs), self.nvars)
        cs = np.array(list(self.coeffs.values()), dtype=float)
        eye = np.eye(self.nvars, dtype=np.int64)
        lowered = np.maximum(exps[None, :, :] - eye[:, None, :], 0)
        weights = exps.T * cs[None, :]
        return exps, cs, lowered, weights

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        exps, cs, _, _ = self._arrays
        return float(cs @ np.prod(x[None, :] ** exps, axis=1))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _, _, lowered, weights = self._arrays
        return np.sum(weights * np.prod(x ** lowered, axis=2), axis=1)

    def padded(self, n: int) -> "HomogeneousPoly":
        if n < self.nvars:
            raise DimensionError("cannot pad to fewer variables")
        extra = (0,) * (n - self.nvars)
        return HomogeneousPoly(self.degree, n, {a + extra: c for a, c in self.coeffs.items()})

    def tensor(self) -> np.ndarray:
        """The symmetric tensor T with p(x) = T(x, ..., x)."""
        n, d = self.nvars, self.degree
        if n ** d > 5_000_000:
            raise DimensionError(f"symmetric tensor with {n}^{d} entries is too large")
        t = np.zeros((n,) * d)
        for a, c in self.coeffs.items():
            idx = [i for i, ai in enumerate(a) for _ in range(ai)]
            val = c / multinomial(a)
            for perm in set(itertools.permutations(idx)):
                t[perm] = val
        return t

    @classmethod
    def from_tensor(cls, t: np.ndarray) -> "HomogeneousPoly":
        d = t.ndim
        n = t.shape[0] if d else 0
        coeffs = {}
        for a in monomials(n, d):
            idx = tuple(i for i, ai in enumerate(a) for _ in range(ai))
            coeffs[a] = multinomial(a) * t[idx]
        return cls(d, n, coeffs)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "nvars": self.nvars,
            "terms": [{"exponents": list(a), "coeff": self.coeffs[a]}
                      for a in monomials(self.nvars, self.degree) if a in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HomogeneousPoly":
        coeffs: dict = {}
        for t in d["terms"]:
            a = tuple(t["exponents"])
            coeffs[a] = coeffs.get(a, 0.0) + float(t["coeff"])
        return cls(int(d["degree"]), int(d["nvars"]), coeffs)


def _check_same_space(p: HomogeneousPoly, q: HomogeneousPoly):
    if p.degree != q.degree:
        raise DimensionError(f"degree mismatch: {p.degree} vs {q.degree}")
    if p.nvars != q.nvars:
        raise DimensionError(f"variable count mismatch: {p.nvars} vs {q.nvars}")


@dataclass(frozen=True)
class PowerTerm:
    """coefficient * (direction . x)^d with a unit direction."""

    coefficient: float
    direction: tuple[float, ...]
    exact: bool = False

    def __post_init__(self):
        a = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(a) - 1) > 1e-12:
            raise PreconditionError("direction must be a unit vector")
        object.__setattr__(self, "direction", tuple(a.tolist()))

    def to_poly(self, d: int) -> HomogeneousPoly:
        return self.coefficient * power_form(self.direction, d)


def power_form(a, d: int) -> HomogeneousPoly:
    """(a.x)^d expanded: coefficient of x^alpha is (d!/alpha!) a^alpha."""
    a = np.asarray(a, dtype=float)
    if abs(np.linalg.norm(a) - 1) > 1e-12:
        raise PreconditionError(f"power_form needs a unit vector, got norm {np.linalg.norm(a)}")
    n = a.size
    return HomogeneousPoly(d, n, {al: multinomial(al) * float(np.prod(a ** np.array(al)))
                                  for al in monomials(n, d)})


def bombieri_inner(p: HomogeneousPoly, q: HomogeneousPoly) -> float:
    if p.degree != q.degree:
        raise DimensionError(f"degree mismatch: {p.degree} vs {q.degree}")
    n = max(p.nvars, q.nvars)
    p, q = p.padded(n), q.padded(n)
    fd = math.factorial(p.degree)
    return float(sum(_factorial_prod(a) / fd * c * q[a] for a, c in p.coeffs.items()))


def bombieri_norm(p: HomogeneousPoly) -> float:
    return math.sqrt(max(bombieri_inner(p, p), 0.0))


def coeff_norm(p: HomogeneousPoly) -> float:
    return math.sqrt(sum(c * c for c in p.coeffs.values()))


def _quadratic_matrix(p: HomogeneousPoly) -> np.ndarray:
    """Symmetric M with p(x) = x^T M x for a quadratic form."""
    n = p.nvars
    m = np.zeros((n, n))
    for a, c in p.coeffs.items():
        idx = [i for i, ai in enumerate(a) for _ in range(ai)]
        i, j = idx
        if i == j:
            m[i, i] += c
        else:
            m[i, j] += c / 2
            m[j, i] += c / 2
    return m


def _canonical_sign(a: np.ndarray) -> np.ndarray:
    nz = np.nonzero(np.abs(a) > 1e-12)[0]
    return -a if nz.size and a[nz[0]] < 0 else a


def _sshopm(p: HomogeneousPoly, x: np.ndarray, shift: float, max_iter: int, tol: float) -> np.ndarray:
    """Shifted symmetric higher-order power iteration ascending p on the sphere."""
    d = p.degree
    for _ in range(max_iter):
        y = p.gradient(x) / d + shift * x
        ny = np.linalg.norm(y)
        if ny == 0:
            break
        y /= ny
        if np.linalg.norm(y - x) < tol:
            x = y
            break
        x = y
    return x


def best_rank1(p: HomogeneousPoly, restarts: int = 8, seed: int = 0,
               max_iter: int = 2000, tol: float = 1e-13) -> PowerTerm:
    """Unit a (approximately) maximizing |<p, (a.x)^d>| = |p(a)|.

    Quadratics use the eigenvector of the largest |eigenvalue| and are flagged
    exact; higher degrees run shifted power iteration from random starts.
    """
    if not p.coeffs:
        raise PreconditionError("best_rank1 of the zero polynomial")
    n, d = p.nvars, p.degree
    if d == 1:
        a = p.dense()
        a = a / np.linalg.norm(a)
        return PowerTerm(p(a), tuple(a), exact=True)
    if d == 2:
        w, v = np.linalg.eigh(_quadratic_matrix(p))
        i = int(np.argmax(np.abs(w)))
        a = _canonical_sign(v[:, i])
        a = a / np.linalg.norm(a)
        return PowerTerm(p(a), tuple(a), exact=True)
    rng = np.random.default_rng(seed)
    shift = (d - 1) * bombieri_norm(p)
    starts = [np.eye(n)[int(np.argmax(np.abs(p.gradient(np.ones(n) / math.sqrt(n)))))]]
    starts += [x / np.linalg.norm(x) for x in rng.normal(size=(restarts, n))]
    best = None
    for x0 in starts:
        for sign in ((1.0,) if d % 2 else (1.0, -1.0)):
            x = _sshopm(sign * p, x0, shift, max_iter, tol)
            if d % 2:
                x = x if p(x) >= 0 else -x
            else:
                x = _canonical_sign(x)
            val = abs(p(x))
            # first start wins ties, so the result is a pure function of the seed
            if best is None or val > best[0] + 1e-14:
                best = (val, x)
    a = best[1] / np.linalg.norm(best[1])
    return PowerTerm(p(a), tuple(a), exact=False)


def greedy_power_decompose(p: HomogeneousPoly, k: int, restarts: int = 8, seed: int = 0, tol: float = 0.0):
    """Greedy sum of powers of linear forms in the Bombieri geometry.

    Returns ``(terms, residual, energies)`` with energies[i] = ||residual_i||^2
    (Bombieri) for the residual before term i, plus the final one.
    """
    if k < 1:
        raise PreconditionError("k must be at least 1")
    residual = p
    terms: list[PowerTerm] = []
    energies = [bombieri_inner(p, p)]
    for step in range(k):
        if not residual.coeffs or energies[-1] <= tol:
            break
        term = best_rank1(residual, restarts, seed + step)
        terms.append(term)
        residual = residual - term.to_poly(p.degree)
        energies.append(bombieri_inner(residual, residual))
    return terms, residual, energies


def rotate(p: HomogeneousPoly, q) -> HomogeneousPoly:
    """The polynomial x -> p(Q x) for orthogonal Q."""
    q = np.asarray(q, dtype=float)
    n = p.nvars
    if q.shape != (n, n):
        raise DimensionError(f"rotation must be {n}x{n}, got {q.shape}")
    if np.max(np.abs(q.T @ q - np.eye(n))) > 1e-10:
        raise PreconditionError("rotation matrix is not orthogonal")
    t = p.tensor()
    for _ in range(p.degree):
        # contract the leading axis with Q and append the new axis at the end
        t = np.tensordot(t, q, axes=([0], [0]))
    return HomogeneousPoly.from_tensor(t) if p.degree else p


def split_first_vars(p: HomogeneousPoly, k: int) -> dict:
    """p = sum_mu mu p_mu with mu over monomials in the first k variables.

    Returns {mu: p_mu}, p_mu a homogeneous polynomial in the last n-k variables.
    """
    n, d = p.nvars, p.degree
    if not 0 <= k <= n:
        raise DimensionError(f"k={k} outside [0, {n}]")
    parts: dict = {}
    for a, c in p.coeffs.items():
        parts.setdefault(a[:k], {})[a[k:]] = c
    return {mu: HomogeneousPoly(d - sum(mu), n - k, cs) for mu, cs in parts.items()}


def _binary_form_max_sq(f: HomogeneousPoly) -> float:
    """max over the unit circle of f^2 for a binary form, via critical points.

    Along y = s x the value is f(1, s)^2 / (1 + s^2)^e; critical s solve
    f'(s)(1 + s^2) - e s f(s) = 0.  The point x = 0 is checked separately.
    """
    e = f.degree
    g = np.zeros(e + 1)  # g[j] = coefficient of s^j in f(1, s)
    for a, c in f.coeffs.items():
        g[a[1]] += c
    gp = np.polynomial.polynomial
    crit = gp.polysub(gp.polymul(gp.polyder(g), [1, 0, 1]), gp.polymul([0, e], g))
    crit = np.trim_zeros(crit, "b")
    cands = [f[(0, e)] ** 2]
    if crit.size > 1:
        for s in gp.polyroots(crit):
            if abs(s.imag) <= 1e-7 * max(1.0, abs(s.real)):
                s = s.real
                cands.append(gp.polyval(s, g) ** 2 / (1 + s * s) ** e)
    cands.append(gp.polyval(0.0, g) ** 2)
    return float(max(cands))


def sphere_max_sq(f: HomogeneousPoly, restarts: int = 16, seed: int = 0) -> tuple[float, bool]:
    """max over the unit sphere of f(y)^2 and whether the value is exact.

    Closed forms: linear (squared coefficient norm), quadratic (squared spectral
    radius), one variable (squared coefficient), two variables (critical points
    of the binary form).  Otherwise a lower bound from power iteration.
    """
    if not f.coeffs:
        return 0.0, True
    if f.degree == 1:
        return float(np.sum(f.dense() ** 2)), True
    if f.degree == 2:
        w = np.linalg.eigvalsh(_quadratic_matrix(f))
        return float(np.max(np.abs(w)) ** 2), True
    if f.nvars == 1:
        return float(f[(f.degree,)] ** 2), True
    if f.nvars == 2:
        return _binary_form_max_sq(f), True
    term = best_rank1(f, restarts, seed)
    return term.coefficient ** 2, False


def concentration_terms(p: HomogeneousPoly, k: int, mode: str = "exact", restarts: int = 16, seed: int = 0):
    """Per-monomial contributions [(mu, max p_mu^2, exact)] for deg mu < d."""
    if k > p.nvars:
        raise DimensionError(f"k={k} exceeds the number of variables {p.nvars}")
    out = []
    for mu, part in sorted(split_first_vars(p, k).items(), reverse=True):
        if sum(mu) >= p.degree:
            continue
        val, exact = sphere_max_sq(part, restarts, seed)
        if mode == "exact" and not exact:
            raise PreconditionError(
                f"no exact sphere maximum for the degree-{part.degree} part at mu={mu} "
                f"in {part.nvars} variables; use heuristic mode"
            )
        out.append((mu, val, exact))
    return out


def concentration(p: HomogeneousPoly, k: int, mode: str = "exact", restarts: int = 16, seed: int = 0) -> float:
    """sum_{deg mu < d} max_{|y|=1} p_mu(y)^2 divided by the squared coefficient norm."""
    total = sum(v for _, v, _ in concentration_terms(p, k, mode, restarts, seed))
    norm2 = coeff_norm(p) ** 2
    return total / norm2 if norm2 > 0 else 0.0


def orthonormal_completion(vectors: Sequence, n: int, tol: float = 1e-8) -> tuple[np.ndarray, int]:
    """Modified Gram-Schmidt on ``vectors`` then completion by the standard basis.

    Returns an orthogonal matrix whose first k rows span the input vectors,
    and k.  Vectors within ``tol`` of the current span are dropped.
    """
    basis: list[np.ndarray] = []

    def push(v) -> bool:
        v = np.array(v, dtype=float)
        scale = np.linalg.norm(v)
        if scale == 0:
            return False
        v = v / scale
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv <= tol:
            return False
        basis.append(v / nv)
        return True

    for v in vectors:
        if len(basis) < n:
            push(v)
    k = len(basis)
    for e in np.eye(n):
        if len(basis) == n:
            break
        push(e)
    return np.array(basis), k


def concentrate_pipeline(p: HomogeneousPoly, eps: float, k_max: int, seed: int = 0,
                         restarts: int = 8, mode: str = "auto"):
    """Find an orthogonal change of variables concentrating p on few variables.

    Runs the greedy power decomposition for up to ``k_max`` terms and, for each
    prefix of directions, rotates so that their span becomes the first k
    coordinates.  Stops at the first prefix whose concentration is <= eps.
    The value is normalized by the squared coefficient norm of ``p`` itself.

    Returns ``(Q, k, value, report)``; the rotated polynomial is p(Q^T y).
    """
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
    n = p.nvars
    terms, residual, energies = greedy_power_decompose(p, k_max, restarts, seed)
    norm2 = coeff_norm(p) ** 2

    def evaluate(dirs):
        q, k = orthonormal_completion(dirs, n)
        rotated = rotate(p, q.T)
        if mode == "auto":
            try:
                contribs = concentration_terms(rotated, k, "exact")
            except PreconditionError:
                contribs = concentration_terms(rotated, k, "heuristic", seed=seed)
        else:
            contribs = concentration_terms(rotated, k, mode, seed=seed)
        # normalize by the input's norm: the rotated coefficient norm depends on
        # how the span is extended to a full basis, the numerator does not
        value = sum(v for _, v, _ in contribs) / norm2 if norm2 > 0 else 0.0
        exact = all(e for _, _, e in contribs)
        return q, k, value, exact, rotated

    history = []
    chosen = None
    for j in range(0, len(terms) + 1):
        q, k, value, exact, rotated = evaluate([t.direction for t in terms[:j]])
        history.append({"terms": j, "k": k, "value": value, "exact": exact})
        chosen = (q, k, value, exact, rotated, j)
        if value <= eps:
            break
    q, k, value, exact, rotated, j = chosen
    report = {
        "eps": eps,
        "k": k,
        "terms_used": j,
        "value": value,
        "concentrated": value <= eps,
        "exact": exact,
        "proved": value <= eps and exact,
        "coeff_norm": coeff_norm(p),
        "coeff_norm_rotated": coeff_norm(rotated),
        "bombieri_norm": bombieri_norm(p),
        "greedy_energies": energies,
        "greedy_terms": [{"coefficient": t.coefficient, "direction": list(t.direction), "exact": t.exact}
                         for t in terms],
        "history": history,
        "orthogonality_residual": float(np.max(np.abs(q @ q.T - np.eye(n)))) if n else 0.0,
    }
    return q, k, value, report
