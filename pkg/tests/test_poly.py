import math

import numpy as np
import pytest

from oracles import eigen_tail, grid_concentration, multinomial_expand
from weakreg import (HomogeneousPoly, best_rank1, bombieri_inner, coeff_norm, concentrate_pipeline, concentration,
                     greedy_power_decompose, power_form, rotate)
from weakreg.errors import DimensionError, PreconditionError
from weakreg.poly import (PowerTerm, bombieri_norm, monomials, orthonormal_completion, sphere_max_sq,
                          split_first_vars)


def unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def test_monomials_count_and_order():
    ms = monomials(3, 2)
    assert len(ms) == math.comb(4, 2)
    assert ms[0] == (2, 0, 0)
    assert all(sum(m) == 2 for m in ms)


def test_poly_validation():
    with pytest.raises(DimensionError):
        HomogeneousPoly(2, 2, {(1, 0): 1.0})
    with pytest.raises(DimensionError):
        HomogeneousPoly(2, 2, {(1, 0, 1): 1.0})
    assert HomogeneousPoly(2, 2, {(2, 0): 0.0}).coeffs == {}


def test_poly_json_round_trip():
    p = HomogeneousPoly.random(3, 3, np.random.default_rng(0))
    assert HomogeneousPoly.from_dict(p.to_dict()).coeffs == p.coeffs


def test_tensor_round_trip():
    p = HomogeneousPoly.random(3, 4, np.random.default_rng(1))
    back = HomogeneousPoly.from_tensor(p.tensor())
    for a in monomials(3, 4):
        assert back[a] == pytest.approx(p[a], abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_power_form_axis(d):
    p = power_form([1.0, 0.0, 0.0], d)
    assert p.coeffs == {(d, 0, 0): 1.0}


def test_power_form_diagonal():
    p = power_form(np.array([1.0, 1.0]) / math.sqrt(2), 2)
    assert p[(2, 0)] == pytest.approx(0.5)
    assert p[(1, 1)] == pytest.approx(1.0)
    assert p[(0, 2)] == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(5))
def test_power_form_matches_expansion(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    a = unit(rng, n)
    p = power_form(a, d)
    expected = multinomial_expand(a, d)
    for e, c in expected.items():
        assert p[e] == pytest.approx(c, abs=1e-12)
    assert p(a) == pytest.approx(1.0)


def test_power_form_needs_unit():
    with pytest.raises(PreconditionError):
        power_form([1.0, 1.0], 2)


@pytest.mark.parametrize("seed", range(10))
def test_bombieri_identity(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 7)), int(rng.integers(1, 6))
    a, b = unit(rng, n), unit(rng, n)
    assert bombieri_inner(power_form(a, d), power_form(b, d)) == pytest.approx((a @ b) ** d, abs=1e-9)
    assert bombieri_norm(power_form(a, d)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_bombieri_orthogonal(d):
    assert bombieri_inner(power_form([1, 0, 0], d), power_form([0, 0, 1], d)) == 0


def test_bombieri_reproduces_evaluation():
    rng = np.random.default_rng(3)
    p = HomogeneousPoly.random(3, 3, rng)
    a = unit(rng, 3)
    assert bombieri_inner(p, power_form(a, 3)) == pytest.approx(p(a), abs=1e-12)


def test_bombieri_degree_mismatch():
    with pytest.raises(DimensionError):
        bombieri_inner(power_form([1.0], 2), power_form([1.0], 3))


def test_coeff_norm_examples():
    assert coeff_norm(power_form([0, 1], 3)) == 1.0
    p = power_form(np.array([1.0, 1.0]) / math.sqrt(2), 2)
    assert coeff_norm(p) == pytest.approx(math.sqrt(1.5))
    assert coeff_norm(HomogeneousPoly.zero(3, 2)) == 0.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_best_rank1_axis_power(d):
    t = best_rank1(power_form([0, 1, 0], d))
    assert t.coefficient == pytest.approx(1.0)
    assert np.allclose(np.abs(t.direction), [0, 1, 0], atol=1e-8)


def test_best_rank1_diag_quadratic():
    p = HomogeneousPoly(2, 2, {(2, 0): 3.0, (0, 2): 1.0})
    t = best_rank1(p)
    assert t.exact and t.coefficient == pytest.approx(3.0)
    assert np.allclose(np.abs(t.direction), [1, 0])


@pytest.mark.parametrize("seed", range(5))
def test_best_rank1_consistency(seed):
    p = HomogeneousPoly.random(3, 3, np.random.default_rng(seed))
    t = best_rank1(p, seed=seed)
    assert t.coefficient == pytest.approx(bombieri_inner(p, power_form(np.array(t.direction), 3)), abs=1e-12)
    assert np.linalg.norm(t.direction) == pytest.approx(1.0, abs=1e-12)


def test_best_rank1_zero():
    with pytest.raises(PreconditionError):
        best_rank1(HomogeneousPoly.zero(2, 3))


def test_power_term_unit_check():
    with pytest.raises(PreconditionError):
        PowerTerm(1.0, (1.0, 1.0))


@pytest.mark.parametrize("d", [2, 3])
def test_greedy_single_power(d):
    p = 2.0 * power_form([1, 0], d)
    terms, residual, _ = greedy_power_decompose(p, 3)
    assert len(terms) == 1
    assert terms[0].coefficient == pytest.approx(2.0)
    assert coeff_norm(residual) < 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_greedy_quadratic_eigen_tail(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    p = HomogeneousPoly.random(n, 2, rng)
    lam = eigen_tail(p.coeffs, n)
    k = int(rng.integers(1, n + 1))
    terms, residual, energies = greedy_power_decompose(p, k)
    assert [t.coefficient for t in terms] == pytest.approx(lam[:len(terms)], abs=1e-8)
    assert bombieri_norm(residual) == pytest.approx(math.sqrt(np.sum(lam[k:] ** 2)), abs=1e-8)
    for i, t in enumerate(terms):
        assert energies[i + 1] == pytest.approx(energies[i] - t.coefficient ** 2, abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_greedy_cubic_energy_chain(seed):
    p = HomogeneousPoly.random(3, 3, np.random.default_rng(seed))
    terms, _, energies = greedy_power_decompose(p, 4, seed=seed)
    for i, t in enumerate(terms):
        assert energies[i + 1] == pytest.approx(energies[i] - t.coefficient ** 2, abs=1e-10)
        assert energies[i + 1] <= energies[i] + 1e-12


def test_rotate_identity():
    p = HomogeneousPoly.random(3, 3, np.random.default_rng(0))
    r = rotate(p, np.eye(3))
    for a in monomials(3, 3):
        assert r[a] == pytest.approx(p[a], abs=1e-12)


def test_rotate_45_degrees():
    c = 1 / math.sqrt(2)
    q = np.array([[c, -c], [c, c]])
    r = rotate(HomogeneousPoly(2, 2, {(1, 1): 1.0}), q)
    # x1 x2 at (c(y1 - y2), c(y1 + y2)) = (y1^2 - y2^2) / 2
    assert r[(2, 0)] == pytest.approx(0.5)
    assert r[(0, 2)] == pytest.approx(-0.5)
    assert abs(r[(1, 1)]) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_rotate_preserves_bombieri(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 5)), int(rng.integers(1, 5))
    p = HomogeneousPoly.random(n, d, rng)
    q = random_orthogonal(rng, n)
    r = rotate(p, q)
    assert bombieri_norm(r) == pytest.approx(bombieri_norm(p), abs=1e-9)
    x = unit(rng, n)
    assert r(x) == pytest.approx(p(q @ x), abs=1e-10)


def test_rotate_rejects_non_orthogonal():
    with pytest.raises(PreconditionError):
        rotate(HomogeneousPoly.random(2, 2, np.random.default_rng(0)), [[1, 1], [0, 1]])


def test_split_first_vars():
    p = HomogeneousPoly(3, 3, {(1, 1, 1): 2.0, (3, 0, 0): 1.0, (0, 0, 3): -1.0})
    parts = split_first_vars(p, 1)
    assert parts[(1,)].coeffs == {(1, 1): 2.0}
    assert parts[(3,)].coeffs == {(0, 0): 1.0}
    assert parts[(0,)].coeffs == {(0, 3): -1.0}


@pytest.mark.parametrize("d", [2, 3, 4])
def test_concentration_axis_power(d):
    assert concentration(power_form([1, 0, 0], d), 1) == 0.0


def test_concentration_sum_of_squares():
    assert concentration(HomogeneousPoly(2, 2, {(2, 0): 1.0, (0, 2): 1.0}), 1) == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(6))
def test_concentration_all_variables(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    assert concentration(HomogeneousPoly.random(n, d, rng), n) == 0.0


def test_concentration_k_too_large():
    with pytest.raises(DimensionError):
        concentration(power_form([1, 0], 2), 3)


def test_concentration_exact_mode_refuses_cubic_in_three_vars():
    p = HomogeneousPoly.random(3, 3, np.random.default_rng(0))
    with pytest.raises(PreconditionError):
        concentration(p, 0, "exact")
    assert concentration(p, 0, "heuristic") > 0


@pytest.mark.parametrize("n, d, k", [(2, 2, 0), (2, 3, 0), (3, 2, 1), (3, 3, 1), (2, 3, 1), (3, 2, 0)])
def test_concentration_matches_grid(n, d, k):
    rng = np.random.default_rng(10 * n + d + k)
    p = HomogeneousPoly.random(n, d, rng)
    exact = concentration(p, k, "exact")
    grid = grid_concentration(p.coeffs, n, d, k, step=0.01)
    assert grid <= exact + 1e-12
    assert exact - grid <= 1e-3


def test_sphere_max_linear_and_quadratic():
    assert sphere_max_sq(HomogeneousPoly(1, 3, {(1, 0, 0): 3.0, (0, 0, 1): 4.0})) == (25.0, True)
    val, exact = sphere_max_sq(HomogeneousPoly(2, 2, {(2, 0): 1.0, (0, 2): -3.0}))
    assert exact and val == pytest.approx(9.0)


def test_orthonormal_completion():
    rng = np.random.default_rng(0)
    v = unit(rng, 4)
    q, k = orthonormal_completion([v, 2 * v, unit(rng, 4)], 4)
    assert k == 2
    assert np.allclose(q @ q.T, np.eye(4), atol=1e-12)
    assert abs(abs(q[0] @ v) - 1) < 1e-12


def test_pipeline_recovers_sum_of_powers():
    p = HomogeneousPoly(3, 4, {(3, 0, 0, 0): 2.0, (0, 3, 0, 0): -1.0})
    q, k, value, report = concentrate_pipeline(p, 0.05, 4)
    assert k == 2 and value == pytest.approx(0.0, abs=1e-12)
    assert report["concentrated"] and report["exact"] and report["proved"]


@pytest.mark.parametrize("seed", range(8))
def test_pipeline_quadratic_spectral(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    p = HomogeneousPoly.random(n, 2, rng)
    lam = eigen_tail(p.coeffs, n)
    q, k, value, report = concentrate_pipeline(p, 0.1, n)
    tail = lam[k] ** 2 if k < n else 0.0
    assert value == pytest.approx(tail / coeff_norm(p) ** 2, abs=1e-6)
    assert report["orthogonality_residual"] <= 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_pipeline_extension_invariance(seed):
    rng = np.random.default_rng(seed)
    n, d = 4, 3
    p = HomogeneousPoly.random(n, d, rng)
    q, k, value, _ = concentrate_pipeline(p, 0.01, 2, seed=seed)
    assert k == 2
    # replace rows k.. by a random orthonormal basis of the same complement
    comp = q[k:]
    mix = random_orthogonal(rng, n - k)
    q2 = np.vstack([q[:k], mix @ comp])
    v1 = concentration(rotate(p, q.T), k, "exact") * coeff_norm(rotate(p, q.T)) ** 2
    v2 = concentration(rotate(p, q2.T), k, "exact") * coeff_norm(rotate(p, q2.T)) ** 2
    assert v1 == pytest.approx(v2, abs=1e-9)
    assert value == pytest.approx(v1 / coeff_norm(p) ** 2, abs=1e-9)


def test_pipeline_reports_failure_without_raising():
    p = HomogeneousPoly.random(3, 2, np.random.default_rng(0))
    _, _, value, report = concentrate_pipeline(p, 1e-6, 1)
    assert not report["concentrated"] and value > 1e-6


def test_pipeline_deterministic():
    p = HomogeneousPoly.random(4, 3, np.random.default_rng(9))
    a = concentrate_pipeline(p, 0.1, 3, seed=4)
    b = concentrate_pipeline(p, 0.1, 3, seed=4)
    assert np.array_equal(a[0], b[0]) and a[3] == b[3]
