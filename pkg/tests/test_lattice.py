import itertools
import math

import numpy as np
import pytest

from torictheta.errors import NotPositiveDefinite
from torictheta.lattice import (
    EuclideanLattice,
    covolume,
    degree,
    dual_lattice,
    enumerate_short_vectors,
    h0_ar,
    lemma_monotonicity_check,
    log_theta,
    log_theta1,
    poisson_residual,
    random_lattice,
    second_moment,
    u_function,
)


def direct_theta1(c, n=60):
    k = np.arange(-n, n + 1)
    return math.fsum(np.exp(-np.pi * c * k**2))


def cofactor_det(a):
    if len(a) == 1:
        return a[0][0]
    return sum((-1) ** j * a[0][j] * cofactor_det([row[:j] + row[j + 1 :] for row in a[1:]]) for j in range(len(a)))


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(11)


def test_covolume_trivial():
    assert covolume(EuclideanLattice.identity(3)) == pytest.approx(1.0, abs=1e-15)
    assert covolume(EuclideanLattice(np.array([[4.0]]))) == pytest.approx(2.0, rel=1e-15)


def test_covolume_matches_cofactor_expansion(rng):
    L = random_lattice(4, rng)
    det = cofactor_det(L.gram.tolist())
    assert covolume(L) == pytest.approx(math.sqrt(det), rel=1e-12)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        EuclideanLattice(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_dual_lattice(rng):
    assert np.array_equal(dual_lattice(EuclideanLattice.identity(2)).gram, np.eye(2))
    assert dual_lattice(EuclideanLattice(np.array([[4.0]]))).gram[0, 0] == pytest.approx(0.25)
    L = random_lattice(3, rng)
    assert covolume(L) * covolume(dual_lattice(L)) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(dual_lattice(dual_lattice(L)).gram - L.gram)) <= 1e-12


def test_log_theta_of_z():
    v = log_theta(EuclideanLattice.identity(1), 1.0)
    n = np.arange(-8, 9)
    assert v.log_value == pytest.approx(math.log(np.exp(-np.pi * n**2).sum()), abs=1e-15)
    assert v.abs_error_bound >= 0 and v.log_value + v.abs_error_bound >= 0


def test_log_theta_product_lattice():
    one = log_theta(EuclideanLattice.identity(1), 1.0).log_value
    assert log_theta(EuclideanLattice.identity(5), 1.0).log_value == pytest.approx(5 * one, abs=1e-13)


def test_functional_equation_two_paths():
    lhs = log_theta(EuclideanLattice.identity(1), 4.0).log_value
    rhs = math.log(0.5 * direct_theta1(0.25))
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert math.log(direct_theta1(4.0)) == pytest.approx(rhs, abs=1e-12)


def test_diagonal_path_equals_dense_path():
    d = np.array([0.3, 1.7, 2.5])
    fast = log_theta(EuclideanLattice.diagonal(d), 0.8).log_value
    dense = log_theta(EuclideanLattice(np.diag(d), diagonal_hint=False), 0.8).log_value
    assert fast == pytest.approx(dense, abs=1e-10)


def test_theta1_tiny_entries_stay_finite():
    c = np.array([1e-30, 1e-8, 1.0, 50.0])
    lt = np.asarray(log_theta1(c))
    assert np.all(np.isfinite(lt))
    assert lt[0] == pytest.approx(-0.5 * math.log(1e-30), rel=1e-12)


def test_poisson_examples(rng):
    I5 = EuclideanLattice.identity(5)
    assert degree(I5) == 0.0
    assert abs(poisson_residual(I5)) <= 1e-10
    L4 = EuclideanLattice(np.array([[4.0]]))
    assert degree(L4) == pytest.approx(-math.log(2))
    assert abs(poisson_residual(L4)) <= 1e-10
    for i in range(20):
        assert abs(poisson_residual(random_lattice(1 + i % 6, rng))) <= 1e-9


def test_h0_ar_counts(rng):
    assert h0_ar(EuclideanLattice.identity(2)) == pytest.approx(math.log(5))
    assert h0_ar(EuclideanLattice(np.array([[0.09]]))) == pytest.approx(math.log(7))
    L = random_lattice(3, rng)
    lam = np.linalg.eigvalsh(L.gram)[0]
    r = math.ceil(1 / math.sqrt(lam))
    count = 0
    for v in itertools.product(range(-r, r + 1), repeat=3):
        v = np.array(v)
        count += v @ L.gram @ v <= 1
    assert h0_ar(L) == pytest.approx(math.log(count))


def test_enumeration_matches_box_scan(rng):
    L = random_lattice(2, rng)
    vecs, q = enumerate_short_vectors(L, 3.0)
    lam = np.linalg.eigvalsh(L.gram)[0]
    r = math.ceil(math.sqrt(3.0 / lam))
    box = sum(
        1 for v in itertools.product(range(-r, r + 1), repeat=2) if np.array(v) @ L.gram @ np.array(v) <= 3.0
    )
    assert len(vecs) == box
    assert np.allclose(np.einsum("ij,jk,ik->i", vecs, L.gram, vecs), q)


def test_second_moment_of_z():
    L = EuclideanLattice.identity(1)
    n = np.arange(-10, 11)
    direct = math.fsum(n**2 * np.exp(-np.pi * n**2))
    assert second_moment(L, 1.0) == pytest.approx(direct, rel=1e-13)
    assert u_function(L, 1.0) == pytest.approx(0.5, abs=1e-14)
    assert u_function(EuclideanLattice.identity(4), 1.0) == pytest.approx(2.0, abs=1e-13)


def test_u_function_dense_matches_diagonal():
    d = np.array([0.6, 1.3])
    fast = u_function(EuclideanLattice.diagonal(d), 1.5)
    dense = u_function(EuclideanLattice(np.diag(d), diagonal_hint=False), 1.5)
    assert fast == pytest.approx(dense, rel=1e-10)


def test_u_function_bound(rng):
    L = random_lattice(4, rng)
    for t in (0.5, 1.0, 2.0, 4.0):
        assert u_function(L, t) <= 4 / t


def test_monotonicity_examples():
    assert lemma_monotonicity_check(EuclideanLattice.identity(1), [0.25, 1, 4]).max_violation <= 1e-10
    rep = lemma_monotonicity_check(EuclideanLattice.identity(3), np.geomspace(0.1, 10, 9))
    assert rep.max_violation <= 1e-10
    L4 = EuclideanLattice(np.array([[4.0]]))
    diff = log_theta(L4, math.e).log_value - log_theta(L4, 1.0).log_value
    assert abs(diff) <= 0.5


def test_lattice_json_roundtrip(rng):
    L = random_lattice(3, rng)
    back = EuclideanLattice.from_json(L.to_json())
    assert np.array_equal(back.gram, L.gram)
