import math

import numpy as np
import pytest

from torictheta.bergman import (
    DEFAULT_U_GRID,
    extrapolate,
    gram_matrix,
    model_identity_check,
    rho,
    section_chi,
    section_h0_theta,
    sup_h0_theta_smallk,
    sup_norm,
    theta_distortion,
    theta_identity_check,
    u_integral_check,
    variation_identity_check,
    volume_scan,
)
from torictheta.errors import DimensionUnsupported
from torictheta.lattice import EuclideanLattice, log_theta, log_theta1
from torictheta.polytope import LatticePolytope, lattice_points
from torictheta.weights import Canonical, RadialMeasure, Shifted, fubini_study, ma_measure

P = LatticePolytope.segment(0, 1)
FS = fubini_study(P)
MU_FS = ma_measure(FS)
HAAR = RadialMeasure.haar(1)
CAN = Canonical(P)
LT1 = float(log_theta1(1.0))


@pytest.mark.parametrize("Q", [LatticePolytope.segment(0, 1), LatticePolytope.segment(0, 2), LatticePolytope.simplex(1)])
def test_canonical_gram_is_identity(Q):
    S = lattice_points(Q, 4)
    g = gram_matrix(S, RadialMeasure.haar(Q.dim), Canonical(Q))
    assert np.array_equal(g.matrix, np.eye(S.n_k))


@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_fs_gram_beta_integrals(k):
    S = lattice_points(P, k)
    g = gram_matrix(S, MU_FS, FS)
    m = np.arange(k + 1)
    exact = np.array([math.lgamma(i + 1) + math.lgamma(k - i + 1) - math.lgamma(k + 2) for i in m])
    assert np.max(np.abs(g.log_diag - exact)) <= 1e-12


def test_shift_scales_gram():
    S = lattice_points(P, 3)
    a = gram_matrix(S, MU_FS, FS).log_diag
    b = gram_matrix(S, MU_FS, Shifted(FS, 0.4)).log_diag
    assert np.allclose(b - a, -2 * 3 * 0.4, atol=1e-12)


def test_rho_examples():
    S = lattice_points(P, 3)
    r = rho(S, HAAR, CAN, DEFAULT_U_GRID)
    assert r.max() == pytest.approx(S.n_k, rel=1e-15)
    assert DEFAULT_U_GRID[np.argmax(r)] == 0.0
    r1 = rho(lattice_points(P, 1), MU_FS, FS, DEFAULT_U_GRID)
    assert np.allclose(r1, 2.0, rtol=1e-12)


def test_theta_at_origin_canonical():
    for k in (1, 4, 9):
        S = lattice_points(P, k)
        assert theta_distortion(S, HAAR, CAN, 0.0) == pytest.approx(S.n_k / 2, rel=1e-14)


def test_theta_decreases_in_t():
    S = lattice_points(P, 3)
    vals = [theta_distortion(S, MU_FS, FS, 0.4, t) for t in (1, 2, 4, 8, 16, 32)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_dense_path_equals_diagonal():
    S = lattice_points(P, 1)
    d = theta_distortion(S, MU_FS, FS, 0.0)
    e = theta_distortion(S, MU_FS, FS, 0.0, method="dense")
    assert abs(d - e) <= 1e-9


def test_identity_examples():
    S = lattice_points(P, 2)
    assert model_identity_check(S, HAAR, CAN, 0.0)["residual"] <= 1e-9
    assert model_identity_check(lattice_points(P, 1), MU_FS, FS, 0.0)["residual"] <= 1e-9
    rng = np.random.default_rng(3)
    M = np.diag(rng.uniform(0.3, 2.0, 2))
    c = np.sqrt(rng.uniform(0.1, 1.0, 2))
    assert theta_identity_check(M, c)["residual"] <= 1e-9


def test_identity_rank_limit():
    with pytest.raises(DimensionUnsupported):
        theta_identity_check(np.eye(13), np.ones(13))


def test_u_integral_examples():
    S = lattice_points(P, 3)
    res = u_integral_check(S, HAAR, CAN)
    assert res["lhs"] == pytest.approx(S.n_k / 2, rel=1e-13)
    assert res["rhs"] == pytest.approx(S.n_k / 2, rel=1e-13)
    assert u_integral_check(lattice_points(P, 2), MU_FS, FS)["relative_gap"] <= 1e-6
    assert u_integral_check(S, MU_FS, FS, t=4.0)["rhs"] <= S.n_k / 4


def test_h0_examples():
    S = lattice_points(P, 7)
    assert section_h0_theta(S, HAAR, CAN) == pytest.approx(8 * LT1, abs=1e-12)
    assert section_chi(S, HAAR, CAN) == 0.0
    L = EuclideanLattice.diagonal([4.0, 4.0])
    assert log_theta(L, 1.0).log_value == pytest.approx(2 * math.log(sum(math.exp(-4 * math.pi * n * n) for n in range(-5, 6))), abs=1e-14)
    hs = [section_h0_theta(S, MU_FS, Shifted(FS, c)) for c in (0.0, 0.5, 1.0)]
    assert hs[0] < hs[1] < hs[2]


def test_variation_identity_examples():
    assert variation_identity_check(P, FS, FS, MU_FS, 2, s_nodes=4)["residual"] == 0.0
    assert variation_identity_check(P, CAN, Shifted(CAN, 0.2), HAAR, 3)["residual"] <= 1e-6
    assert variation_identity_check(P, FS, CAN, MU_FS, 2)["residual"] <= 1e-4


def test_canonical_volume_scan_slope():
    scan = volume_scan(P, CAN, HAAR, list(range(1, 61)))
    vk = np.array([r.v_k for r in scan.rows])
    assert np.all(np.diff(vk) < 0)
    assert scan.volume_fit.limit == pytest.approx(0.0, abs=1e-3)
    assert scan.volume_fit.a == pytest.approx(2 * LT1, rel=0.1)
    assert all(r.chi_k == 0.0 for r in scan.rows)


def test_extrapolate_recovers_polynomial():
    ks = np.arange(10, 20)
    fit = extrapolate(ks, 0.7 + 2.0 / ks - 3.0 / ks**2)
    assert fit.limit == pytest.approx(0.7, abs=1e-12)


def test_sup_norm_examples():
    for k in (1, 3):
        S = lattice_points(P, k)
        for i in range(S.n_k):
            e = np.zeros(S.n_k)
            e[i] = 1.0
            res = sup_norm(S, CAN, e)
            assert res.lower <= 1.0 <= res.upper * (1 + 1e-12)
    res = sup_norm(lattice_points(P, 1), FS, [1.0, 1.0])
    assert res.upper - res.lower <= 1e-6
    # |1 + z|^2 / (1 + |z|^2) peaks at 2 on |z| = 1
    assert res.value == pytest.approx(math.sqrt(2), abs=1e-6)


def test_sup_theta_k1_bracket():
    S = lattice_points(P, 1)
    g = gram_matrix(S, MU_FS, FS)
    st = sup_h0_theta_smallk(S, FS, MU_FS, g)
    assert st.lower <= st.upper
    # the sup norm dominates the L2 norm of a probability measure
    assert st.upper <= section_h0_theta(S, MU_FS, FS, g) + 1e-9


def test_sup_theta_rank_limit():
    with pytest.raises(DimensionUnsupported):
        sup_h0_theta_smallk(lattice_points(P, 5), FS, MU_FS)
