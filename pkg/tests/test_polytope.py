import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torictheta.polytope import (
    LatticePolytope,
    count_points,
    ehrhart_polynomial,
    geometric_volume,
    lattice_points,
    leading_coefficient_check,
    support_function,
)


def test_segment_dilation():
    S = lattice_points(LatticePolytope.segment(0, 2), 3)
    assert S.n_k == 7
    assert S.exponents[:, 0].tolist() == list(range(7))


def test_simplex_triangular_numbers():
    assert count_points(LatticePolytope.simplex(1), 2) == 6


def test_square_matches_box_scan():
    P = LatticePolytope.square(1)
    for k in range(1, 6):
        box = sum(1 for _ in itertools.product(range(k + 1), repeat=2))
        assert count_points(P, k) == box == (k + 1) ** 2


def test_support_function_examples():
    P = LatticePolytope.segment(0, 1)
    assert support_function(P, -2.0) == 0.0
    assert support_function(P, 3.0) == 3.0
    assert support_function(LatticePolytope.square(1), np.array([1.0, -1.0])) == 1.0


@settings(max_examples=50, deadline=None)
@given(
    k=st.integers(1, 6),
    u=st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
)
def test_support_function_homogeneous_in_dilation(k, u):
    P = LatticePolytope.simplex(1)
    u = np.array(u)
    assert support_function(P.dilate(k), u) == pytest.approx(k * support_function(P, u), abs=1e-9)


def test_volumes():
    assert geometric_volume(LatticePolytope.segment(0, 3)) == 3
    assert geometric_volume(LatticePolytope.simplex(1)) == 1
    assert geometric_volume(LatticePolytope.square(1)) == 2


def test_square_leading_coefficient_fit():
    ks = np.arange(1, 31)
    vals = leading_coefficient_check(LatticePolytope.square(1), ks) + 2
    A = np.column_stack([np.ones_like(ks, dtype=float), 1.0 / ks, 1.0 / ks**2])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    assert coef[0] == pytest.approx(2.0, abs=1e-9)


def test_ehrhart_polynomial_exact():
    assert ehrhart_polynomial(LatticePolytope.simplex(1)) == [Fraction(1), Fraction(3, 2), Fraction(1, 2)]
    coeffs = ehrhart_polynomial(LatticePolytope.square(1))
    for k in range(1, 8):
        assert sum(c * k**j for j, c in enumerate(coeffs)) == (k + 1) ** 2


def test_json_roundtrip():
    P = LatticePolytope.simplex(2)
    assert LatticePolytope.from_json(P.to_json()) == P
