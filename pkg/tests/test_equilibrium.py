import math

import numpy as np
import pytest

from torictheta.equilibrium import (
    GridFunction,
    arithmetic_degree,
    biconjugate,
    degree_of_equilibrium,
    energy_difference,
    envelope_weight,
    equilibrium_measure_integral,
    equilibrium_weight,
    hodge_gap,
    legendre,
    lower_hull,
    small_sections_shift,
)
from torictheta.errors import SlopeRangeTooNarrow
from torictheta.polytope import LatticePolytope, support_function
from torictheta.weights import Canonical, RadialMeasure, Shifted, bump_weight, default_u_grid, fubini_study

P = LatticePolytope.segment(0, 1)
FS = fubini_study(P)
CAN = Canonical(P)
U = default_u_grid()


def grid(w):
    return GridFunction(U, np.asarray(w(U), dtype=float))


def test_lower_hull_of_convex_points_keeps_all():
    x = np.linspace(-1, 1, 9)
    assert lower_hull(x, x**2).tolist() == list(range(9))
    assert lower_hull(np.array([0.0, 1.0, 2.0]), np.array([0.0, 5.0, 0.0])).tolist() == [0, 2]


def test_conjugate_of_support_function_vanishes():
    conj = legendre(grid(CAN), P)
    assert np.max(np.abs(conj.values)) == 0.0


def test_fs_conjugate_closed_form():
    p = np.array([0.25, 0.5, 0.75])
    conj = legendre(grid(FS), P, p).values
    assert np.allclose(conj, 0.5 * (p * np.log(p) + (1 - p) * np.log1p(-p)), atol=1e-6)


def test_narrow_slope_range_rejected():
    u = np.linspace(-1, 1, 101)
    with pytest.raises(SlopeRangeTooNarrow):
        legendre(GridFunction(u, np.asarray(FS(u))), P)


def test_biconjugate_properties():
    bump = bump_weight(P)
    f = grid(bump)
    once = biconjugate(f, P)
    assert np.all(once.values <= f.values + 1e-12)
    assert np.max(np.abs(biconjugate(once, P).values - once.values)) <= 1e-8
    fs = grid(FS)
    assert np.max(np.abs(biconjugate(fs, P).values - fs.values)) <= 1e-8


def test_envelopes():
    assert np.max(np.abs(equilibrium_weight(CAN).values - CAN(U))) == 0.0
    bump = bump_weight(P)
    env = equilibrium_weight(bump)
    assert np.max(np.abs(env.values - support_function(P, U))) <= 1e-12
    assert np.max(env.values - support_function(P, U)) < 0.3


def test_equilibrium_measure_integrals():
    assert equilibrium_measure_integral(FS, lambda u: np.ones_like(u)) == pytest.approx(1.0, abs=1e-14)
    assert equilibrium_measure_integral(CAN, lambda u: np.cos(u) + u) == pytest.approx(1.0, abs=1e-14)
    assert abs(equilibrium_measure_integral(FS, lambda u: u)) <= 1e-8


def test_energy_differences():
    assert energy_difference(FS, FS) == 0.0
    assert energy_difference(Shifted(FS, 0.3), FS) == pytest.approx(0.3, abs=1e-12)
    assert energy_difference(FS, CAN) == pytest.approx(0.25, abs=1e-10)


def test_degrees():
    assert arithmetic_degree(CAN) == 0.0
    assert arithmetic_degree(FS, "u") == pytest.approx(0.5, abs=1e-6)
    assert arithmetic_degree(FS, "p") == pytest.approx(0.5, abs=1e-6)
    assert arithmetic_degree(Shifted(CAN, 0.35)) == pytest.approx(0.7, abs=1e-8)
    fs2 = fubini_study(LatticePolytope.segment(0, 2))
    assert arithmetic_degree(fs2) == pytest.approx(2.0, abs=1e-6)


def test_bump_degrees():
    bump = bump_weight(P)
    assert arithmetic_degree(bump) < 0
    assert degree_of_equilibrium(bump) == pytest.approx(0.0, abs=1e-9)
    env = envelope_weight(bump)
    assert np.all(np.asarray(env(U)) <= np.asarray(bump(U)) + 1e-12)


def test_small_sections_shift():
    assert small_sections_shift(CAN) == 0.0
    assert small_sections_shift(Shifted(FS, -0.2)) == pytest.approx(0.2, abs=1e-12)


def test_hodge_canonical_gap_vanishes():
    rep = hodge_gap(P, CAN, RadialMeasure.haar(1), list(range(1, 61)))
    assert abs(rep.gap) <= 0.01
    assert rep.degree == 0.0
