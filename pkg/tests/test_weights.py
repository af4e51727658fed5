import math

import numpy as np
import pytest

from torictheta.polytope import LatticePolytope, support_function
from torictheta.weights import (
    Canonical,
    RadialMeasure,
    Shifted,
    bump_weight,
    fubini_study,
    integrate,
    ma_measure,
    measure_from_json,
    weight_from_json,
)

P = LatticePolytope.segment(0, 1)
FS = fubini_study(P)


def test_canonical_value():
    assert Canonical(P)(0.7) == pytest.approx(0.7)


def test_fs_at_origin():
    assert FS(0.0) == pytest.approx(0.5 * math.log(2), abs=1e-15)


def test_fs_gap_range():
    u = np.linspace(-20, 20, 4001)
    gap = FS(u) - support_function(P, u)
    assert gap.min() >= 0.0
    assert gap.max() <= 0.5 * math.log(2) + 1e-15


def test_canonical_ma_is_atom():
    mu = ma_measure(Canonical(P))
    assert mu.atom_locations.tolist() == [[0.0]]
    assert mu.atom_weights.tolist() == [1.0]


def test_fs_ma_density_closed_form():
    mu = ma_measure(FS)
    u = np.linspace(-5, 5, 11)
    assert np.allclose(mu.density.pdf(u), 2 * np.exp(2 * u) / (1 + np.exp(2 * u)) ** 2, rtol=1e-12)
    assert integrate(lambda x: np.ones_like(x), mu, eps=1e-12) == pytest.approx(1.0, abs=1e-10)


def test_shift_keeps_density():
    a = ma_measure(FS).density.pdf(np.array([0.3, -1.2]))
    b = ma_measure(Shifted(FS, 0.3)).density.pdf(np.array([0.3, -1.2]))
    assert np.allclose(a, b, rtol=1e-14)


def test_integrals():
    haar = RadialMeasure.haar(1)
    assert integrate(lambda x: x, haar, eps=1e-12) == 0.0
    mu = ma_measure(FS)
    val = integrate(lambda x: np.exp(2 * x - 2 * FS(x)), mu, eps=1e-12)
    assert val == pytest.approx(0.5, abs=1e-10)
    g = lambda x: FS(x) - support_function(P, x)
    assert integrate(g, mu, eps=1e-12) == pytest.approx(0.5 - 0.5 * math.log(2), abs=1e-10)


def test_bump_weight_above_canonical():
    w = bump_weight(P)
    u = np.linspace(-5, 5, 1001)
    gap = w(u) - support_function(P, u)
    assert gap.min() >= 0.0
    assert gap.max() == pytest.approx(0.3, abs=1e-6)  # sampled on the weight grid


def test_weight_json_roundtrip():
    for w in (Canonical(P), FS, Shifted(FS, -0.2), bump_weight(P)):
        back = weight_from_json(w.to_json())
        u = np.linspace(-3, 3, 13)
        assert np.allclose(back(u), w(u), rtol=0, atol=1e-15)


def test_measure_json():
    mu = measure_from_json({"kind": "monge_ampere", "weight": {"kind": "fubini_study"}}, P.to_json())
    assert integrate(lambda x: np.ones_like(x), mu, eps=1e-12) == pytest.approx(1.0, abs=1e-10)
