"""Legendre transforms, equilibrium weights and arithmetic degrees (n = 1).

Torus-invariant psh weights on a toric curve are convex functions of
``u = log|z|`` with slopes in ``Delta = [a, b]``. The equilibrium weight is the
largest such function below ``psi``, i.e. ``(psi^*|_Delta)^*``, and its
Monge-Ampere measure is ``psi''``, which for a piecewise-linear function is the
set of slope jumps.

Degrees are normalized by ``deg(canonical) = 0`` and obtained from the
variation formula

    deg(psi) = int (psi - Psi) dMA(Psi) + int (psi - Psi) dMA(psi)

(unnormalized Monge-Ampere masses, each of total mass ``vol = b - a``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionUnsupported, SlopeRangeTooNarrow, WeightNotSmooth
from .polytope import LatticePolytope, geometric_volume
from .quadrature import adaptive_gauss_legendre
from .weights import (
    Canonical,
    GridWeight,
    MonomialExp,
    RadialMeasure,
    Shifted,
    ToricWeight,
    default_u_grid,
    integrate,
    ma_measure,
)

P_NODES = 4097
SLOPE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on strictly increasing nodes, tagged ``u`` or ``p`` side."""

    nodes: np.ndarray
    values: np.ndarray
    side: str = "u"
    convex: bool = False

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
            raise ValueError("nodes and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.side not in ("u", "p"):
            raise ValueError("side must be 'u' or 'p'")
        if self.convex and second_differences(x, y).min(initial=0.0) < -1e-10:
            raise ValueError("values are not convex")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", y)

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    def to_json(self):
        return {"nodes": self.nodes.tolist(), "values": self.values.tolist(), "side": self.side}

    @classmethod
    def from_json(cls, obj):
        return cls(np.asarray(obj["nodes"], float), np.asarray(obj["values"], float), obj.get("side", "u"))


def second_differences(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Slope increments ``s_{i} - s_{i-1}`` of the piecewise-linear interpolant."""
    s = np.diff(y) / np.diff(x)
    return np.diff(s)


def lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of ``(x_i, y_i)`` (monotone chain)."""
    idx: list[int] = []
    for i in range(len(x)):
        while len(idx) >= 2:
            i0, i1 = idx[-2], idx[-1]
            # drop i1 if it lies on or above the chord i0 -> i
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0:
                idx.pop()
            else:
                break
        idx.append(i)
    return np.array(idx, dtype=np.int64)


def _conjugate(x: np.ndarray, y: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``sup_i (q x_i - y_i)`` for every query slope ``q`` through the lower hull."""
    h = lower_hull(x, y)
    hx, hy = x[h], y[h]
    slopes = np.diff(hy) / np.diff(hx)
    j = np.searchsorted(slopes, q, side="left")
    return q * hx[j] - hy[j]


def legendre(f: GridFunction, P: LatticePolytope, p_nodes: np.ndarray | None = None) -> GridFunction:
    """``psi^*(p) = sup_u (p u - f(u))`` on a p-grid over ``Delta``."""
    if P.dim != 1:
        raise DimensionUnsupported("Legendre transforms are implemented for n = 1")
    a, b = P.interval
    x, y = f.nodes, f.values
    h = lower_hull(x, y)
    slopes = np.diff(y[h]) / np.diff(x[h])
    if slopes[0] > a + SLOPE_TOL or slopes[-1] < b - SLOPE_TOL:
        raise SlopeRangeTooNarrow(
            f"hull slopes [{slopes[0]:.6g}, {slopes[-1]:.6g}] do not bracket [{a}, {b}]"
        )
    p = np.linspace(a, b, P_NODES) if p_nodes is None else np.asarray(p_nodes, dtype=float)
    return GridFunction(p, _conjugate(x, y, p), "p", convex=False)


def inverse_legendre(g: GridFunction, u_nodes: np.ndarray) -> GridFunction:
    """``sup_p (p u - g(p))`` over the p-nodes; slopes outside ``Delta`` are impossible."""
    return GridFunction(np.asarray(u_nodes, float), _conjugate(g.nodes, g.values, np.asarray(u_nodes, float)), "u")


def hull_p_nodes(f: GridFunction, P: LatticePolytope) -> np.ndarray:
    """Slopes of the lower hull inside ``Delta`` together with its endpoints.

    The conjugate of the piecewise-linear interpolant is linear between these
    nodes, so conjugating back from them is exact.
    """
    a, b = P.interval
    h = lower_hull(f.nodes, f.values)
    s = np.diff(f.values[h]) / np.diff(f.nodes[h])
    s = s[(s > a) & (s < b)]
    return np.unique(np.concatenate([[a], s, [b]]).astype(float))


def biconjugate(f: GridFunction, P: LatticePolytope, p_nodes: np.ndarray | None = None) -> GridFunction:
    """``(f^*|_Delta)^*`` on the nodes of ``f``."""
    p = hull_p_nodes(f, P) if p_nodes is None else p_nodes
    return inverse_legendre(legendre(f, P, p), f.nodes)


def equilibrium_weight(w: ToricWeight, u_nodes: np.ndarray | None = None) -> GridFunction:
    """``P_X psi`` sampled on the u-grid (largest convex minorant with slopes in ``Delta``)."""
    if w.dim != 1:
        raise DimensionUnsupported("equilibrium weights are implemented for n = 1")
    u = default_u_grid() if u_nodes is None else np.asarray(u_nodes, dtype=float)
    f = GridFunction(u, np.asarray(w(u), dtype=float), "u")
    return biconjugate(f, w.polytope)


def envelope_weight(w: ToricWeight, u_nodes: np.ndarray | None = None) -> GridWeight:
    env = equilibrium_weight(w, u_nodes)
    return GridWeight(w.polytope, env.nodes, env.values)


def equilibrium_measure(w: ToricWeight, u_nodes: np.ndarray | None = None) -> RadialMeasure:
    """Normalized ``MA(P_X psi)``: the slope jumps of the envelope's hull as atoms.

    Taking the hull of the sampled envelope discards rounding-level
    non-convexity, so every atom is positive and the masses telescope.
    """
    env = equilibrium_weight(w, u_nodes)
    a, b = w.polytope.interval
    h = lower_hull(env.nodes, env.values)
    x = env.nodes[h]
    s = np.diff(env.values[h]) / np.diff(x)
    jumps = np.diff(np.concatenate([[a], np.clip(s, a, b), [b]]))
    keep = jumps > 0
    masses = jumps[keep] / (b - a)
    return RadialMeasure(1, x[keep][:, None], masses / masses.sum())


def equilibrium_measure_integral(w: ToricWeight, f: Callable, u_nodes: np.ndarray | None = None) -> float:
    """``int f dmu_eq = (1 / vol) int_Delta f((psi^*)'(p)) dp`` on the envelope grid."""
    mu = equilibrium_measure(w, u_nodes)
    vals = np.asarray(f(mu.atom_locations[:, 0]), dtype=float)
    return math.fsum(mu.atom_weights * vals)


def small_sections_shift(w: ToricWeight, u_nodes: np.ndarray | None = None) -> float:
    """Smallest ``c`` making every ``chi^m``, ``m in Delta``, of sup norm at most 1 for ``psi + c``.

    ``||chi^m||_sup = exp(psi^*(m))``, so ``c = max_m psi^*(m)``.
    """
    P = w.polytope
    a, b = P.interval
    u = default_u_grid() if u_nodes is None else np.asarray(u_nodes, dtype=float)
    f = GridFunction(u, np.asarray(w(u), dtype=float), "u")
    conj = legendre(f, P, np.arange(a, b + 1, dtype=float))
    return float(conj.values.max())


# ---------------------------------------------------------------------------
# Monge-Ampere integrals, energies, degrees


def _base(w: ToricWeight):
    while isinstance(w, Shifted):
        w = w.base
    return w


def ma_integral(w: ToricWeight, g: Callable, eps: float = 1e-12) -> float:
    """``int g dMA(psi)`` with the unnormalized mass ``vol``.

    Canonical: ``vol g(0)``; monomial-exponential: quadrature against
    ``psi''``; grid weights: signed slope-jump atoms (exact for the
    piecewise-linear interpolant).
    """
    if w.dim != 1:
        raise DimensionUnsupported("Monge-Ampere integrals are implemented for n = 1")
    vol = geometric_volume(w.polytope)
    base = _base(w)
    if isinstance(base, Canonical):
        return vol * float(np.asarray(g(np.zeros(1)))[0])
    if isinstance(base, GridWeight):
        x, jumps = base.curvature_atoms()
        return math.fsum(jumps * np.asarray(g(x), dtype=float))
    if isinstance(base, MonomialExp):
        return vol * integrate(g, ma_measure(base), eps=eps / vol)
    raise WeightNotSmooth(f"no Monge-Ampere measure for {type(base).__name__}")


def _difference(w1: ToricWeight, w0: ToricWeight) -> Callable:
    def g(u):
        u = np.asarray(u, dtype=float)
        return np.asarray(w1(u), dtype=float) - np.asarray(w0(u), dtype=float)

    return g


def energy_difference(w1: ToricWeight, w0: ToricWeight, eps: float = 1e-12) -> float:
    """``E(w1) - E(w0) = 1/2 [int (w1 - w0) dMA(w0) + int (w1 - w0) dMA(w1)]``."""
    if w1.polytope != w0.polytope:
        raise ValueError("weights live on different polytopes")
    g = _difference(w1, w0)
    return 0.5 * (ma_integral(w0, g, eps) + ma_integral(w1, g, eps))


def _roof_integral(w: ToricWeight, eps: float) -> float:
    """``int_Delta psi^*(p) dp`` with ``psi^*(p) = p u(p) - psi(u(p))`` and ``psi'(u(p)) = p``."""
    base = _base(w)
    shift = 0.0
    cur = w
    while isinstance(cur, Shifted):
        shift += cur.shift
        cur = cur.base
    a, b = w.polytope.interval
    if isinstance(base, Canonical):
        return -shift * (b - a)
    if not isinstance(base, MonomialExp):
        raise WeightNotSmooth("the p-route needs a smooth or canonical weight")

    def conj(p):
        p = np.asarray(p, dtype=float)
        lo = np.full_like(p, -400.0)
        hi = np.full_like(p, 400.0)
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            gap_a, _ = base.slope_gaps(mid)
            below = gap_a < p - a
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        u = 0.5 * (lo + hi)
        return p * u - np.asarray(base(u), dtype=float)

    val, _ = adaptive_gauss_legendre(conj, float(a), float(b), tol=eps)
    return val - shift * (b - a)


def arithmetic_degree(w: ToricWeight, route: str = "u", eps: float = 1e-12) -> float:
    """Height ``deg(c1(L, w)^2)`` relative to the canonical metric.

    ``u``: ``2 (E(w) - E(canonical))`` by quadrature in ``u``.
    ``p``: ``-2 int_Delta psi^*(p) dp`` through the slope substitution; only
    for weights with ``P_X psi = psi`` (canonical, monomial-exponential, shifts).
    """
    if w.dim != 1:
        raise DimensionUnsupported("degrees are implemented for n = 1")
    if route == "u":
        return 2.0 * energy_difference(w, Canonical(w.polytope), eps)
    if route == "p":
        return -2.0 * _roof_integral(w, eps)
    raise ValueError(f"unknown route {route!r}")


def degree_of_equilibrium(w: ToricWeight, u_nodes: np.ndarray | None = None) -> float:
    return arithmetic_degree(envelope_weight(w, u_nodes), "u")


def degree_report(w: ToricWeight) -> dict:
    deg = arithmetic_degree(w, "u")
    return {
        "weight": w.to_json(),
        "degree": deg,
        "energy": 0.5 * deg,
        "anchor": "canonical=0",
    }


@dataclass(frozen=True)
class HodgeReport:
    volume_estimate: float
    degree: float
    degree_equilibrium: float

    @property
    def gap(self) -> float:
        """Volume estimate minus the degree of the equilibrium weight."""
        return self.volume_estimate - self.degree_equilibrium

    @property
    def gap_weight(self) -> float:
        """Volume estimate minus the degree of the weight itself."""
        return self.volume_estimate - self.degree

    def to_json(self):
        return {
            "volume_estimate": self.volume_estimate,
            "degree": self.degree,
            "degree_equilibrium": self.degree_equilibrium,
            "gap": self.gap,
            "gap_weight": self.gap_weight,
        }


def hodge_gap(P: LatticePolytope, w: ToricWeight, mu: RadialMeasure, k_list, jobs: int = 1) -> HodgeReport:
    """Compare the extrapolated theta volume with the degrees of ``w`` and ``P_X w``."""
    from .bergman import volume_scan

    scan = volume_scan(P, w, mu, k_list, jobs)
    return HodgeReport(scan.volume_fit.limit, arithmetic_degree(w), degree_of_equilibrium(w))
