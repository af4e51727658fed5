"""Torus-invariant weights and measures in logarithmic coordinates.

A weight ``psi`` on ``R^n`` encodes the metric ``||s|| = |s| exp(-phi)`` with
``phi(z) = psi(log|z_1|, ..., log|z_n|)`` on the open orbit. The canonical
metric has ``psi = Psi_P``, the support function of the polytope.

Measures are pushed forward to ``u = log|z|``: the Haar measure of the compact
torus becomes the atom at ``u = 0``, and the Monge-Ampere measure of a smooth
one-dimensional weight becomes the density ``psi''(u) / vol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionUnsupported, TailNotDominated, WeightNotSmooth
from .polytope import LatticePolytope, geometric_volume, support_function
from .quadrature import adaptive_gauss_legendre

U_BOX = 30.0
U_NODES = 65537


def default_u_grid(box: float = U_BOX, n: int = U_NODES) -> np.ndarray:
    """Symmetric grid with an odd node count, so ``u = 0`` is a node."""
    return np.linspace(-box, box, n)


def _points(u, dim: int) -> tuple[np.ndarray, tuple]:
    u = np.asarray(u, dtype=float)
    if dim == 1:
        if u.ndim >= 1 and u.shape[-1] == 1 and u.ndim > 1:
            shape = u.shape[:-1]
        else:
            shape = u.shape
        return u.reshape(-1, 1), shape
    if u.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {u.shape}")
    return u.reshape(-1, dim), u.shape[:-1]


def _shaped(vals: np.ndarray, shape: tuple):
    vals = vals.reshape(shape)
    return vals if vals.ndim else float(vals)


# ---------------------------------------------------------------------------
# weights


class ToricWeight:
    """Common interface of the weight catalog."""

    polytope: LatticePolytope
    smooth: bool = False

    @property
    def dim(self) -> int:
        return self.polytope.dim

    def __call__(self, u):
        pts, shape = _points(u, self.dim)
        return _shaped(self._eval(pts), shape)

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gap_lower_bound(self) -> float:
        """A lower bound for ``inf (psi - Psi_P)`` over all of ``R^n``."""
        raise NotImplementedError

    def asymptotic_gaps(self) -> tuple[float, float]:
        """``lim (psi - Psi_P)`` as ``u -> -inf`` and ``u -> +inf`` (dimension 1)."""
        raise NotImplementedError

    def d1(self, u):
        raise WeightNotSmooth(f"{type(self).__name__} has no closed-form derivative")

    def d2(self, u):
        raise WeightNotSmooth(f"{type(self).__name__} has no closed-form derivative")

    def curvature_bound(self) -> float:
        """Upper bound for ``psi''`` away from the kinks (dimension 1)."""
        raise WeightNotSmooth(f"{type(self).__name__} has no curvature bound")

    def kinks(self) -> tuple[float, ...]:
        return ()

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Canonical(ToricWeight):
    polytope: LatticePolytope

    def _eval(self, pts):
        return np.asarray(support_function(self.polytope, pts), dtype=float).reshape(-1)

    def gap_lower_bound(self):
        return 0.0

    def asymptotic_gaps(self):
        return 0.0, 0.0

    def d1(self, u):
        a, b = self.polytope.interval
        return np.where(np.asarray(u) < 0, float(a), float(b))

    def d2(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def curvature_bound(self):
        return 0.0

    def kinks(self):
        return (0.0,)

    def to_json(self):
        return {"polytope": self.polytope.to_json(), "kind": "canonical"}


@dataclass(frozen=True, eq=False)
class MonomialExp(ToricWeight):
    """``psi(u) = 1/2 log sum_m c_m exp(2 <m, u>)`` over lattice points of the polytope.

    The exponents must have the polytope as convex hull, which makes
    ``psi - Psi_P`` bounded.
    """

    polytope: LatticePolytope
    exponents: np.ndarray
    coefficients: np.ndarray
    smooth = True

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.exponents, dtype=float))
        if self.polytope.dim == 1 and m.shape[0] == 1 and m.shape[1] != 1:
            m = m.T
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if m.shape != (len(c), self.polytope.dim):
            raise ValueError("exponents and coefficients do not match")
        if np.any(~(c > 0)):
            raise ValueError("MonomialExp coefficients must be positive")
        for row in m:
            if not self.polytope.contains(row.astype(int)) or np.any(row != np.round(row)):
                raise ValueError(f"exponent {row} is not a lattice point of the polytope")
        verts = {tuple(v) for v in self.polytope.vertices}
        present = {tuple(int(x) for x in row) for row in m}
        if not verts <= present:
            raise ValueError("the exponents' convex hull must be the whole polytope")
        m.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "exponents", m)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "_logc", np.log(c))

    def _logits(self, pts):
        return self._logc[None, :] + 2.0 * pts @ self.exponents.T

    def _eval(self, pts):
        return 0.5 * logsumexp(self._logits(pts), axis=1)

    def _softmax(self, u):
        u = np.asarray(u, dtype=float)
        z = self._logits(u.reshape(-1, 1))
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        return p, u.shape

    def _need_1d(self):
        if self.dim != 1:
            raise DimensionUnsupported("derivatives are implemented for n = 1")

    def d1(self, u):
        self._need_1d()
        p, shape = self._softmax(u)
        return _shaped(p @ self.exponents[:, 0], shape)

    def d2(self, u):
        return np.exp(self.log_d2(u))

    def log_d2(self, u):
        """``log psi''(u)`` with ``psi'' = 2 Var_p(m)`` under the softmax weights."""
        self._need_1d()
        p, shape = self._softmax(u)
        m = self.exponents[:, 0]
        mean = p @ m
        var = (p * (m[None, :] - mean[:, None]) ** 2).sum(axis=1)
        with np.errstate(divide="ignore"):
            return _shaped(np.log(2.0 * var), shape)

    def slope_gaps(self, u):
        """``(psi'(u) - a, b - psi'(u))`` computed without cancellation."""
        self._need_1d()
        a, b = self.polytope.interval
        p, shape = self._softmax(u)
        m = self.exponents[:, 0]
        return _shaped(p @ (m - a), shape), _shaped(p @ (b - m), shape)

    def vertex_log_coefficients(self) -> dict:
        out = {}
        for row, lc in zip(self.exponents, self._logc):
            out[tuple(int(x) for x in row)] = float(lc)
        return out

    def gap_lower_bound(self):
        # psi >= 1/2 log c_v + <v, u> for every vertex v
        lc = self.vertex_log_coefficients()
        return 0.5 * min(lc[tuple(v)] for v in self.polytope.vertices)

    def asymptotic_gaps(self):
        self._need_1d()
        lc = self.vertex_log_coefficients()
        a, b = self.polytope.interval
        return 0.5 * lc[(a,)], 0.5 * lc[(b,)]

    def curvature_bound(self):
        self._need_1d()
        a, b = self.polytope.interval
        return 0.5 * (b - a) ** 2

    def decay_rates(self) -> tuple[float, float, float, float]:
        """``(amp_left, rate_left, amp_right, rate_right)`` with
        ``psi'(u) - a <= amp_left e^{rate_left u}`` for ``u < 0`` and
        ``b - psi'(u) <= amp_right e^{-rate_right u}`` for ``u > 0``."""
        self._need_1d()
        a, b = self.polytope.interval
        m = self.exponents[:, 0]
        c = self.coefficients
        ca = c[m == a].sum()
        cb = c[m == b].sum()
        inner_l = m > a
        inner_r = m < b
        if not np.any(inner_l):
            return 0.0, math.inf, 0.0, math.inf
        rate_l = 2.0 * float(np.min(m[inner_l] - a))
        rate_r = 2.0 * float(np.min(b - m[inner_r]))
        amp_l = (b - a) * float(c[inner_l].sum()) / ca
        amp_r = (b - a) * float(c[inner_r].sum()) / cb
        return amp_l, rate_l, amp_r, rate_r

    def to_json(self):
        return {
            "polytope": self.polytope.to_json(),
            "kind": "monomial_exp",
            "terms": [[row.astype(int).tolist(), float(c)] for row, c in zip(self.exponents, self.coefficients)],
        }


@dataclass(frozen=True, eq=False)
class Shifted(ToricWeight):
    """``psi + c``: the metric scaled by ``exp(-c)``."""

    base: ToricWeight
    shift: float

    @property
    def polytope(self):
        return self.base.polytope

    @property
    def smooth(self):
        return self.base.smooth

    def _eval(self, pts):
        return self.base._eval(pts) + self.shift

    def gap_lower_bound(self):
        return self.base.gap_lower_bound() + self.shift

    def asymptotic_gaps(self):
        lo, hi = self.base.asymptotic_gaps()
        return lo + self.shift, hi + self.shift

    def d1(self, u):
        return self.base.d1(u)

    def d2(self, u):
        return self.base.d2(u)

    def log_d2(self, u):
        return self.base.log_d2(u)

    def slope_gaps(self, u):
        return self.base.slope_gaps(u)

    def decay_rates(self):
        return self.base.decay_rates()

    def curvature_bound(self):
        return self.base.curvature_bound()

    def kinks(self):
        return self.base.kinks()

    def to_json(self):
        return {"polytope": self.polytope.to_json(), "kind": "shifted", "base": self.base.to_json(), "shift": self.shift}


@dataclass(frozen=True, eq=False)
class GridWeight(ToricWeight):
    """Piecewise-linear interpolation of samples; ``Psi_P`` plus the end offsets outside."""

    polytope: LatticePolytope
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.polytope.dim != 1:
            raise DimensionUnsupported("grid weights are one-dimensional")
        x = np.asarray(self.nodes, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("grid nodes must be strictly increasing and match the values")
        if not (x[0] < 0 < x[-1]):
            raise ValueError("the grid box must contain u = 0")
        psi_ends = support_function(self.polytope, x[[0, -1]])
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "_offsets", (float(y[0] - psi_ends[0]), float(y[-1] - psi_ends[1])))

    @classmethod
    def sample(cls, w: ToricWeight, nodes: np.ndarray | None = None) -> "GridWeight":
        nodes = default_u_grid() if nodes is None else np.asarray(nodes, dtype=float)
        return cls(w.polytope, nodes, np.asarray(w(nodes), dtype=float))

    def _eval(self, pts):
        u = pts[:, 0]
        out = np.interp(u, self.nodes, self.values)
        lo, hi = self.nodes[0], self.nodes[-1]
        left = u < lo
        right = u > hi
        if np.any(left | right):
            psi = np.asarray(support_function(self.polytope, u), dtype=float).reshape(-1)
            out = np.where(left, psi + self._offsets[0], out)
            out = np.where(right, psi + self._offsets[1], out)
        return out

    def gap_lower_bound(self):
        g = self.values - np.asarray(support_function(self.polytope, self.nodes))
        # Psi is linear between nodes except at 0, which is inside the box
        extra = float(np.interp(0.0, self.nodes, self.values))
        return float(min(g.min(), extra, *self._offsets))

    def asymptotic_gaps(self):
        return self._offsets

    def kinks(self):
        return tuple(self.nodes.tolist())

    def curvature_atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """``psi''`` as atoms at the nodes (slope jumps, possibly negative).

        Includes the jumps to the extension slopes ``a`` and ``b`` at the box
        ends, so the masses sum to ``b - a``. If ``0`` is not a node the kink of
        ``Psi`` is irrelevant because it lies inside a linear piece.
        """
        a, b = self.polytope.interval
        s = np.diff(self.values) / np.diff(self.nodes)
        slopes = np.concatenate([[a], s, [b]])
        return self.nodes.copy(), np.diff(slopes)

    def to_json(self):
        return {"polytope": self.polytope.to_json(), "kind": "grid", "nodes": self.nodes.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class Blend(ToricWeight):
    """``(1 - s) first + s second`` (the affine path between two weights)."""

    first: ToricWeight
    second: ToricWeight
    s: float

    @property
    def polytope(self):
        return self.first.polytope

    def _eval(self, pts):
        return (1.0 - self.s) * self.first._eval(pts) + self.s * self.second._eval(pts)

    def gap_lower_bound(self):
        return (1.0 - self.s) * self.first.gap_lower_bound() + self.s * self.second.gap_lower_bound()

    def asymptotic_gaps(self):
        a0, b0 = self.first.asymptotic_gaps()
        a1, b1 = self.second.asymptotic_gaps()
        return (1 - self.s) * a0 + self.s * a1, (1 - self.s) * b0 + self.s * b1

    def kinks(self):
        return tuple(sorted(set(self.first.kinks()) | set(self.second.kinks())))

    def to_json(self):
        return {
            "polytope": self.polytope.to_json(),
            "kind": "blend",
            "first": self.first.to_json(),
            "second": self.second.to_json(),
            "s": self.s,
        }


def eval_weight(w: ToricWeight, u):
    return w(u)


def fubini_study(P: LatticePolytope) -> MonomialExp:
    """The Fubini-Study weight of ``O(d)``: binomial/multinomial coefficients.

    On a segment ``[a, b]`` this is ``(b - a)/2 log(1 + e^{2u}) + a u``; on
    ``d`` times the 2-simplex the multinomial analogue. Other polytopes get
    unit coefficients at the vertices.
    """
    if P.dim == 1:
        a, b = P.interval
        d = b - a
        ms = np.arange(a, b + 1)
        cs = np.array([math.comb(d, int(m - a)) for m in ms], dtype=float)
        return MonomialExp(P, ms[:, None], cs)
    verts = set(P.vertices)
    d = max(max(v) for v in P.vertices)
    if verts == {(0, 0), (d, 0), (0, d)}:
        ms, cs = [], []
        for i in range(d + 1):
            for j in range(d + 1 - i):
                ms.append((i, j))
                cs.append(math.factorial(d) / (math.factorial(i) * math.factorial(j) * math.factorial(d - i - j)))
        return MonomialExp(P, np.array(ms), np.array(cs))
    return MonomialExp(P, np.array(P.vertices), np.ones(len(P.vertices)))


def bump_weight(
    P: LatticePolytope,
    center: float = 2.0,
    width: float = 1.0,
    height: float = 0.3,
    nodes: np.ndarray | None = None,
) -> GridWeight:
    """``Psi_P + height * (1 - x^2)^3`` with ``x = (u - center) / width``, on a grid."""
    nodes = default_u_grid() if nodes is None else np.asarray(nodes, dtype=float)
    x = (nodes - center) / width
    bump = np.where(np.abs(x) < 1.0, height * (1.0 - x**2) ** 3, 0.0)
    return GridWeight(P, nodes, np.asarray(support_function(P, nodes)) + bump)


def weight_from_json(obj: dict, polytope: dict | None = None) -> ToricWeight:
    """Inverse of ``to_json``; nested weights inherit ``polytope`` when they omit it.

    Besides the stored kinds, ``fubini_study`` and ``bump`` build catalog weights.
    """
    kind = obj.get("kind")
    pobj = obj.get("polytope", polytope)
    if kind == "shifted":
        return Shifted(weight_from_json(obj["base"], pobj), float(obj["shift"]))
    if kind == "blend":
        return Blend(
            weight_from_json(obj["first"], pobj), weight_from_json(obj["second"], pobj), float(obj["s"])
        )
    if pobj is None:
        raise ValueError("weight needs a polytope")
    P = LatticePolytope.from_json(pobj)
    if kind == "canonical":
        return Canonical(P)
    if kind == "fubini_study":
        return fubini_study(P)
    if kind == "monomial_exp":
        terms = obj["terms"]
        ms = np.array([np.atleast_1d(t[0]) for t in terms])
        cs = np.array([t[1] for t in terms], dtype=float)
        return MonomialExp(P, ms, cs)
    if kind == "grid":
        return GridWeight(P, np.asarray(obj["nodes"], float), np.asarray(obj["values"], float))
    if kind == "bump":
        return bump_weight(P, **{k: float(obj[k]) for k in ("center", "width", "height") if k in obj})
    raise ValueError(f"unknown weight kind {kind!r}")


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True, eq=False)
class MADensity:
    """Normalized Monge-Ampere density ``psi'' / vol`` of a smooth 1-D weight."""

    weight: ToricWeight

    def __post_init__(self):
        if self.weight.dim != 1 or not self.weight.smooth:
            raise WeightNotSmooth("densities exist only for smooth one-dimensional weights")
        object.__setattr__(self, "_logvol", math.log(geometric_volume(self.weight.polytope)))

    def logpdf(self, u):
        return self.weight.log_d2(u) - self._logvol

    def pdf(self, u):
        return np.exp(self.logpdf(u))

    def tail_mass(self, lo: float, hi: float) -> tuple[float, float]:
        """Exact masses of ``(-inf, lo]`` and ``[hi, inf)``."""
        left, _ = self.weight.slope_gaps(lo)
        _, right = self.weight.slope_gaps(hi)
        vol = math.exp(self._logvol)
        return float(left) / vol, float(right) / vol

    def envelope(self, u):
        """Declared exponential envelope of the density (valid for ``u != 0``)."""
        amp_l, rate_l, amp_r, rate_r = self.weight.decay_rates()
        a, b = self.weight.polytope.interval
        u = np.asarray(u, dtype=float)
        vol = math.exp(self._logvol)
        # psi'' <= 2 (b - a) * slope gap
        left = 2.0 * (b - a) * amp_l * np.exp(rate_l * np.minimum(u, 0.0)) / vol
        right = 2.0 * (b - a) * amp_r * np.exp(-rate_r * np.maximum(u, 0.0)) / vol
        return np.where(u < 0, left, right)

    def to_json(self):
        return {"monge_ampere": self.weight.to_json()}


@dataclass(frozen=True, eq=False)
class RadialMeasure:
    """Probability measure on ``R^n``: weighted atoms plus an optional 1-D density."""

    dim: int
    atom_locations: np.ndarray
    atom_weights: np.ndarray
    density: MADensity | None = None
    density_mass: float = 0.0

    def __post_init__(self):
        loc = np.asarray(self.atom_locations, dtype=float).reshape(-1, self.dim)
        w = np.asarray(self.atom_weights, dtype=float).reshape(-1)
        if len(loc) != len(w) or np.any(~(w > 0)):
            raise ValueError("atoms need positive weights")
        if self.density is not None and self.dim != 1:
            raise DimensionUnsupported("densities are only supported for n = 1")
        total = float(w.sum()) + (self.density_mass if self.density is not None else 0.0)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"total mass is {total}, expected 1")
        object.__setattr__(self, "atom_locations", loc)
        object.__setattr__(self, "atom_weights", w)

    @classmethod
    def haar(cls, dim: int = 1) -> "RadialMeasure":
        return cls(dim, np.zeros((1, dim)), np.ones(1))

    @classmethod
    def atom(cls, location, dim: int = 1) -> "RadialMeasure":
        return cls(dim, np.asarray(location, dtype=float).reshape(1, dim), np.ones(1))

    @classmethod
    def from_density(cls, density: MADensity) -> "RadialMeasure":
        return cls(1, np.zeros((0, 1)), np.zeros(0), density, 1.0)

    def to_json(self):
        return {
            "dim": self.dim,
            "atoms": [[loc.tolist(), float(w)] for loc, w in zip(self.atom_locations, self.atom_weights)],
            "density": None if self.density is None else self.density.to_json(),
        }


def measure_from_json(obj: dict, polytope: dict | None = None) -> RadialMeasure:
    kind = obj.get("kind")
    if kind == "haar":
        return RadialMeasure.haar(int(obj.get("dim", 1)))
    if kind == "monge_ampere":
        return ma_measure(weight_from_json(obj["weight"], polytope))
    dim = int(obj.get("dim", 1))
    atoms = obj.get("atoms", [])
    loc = np.array([np.atleast_1d(a[0]) for a in atoms], dtype=float).reshape(-1, dim)
    w = np.array([a[1] for a in atoms], dtype=float)
    dens = obj.get("density")
    if dens is None:
        return RadialMeasure(dim, loc, w)
    density = MADensity(weight_from_json(dens["monge_ampere"], polytope))
    return RadialMeasure(dim, loc, w, density, 1.0 - float(w.sum()))


def ma_measure(w: ToricWeight) -> RadialMeasure:
    """Normalized Monge-Ampere measure ``MA(psi) / vol`` (dimension 1).

    The canonical weight has all its curvature at ``u = 0``, so its measure
    is the atom there; smooth weights give a density; shifts change nothing.
    """
    if isinstance(w, Shifted):
        return ma_measure(w.base)
    if isinstance(w, Canonical):
        return RadialMeasure.haar(w.dim)
    if w.dim != 1:
        raise DimensionUnsupported("Monge-Ampere measures are implemented for n = 1")
    if isinstance(w, MonomialExp):
        return RadialMeasure.from_density(MADensity(w))
    raise WeightNotSmooth(f"{type(w).__name__} weights have no Monge-Ampere density")


# ---------------------------------------------------------------------------
# integration


def _tail_sup_estimate(f, density: MADensity, edge: float, direction: float) -> float:
    """Sample ``|f|`` on the tail; require ``|f| * envelope`` to decay."""
    xs = edge + direction * np.geomspace(1e-3, 64.0, 40)
    fx = np.abs(np.asarray(f(xs), dtype=float))
    if not np.all(np.isfinite(fx)):
        raise TailNotDominated("integrand is not finite on the tail")
    prod = fx * density.envelope(xs)
    if prod[-1] > prod[0] * (1 + 1e-12) and prod[-1] > 0:
        raise TailNotDominated("integrand times envelope grows on the tail")
    return float(fx.max())


def integrate(
    f: Callable,
    mu: RadialMeasure,
    eps: float = 1e-10,
    tail_sup: Callable[[float, float], tuple[float, float]] | None = None,
    breakpoints: Sequence[float] = (0.0,),
    full_output: bool = False,
):
    """``int f dmu``: atom sum plus adaptive Gauss-Legendre on a certified box.

    The box ``[lo, hi]`` is widened until ``sup|f|`` on each tail times the
    exact tail mass of the density is below ``eps / 4``. ``tail_sup(lo, hi)``
    may supply rigorous tail suprema; otherwise they are sampled and the
    integrand is checked against the density's decay envelope.
    """
    val = 0.0
    if len(mu.atom_weights):
        pts = mu.atom_locations if mu.dim > 1 else mu.atom_locations[:, 0]
        fx = np.asarray(f(pts), dtype=float).reshape(-1)
        val = math.fsum(mu.atom_weights * fx)
    err = 0.0
    if mu.density is not None:
        dens = mu.density
        half = 8.0
        for _ in range(40):
            lo, hi = -half, half
            if tail_sup is None:
                sl = _tail_sup_estimate(f, dens, lo, -1.0)
                sr = _tail_sup_estimate(f, dens, hi, 1.0)
            else:
                sl, sr = tail_sup(lo, hi)
            ml, mr = dens.tail_mass(lo, hi)
            tail = sl * ml + sr * mr
            if tail <= eps / 4:
                break
            half *= 1.5
        else:
            raise TailNotDominated("could not find a box with a small enough tail")

        def g(x):
            return np.asarray(f(x), dtype=float) * dens.pdf(x)

        part, qerr = adaptive_gauss_legendre(g, lo, hi, tol=eps / 2, breakpoints=breakpoints)
        val += mu.density_mass * part
        err = tail + qerr
    if full_output:
        return val, err
    return val
