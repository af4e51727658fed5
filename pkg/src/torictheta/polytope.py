"""Lattice polytopes in dimension 1 and 2 and their dilated lattice points.

Membership tests use exact integer arithmetic: every edge of ``k * P`` gives
an integer half-plane ``cross(e, p - v) >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionUnsupported


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _convex_hull(points: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Monotone chain; counterclockwise, starting at the lexicographic minimum."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[tuple[int, int]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[int, int]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class LatticePolytope:
    """A full-dimensional lattice polytope given by its vertices.

    Any finite point set is accepted; the stored vertices are its extreme
    points, sorted (dim 1) or counterclockwise from the lexicographic minimum
    (dim 2).
    """

    dim: int
    vertices: tuple[tuple[int, ...], ...]
    _halfplanes: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DimensionUnsupported(f"only dimensions 1 and 2 are supported, got {self.dim}")
        pts = []
        for raw in self.vertices:
            raw = np.atleast_1d(raw)
            v = tuple(int(x) for x in raw)
            if len(v) != self.dim or any(x != y for x, y in zip(v, raw)):
                raise ValueError(f"vertex {raw} is not an integer point of dimension {self.dim}")
            pts.append(v)
        if self.dim == 1:
            xs = sorted({p[0] for p in pts})
            if len(xs) < 2:
                raise ValueError("a one-dimensional polytope needs two distinct endpoints")
            verts = ((xs[0],), (xs[-1],))
            planes = ()
        else:
            verts = tuple(_convex_hull(pts))
            if len(verts) < 3:
                raise ValueError("polygon has zero area")
            planes = tuple(
                (verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts))
            )
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_halfplanes", planes)

    @classmethod
    def segment(cls, a: int, b: int) -> "LatticePolytope":
        return cls(1, ((a,), (b,)))

    @classmethod
    def simplex(cls, d: int = 1) -> "LatticePolytope":
        """``d`` times the standard 2-simplex (the polytope of O(d) on P^2)."""
        return cls(2, ((0, 0), (d, 0), (0, d)))

    @classmethod
    def square(cls, d: int = 1) -> "LatticePolytope":
        return cls(2, ((0, 0), (d, 0), (d, d), (0, d)))

    @property
    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    @property
    def interval(self) -> tuple[int, int]:
        if self.dim != 1:
            raise DimensionUnsupported("interval() is only defined in dimension 1")
        return self.vertices[0][0], self.vertices[1][0]

    def dilate(self, k: int) -> "LatticePolytope":
        return LatticePolytope(self.dim, tuple(tuple(k * x for x in v) for v in self.vertices))

    def contains(self, m: Sequence[int], k: int = 1) -> bool:
        m = tuple(int(x) for x in m)
        if self.dim == 1:
            a, b = self.interval
            return k * a <= m[0] <= k * b
        for p, q in self._halfplanes:
            kp = (k * p[0], k * p[1])
            kq = (k * q[0], k * q[1])
            if _cross(kp, kq, m) < 0:
                return False
        return True

    def _mask(self, pts: np.ndarray, k: int) -> np.ndarray:
        if self.dim == 1:
            a, b = self.interval
            return (pts[:, 0] >= k * a) & (pts[:, 0] <= k * b)
        mask = np.ones(len(pts), dtype=bool)
        for p, q in self._halfplanes:
            ex, ey = k * (q[0] - p[0]), k * (q[1] - p[1])
            mask &= ex * (pts[:, 1] - k * p[1]) - ey * (pts[:, 0] - k * p[0]) >= 0
        return mask

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": [list(v) for v in self.vertices]}

    @classmethod
    def from_json(cls, obj: dict) -> "LatticePolytope":
        return cls(int(obj["dim"]), tuple(tuple(v) for v in obj["vertices"]))


@dataclass(frozen=True, eq=False)
class SectionSpace:
    """Monomial basis ``chi^m``, ``m in (k P) cap Z^n``, in lexicographic order."""

    polytope: LatticePolytope
    k: int
    exponents: np.ndarray

    @property
    def n_k(self) -> int:
        return len(self.exponents)

    @property
    def dim(self) -> int:
        return self.polytope.dim


def lattice_points(P: LatticePolytope, k: int = 1) -> SectionSpace:
    """Enumerate ``(k P) cap Z^n`` exactly over the bounding box of ``k`` times the vertices."""
    if P.dim > 2:
        raise DimensionUnsupported("lattice point enumeration is limited to n <= 2")
    k = int(k)
    if k < 1:
        raise ValueError("k must be a positive integer")
    v = np.array(P.vertices, dtype=np.int64) * k
    lo, hi = v.min(axis=0), v.max(axis=0)
    axes = [np.arange(lo[i], hi[i] + 1, dtype=np.int64) for i in range(P.dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.dim)
    pts = grid[P._mask(grid, k)]
    # meshgrid with ij indexing is already lexicographic; make it explicit
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    pts.setflags(write=False)
    return SectionSpace(P, k, pts)


def count_points(P: LatticePolytope, k: int) -> int:
    return lattice_points(P, k).n_k


def support_function(P: LatticePolytope, u) -> np.ndarray | float:
    """``max_{v vertex} <v, u>``; ``u`` may be a scalar (dim 1) or an array of points."""
    u = np.asarray(u, dtype=float)
    if P.dim == 1 and (u.ndim == 0 or u.shape[-1] != 1):
        u = u[..., None]
    vals = u @ P.vertex_array.T
    out = vals.max(axis=-1)
    return out if np.ndim(out) else float(out)


def geometric_volume(P: LatticePolytope) -> int:
    """``n!`` times the Euclidean volume, i.e. the degree of the line bundle."""
    if P.dim == 1:
        a, b = P.interval
        return b - a
    vs = P.vertices
    twice_area = sum(
        vs[i][0] * vs[(i + 1) % len(vs)][1] - vs[(i + 1) % len(vs)][0] * vs[i][1]
        for i in range(len(vs))
    )
    return abs(twice_area)


def ehrhart_polynomial(P: LatticePolytope) -> list[Fraction]:
    """Exact coefficients ``c_0..c_n`` of ``N_k = sum c_j k^j`` by interpolation at ``k = 0..n``."""
    n = P.dim
    ks = list(range(0, n + 1))
    vals = [1] + [count_points(P, k) for k in ks[1:]]
    # Lagrange interpolation with exact rationals
    coeffs = [Fraction(0)] * (n + 1)
    for i, ki in enumerate(ks):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, kj in enumerate(ks):
            if j == i:
                continue
            basis = [Fraction(0)] + basis  # multiply by k
            for d in range(len(basis) - 1):
                basis[d] -= kj * basis[d + 1]
            denom *= ki - kj
        for d in range(n + 1):
            coeffs[d] += vals[i] * basis[d] / denom
    return coeffs


def leading_coefficient_check(P: LatticePolytope, ks: Sequence[int]) -> np.ndarray:
    """``N_k n! / k^n - vol(L)`` for each ``k``."""
    n = P.dim
    vol = geometric_volume(P)
    return np.array([count_points(P, k) * math.factorial(n) / k**n - vol for k in ks])
