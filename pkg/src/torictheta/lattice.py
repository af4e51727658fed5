"""Euclidean lattices ``(Z^N, G)``: theta series, short vectors and invariants.

All theta sums are kept on the natural-log scale. Dense lattices are summed
by Fincke-Pohst enumeration over the Cholesky factor of the Gram matrix, with
the truncation tail certified through

    sum_{t q(v) > R^2} exp(-pi t q(v)) <= exp(-pi (1 - d) R^2) * theta(d t),

where ``theta(d t)`` is bounded above by ``theta_1(d t lambda_min)^N`` and the
split ``d`` (``1/2`` being the symmetric choice) minimizes the radius.
Diagonal lattices factor into one-dimensional sums ``theta_1``, which switch
to the Jacobi functional equation below 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import EnumerationBudget, NotPositiveDefinite

DEFAULT_BUDGET = 10**7
DEFAULT_EPS = 1e-13
_SPLITS = (0.5, 0.4, 0.3, 0.2, 0.1, 0.05)

# n = 1..6 is enough for c >= 1: the first omitted term is below exp(-49 pi).
_N = np.arange(1, 7, dtype=float)
_N2 = _N**2


# ---------------------------------------------------------------------------
# one-dimensional theta function


def _log_theta1_direct(c: np.ndarray) -> np.ndarray:
    return np.log1p(2.0 * np.exp(-np.pi * np.multiply.outer(c, _N2)).sum(axis=-1))


def log_theta1(c):
    """``log sum_{n in Z} exp(-pi c n^2)`` for ``c > 0`` (array-friendly)."""
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("theta_1 needs c > 0")
    small = c < 1.0
    cc = np.where(small, 1.0 / c, c)
    val = _log_theta1_direct(cc)
    out = np.where(small, val - 0.5 * np.log(c), val)
    return out if out.ndim else float(out)


def _log_s_direct(c: np.ndarray) -> np.ndarray:
    # log of 2 sum_{n>=1} n^2 exp(-pi c n^2), factoring out the n = 1 term
    rest = (_N2[1:] * np.exp(-np.pi * np.multiply.outer(c, _N2[1:] - 1.0))).sum(axis=-1)
    return math.log(2.0) - np.pi * c + np.log1p(rest)


def log_sigma2(c):
    """Log of the discrete Gaussian variance ``sum n^2 e^{-pi c n^2} / theta_1(c)``.

    Below ``c = 1`` it uses the derivative of the functional equation,
    ``sigma2(c) = 1/(2 pi c) - sigma2(1/c) / c^2``.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("sigma2 needs c > 0")
    small = c < 1.0
    cc = np.where(small, 1.0 / c, c)
    direct = _log_s_direct(cc) - _log_theta1_direct(cc)
    # small branch: sigma2(c) = (1/(2 pi c)) * (1 - 2 pi c * sigma2(1/c))  [cc = 1/c]
    corr = np.log1p(-2.0 * np.pi * cc * np.exp(direct))
    out = np.where(small, -np.log(2.0 * np.pi * c) + corr, direct)
    return out if out.ndim else float(out)


def sigma2(c):
    out = np.exp(log_sigma2(c))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# lattice type


@dataclass(frozen=True, eq=False)
class EuclideanLattice:
    """The lattice ``Z^N`` with inner product given by the Gram matrix ``gram``."""

    gram: np.ndarray
    diagonal_hint: bool = False
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = np.array(self.gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"Gram matrix must be square, got shape {g.shape}")
        if g.shape[0] and np.max(np.abs(g - g.T)) != 0.0:
            raise ValueError("Gram matrix is not exactly symmetric")
        if self.diagonal_hint and np.count_nonzero(g - np.diag(np.diag(g))):
            raise ValueError("diagonal_hint set on a non-diagonal Gram matrix")
        if self.diagonal_hint:
            d = np.diag(g)
            if np.any(~(d > 0)) or not np.all(np.isfinite(d)):
                raise NotPositiveDefinite("diagonal Gram entries must be positive")
            chol = np.diag(np.sqrt(d))
        else:
            try:
                chol = np.linalg.cholesky(g) if g.shape[0] else g
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(str(exc)) from None
            if g.shape[0] and not np.all(np.diag(chol) > 0):
                raise NotPositiveDefinite("non-positive Cholesky pivot")
        g.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def diagonal(cls, entries: Sequence[float]) -> "EuclideanLattice":
        return cls(np.diag(np.asarray(entries, dtype=float)), diagonal_hint=True)

    @classmethod
    def identity(cls, rank: int) -> "EuclideanLattice":
        return cls.diagonal(np.ones(rank))

    @property
    def rank(self) -> int:
        return self.gram.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower triangular ``C`` with ``G = C C^T``."""
        return self._chol

    def lambda_min_lower(self) -> float:
        """A guaranteed-positive lower bound for the smallest eigenvalue."""
        if self.diagonal_hint:
            return float(np.min(np.diag(self.gram)))
        lam = float(np.linalg.eigvalsh(self.gram)[0])
        lam -= 1e-13 * float(np.max(np.abs(self.gram)))
        if lam <= 0:
            raise NotPositiveDefinite("Gram matrix is numerically singular")
        return lam

    def norm_sq(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.einsum("...i,ij,...j->...", v, self.gram, v)

    def scaled(self, t: float) -> "EuclideanLattice":
        return EuclideanLattice(self.gram * float(t), diagonal_hint=self.diagonal_hint)

    def to_json(self) -> dict:
        return {"rank": self.rank, "gram": self.gram.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "EuclideanLattice":
        g = np.asarray(obj["gram"], dtype=float).reshape(int(obj["rank"]), int(obj["rank"]))
        diag = bool(obj.get("diagonal_hint", not np.count_nonzero(g - np.diag(np.diag(g)))))
        return cls(g, diagonal_hint=diag)


@dataclass(frozen=True)
class ThetaValue:
    """``log theta(t)`` with an error bound on the log scale.

    ``abs_error_bound`` bounds ``|log theta - log_value|``; since theta >= 1
    it also bounds the absolute error of the sum divided by theta.
    """

    log_value: float
    abs_error_bound: float
    truncation_radius_sq: float
    terms_enumerated: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def random_lattice(rank: int, rng: np.random.Generator, delta: float = 0.1) -> EuclideanLattice:
    """``G = A^T A + delta I`` with ``A`` uniform in ``[-1, 1]``."""
    a = rng.uniform(-1.0, 1.0, size=(rank, rank))
    g = a.T @ a + delta * np.eye(rank)
    g = 0.5 * (g + g.T)
    return EuclideanLattice(g)


# ---------------------------------------------------------------------------
# basic invariants


def log_covolume(L: EuclideanLattice) -> float:
    return float(math.fsum(np.log(np.diag(L.cholesky))))


def covolume(L: EuclideanLattice) -> float:
    return math.exp(log_covolume(L))


def dual_lattice(L: EuclideanLattice) -> EuclideanLattice:
    if L.diagonal_hint:
        return EuclideanLattice.diagonal(1.0 / np.diag(L.gram))
    # solve through the Cholesky factor rather than inverting G directly
    cinv = np.linalg.solve(L.cholesky, np.eye(L.rank))
    ginv = cinv.T @ cinv
    return EuclideanLattice(0.5 * (ginv + ginv.T))


def degree(L: EuclideanLattice) -> float:
    return -log_covolume(L)


# ---------------------------------------------------------------------------
# Fincke-Pohst enumeration


def iter_short_vectors(
    L: EuclideanLattice, radius_sq: float, budget: int = DEFAULT_BUDGET, chunk: int = 1 << 18
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(vectors, norms_sq)`` chunks covering ``{v : v^T G v <= radius_sq}``.

    The search walks the coordinates from last to first, so each level only
    needs the partial sums of the upper-triangular factor. Chunks come out
    in a deterministic order.
    """
    n = L.rank
    if n == 0:
        yield np.zeros((1, 0), dtype=np.int64), np.zeros(1)
        return
    if radius_sq < 0:
        return
    r = L.cholesky.T  # G = r^T r, r upper triangular
    r2 = radius_sq * (1.0 + 1e-12) + 1e-300
    coords = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    seen = 0
    for i in range(n - 1, -1, -1):
        rii = r[i, i]
        shift = coords @ r[i, i + 1 :] if coords.shape[1] else np.zeros(len(partial))
        center = -shift / rii
        half = np.sqrt(np.maximum(r2 - partial, 0.0)) / rii
        lo = np.ceil(center - half)
        hi = np.floor(center + half)
        counts = np.maximum(hi - lo + 1.0, 0.0)
        total = float(counts.sum())
        if seen + total > budget:
            raise EnumerationBudget(
                f"enumeration needs more than {budget} nodes (radius^2 = {radius_sq:.6g})"
            )
        seen += int(total)
        counts = counts.astype(np.int64)
        if i > 0:
            coords, partial = _expand(coords, partial, lo, counts, center, rii, r2)
            continue
        # last level: expand parents in chunks to bound memory
        starts = np.concatenate([[0], np.cumsum(counts)])
        p0 = 0
        npar = len(counts)
        while p0 < npar:
            p1 = int(np.searchsorted(starts, starts[p0] + chunk, side="right")) - 1
            p1 = min(max(p1, p0 + 1), npar)
            sl = slice(p0, p1)
            vecs, _ = _expand(coords[sl], partial[sl], lo[sl], counts[sl], center[sl], rii, r2)
            if len(vecs):
                q = L.norm_sq(vecs)
                keep = q <= radius_sq
                if np.any(keep):
                    yield vecs[keep], q[keep]
            p0 = p1


def _expand(coords, partial, lo, counts, center, rii, r2):
    total = int(counts.sum())
    parent = np.repeat(np.arange(len(counts)), counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    vi = lo[parent].astype(np.int64) + offs
    new_partial = partial[parent] + (rii * (vi - center[parent])) ** 2
    new_coords = np.column_stack([vi, coords[parent]]) if coords.shape[1] else vi[:, None]
    keep = new_partial <= r2
    return new_coords[keep], new_partial[keep]


def enumerate_short_vectors(
    L: EuclideanLattice, radius_sq: float, budget: int = DEFAULT_BUDGET
) -> tuple[np.ndarray, np.ndarray]:
    parts = list(iter_short_vectors(L, radius_sq, budget))
    if not parts:
        return np.zeros((0, L.rank), dtype=np.int64), np.zeros(0)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# ---------------------------------------------------------------------------
# theta series


def _log_theta_upper(L: EuclideanLattice, t: float) -> float:
    """Upper bound for ``log theta_L(t)`` from ``q(v) >= lambda_min |v|^2``."""
    return L.rank * log_theta1(t * L.lambda_min_lower())


def _tail_radius_sq(L: EuclideanLattice, t: float, eps: float, moment: bool = False) -> float:
    """``R^2`` (in units of ``t q``) with certified tail ``<= eps``.

    Splitting ``exp(-pi x) = exp(-pi (1 - d) x) exp(-pi d x)`` gives
    ``tail <= exp(-pi (1 - d) R^2) theta(d t)``; the smallest radius over a
    few split fractions ``d`` is used (``d = 1/2`` is the symmetric split).
    With ``moment`` the tail of ``sum q exp(-pi t q)`` is bounded instead,
    which costs an extra factor ``R^2 / t`` once ``R^2 >= 1 / (pi (1 - d))``.
    """
    best = math.inf
    for d in _SPLITS:
        log_up = _log_theta_upper(L, t * d)
        c = np.pi * (1.0 - d)
        r2 = max((log_up - math.log(eps)) / c, 0.0)
        if moment:
            for _ in range(6):
                r2 = max(r2, 1.0 / c)
                r2 = (log_up - math.log(eps) + math.log(r2 / t)) / c
            r2 = max(r2, 1.0 / c)
            # the iteration approaches the root from below; step past it
            while c * r2 < log_up - math.log(eps) + math.log(r2 / t):
                r2 *= 1.01
        best = min(best, r2)
    return best


def log_theta(
    L: EuclideanLattice, t: float = 1.0, eps: float = DEFAULT_EPS, budget: int = DEFAULT_BUDGET
) -> ThetaValue:
    """``log sum_{v in Z^N} exp(-pi t v^T G v)`` with certified error."""
    if not t > 0 or not eps > 0:
        raise ValueError("log_theta needs t > 0 and eps > 0")
    if L.diagonal_hint:
        logs = log_theta1(t * np.diag(L.gram))
        logs = np.atleast_1d(logs)
        val = math.fsum(logs)
        # per-coordinate truncation is below exp(-49 pi); only rounding remains
        err = 4.0 * np.finfo(float).eps * (math.fsum(np.abs(logs)) + L.rank)
        return ThetaValue(val, err, float("nan"), 13 * L.rank)
    r2 = _tail_radius_sq(L, t, eps)
    terms = []
    count = 0
    for _, q in iter_short_vectors(L, r2 / t, budget):
        terms.append(math.fsum(np.exp(-np.pi * t * q)))
        count += len(q)
    total = math.fsum(terms)
    err = eps / total + 4.0 * np.finfo(float).eps * count
    return ThetaValue(math.log(total), err, r2, count)


def h0_theta(L: EuclideanLattice, eps: float = DEFAULT_EPS, budget: int = DEFAULT_BUDGET) -> float:
    return log_theta(L, 1.0, eps, budget).log_value


def h1_theta(L: EuclideanLattice, eps: float = DEFAULT_EPS, budget: int = DEFAULT_BUDGET) -> float:
    return h0_theta(dual_lattice(L), eps, budget)


def poisson_residual(L: EuclideanLattice, eps: float = DEFAULT_EPS, budget: int = DEFAULT_BUDGET) -> float:
    """``h0_theta - h1_theta - deg``; zero up to summation error."""
    return h0_theta(L, eps, budget) - h1_theta(L, eps, budget) - degree(L)


def h0_ar(L: EuclideanLattice, budget: int = DEFAULT_BUDGET) -> float:
    """Log of the exact number of lattice vectors of norm at most 1."""
    count = sum(len(q) for _, q in iter_short_vectors(L, 1.0, budget))
    return math.log(count)


def theta_count_sandwich(L: EuclideanLattice, eps: float = DEFAULT_EPS) -> tuple[float, float, float]:
    """Return ``(lower, h0_ar, upper)`` of the theta/counting sandwich."""
    n = L.rank
    h0 = h0_theta(L, eps)
    lower = h0 - 0.5 * n * math.log(n) + math.log(1.0 - 1.0 / (2.0 * np.pi))
    return lower, h0_ar(L), h0 + np.pi


def log_second_moment(
    L: EuclideanLattice, t: float = 1.0, eps: float = DEFAULT_EPS, budget: int = DEFAULT_BUDGET
) -> float:
    """``log sum_v q(v) exp(-pi t q(v))`` where ``q(v) = v^T G v``."""
    if not t > 0:
        raise ValueError("t must be positive")
    if L.diagonal_hint:
        d = np.diag(L.gram)
        lt = log_theta(L, t).log_value
        return lt + float(logsumexp(np.log(d) + np.atleast_1d(log_sigma2(t * d))))
    r2 = _tail_radius_sq(L, t, eps, moment=True)
    terms = []
    for _, q in iter_short_vectors(L, r2 / t, budget):
        terms.append(math.fsum(q * np.exp(-np.pi * t * q)))
    total = math.fsum(terms)
    return math.log(total) if total > 0 else -math.inf


def second_moment(L: EuclideanLattice, t: float = 1.0, eps: float = DEFAULT_EPS) -> float:
    return math.exp(log_second_moment(L, t, eps))


def u_function(L: EuclideanLattice, t: float = 1.0, eps: float = DEFAULT_EPS) -> float:
    """``2 pi * second_moment(t) / theta(t)``; never exceeds ``rank / t``."""
    if L.diagonal_hint:
        d = np.diag(L.gram)
        return float(2.0 * np.pi * np.sum(d * np.atleast_1d(sigma2(t * d))))
    lsm = log_second_moment(L, t, eps)
    lt = log_theta(L, t, eps).log_value
    return 2.0 * np.pi * math.exp(lsm - lt)


@dataclass(frozen=True)
class MonotonicityReport:
    t_grid: tuple
    log_theta: tuple
    decreasing_violation: float
    scaled_increasing_violation: float
    bound_violation: float
    tolerance: float

    @property
    def max_violation(self) -> float:
        return max(self.decreasing_violation, self.scaled_increasing_violation, self.bound_violation)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def lemma_monotonicity_check(
    L: EuclideanLattice, t_grid: Sequence[float], eps: float = DEFAULT_EPS
) -> MonotonicityReport:
    """Check ``log theta`` decreasing, ``log theta + (N/2) log t`` increasing and
    ``|log theta(t) - log theta(1)| <= (N/2) |log t|`` on a grid."""
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
        raise ValueError("t_grid must be strictly increasing and positive")
    n = L.rank
    vals = [log_theta(L, float(t), eps) for t in ts]
    lt = np.array([v.log_value for v in vals])
    errs = np.array([v.abs_error_bound for v in vals])
    one = log_theta(L, 1.0, eps)
    dec = float(np.max(np.diff(lt), initial=0.0))
    scaled = lt + 0.5 * n * np.log(ts)
    inc = float(np.max(-np.diff(scaled), initial=0.0))
    bound = float(np.max(np.abs(lt - one.log_value) - 0.5 * n * np.abs(np.log(ts))))
    tol = 2.0 * float(np.max(errs)) + 2.0 * one.abs_error_bound + 1e-12
    return MonotonicityReport(
        tuple(ts.tolist()),
        tuple(lt.tolist()),
        max(dec, 0.0),
        max(inc, 0.0),
        max(bound, 0.0),
        tol,
    )
