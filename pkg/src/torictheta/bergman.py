"""Section lattices of toric line bundles: Gram data, Bergman and theta distortion.

For a torus-invariant weight and measure the monomials ``chi^m`` are
orthogonal, so the section lattice of ``H^0(kL)`` is ``(Z^{N_k}, diag M)`` with

    M_mm = int exp(2 <m, u> - 2 k psi(u)) dmu(u).

Entries span many orders of magnitude at large ``k`` and are kept as logs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionUnsupported, GridNotConverged, TailNotDominated, WeightNotSmooth
from .lattice import (
    EuclideanLattice,
    _tail_radius_sq,
    enumerate_short_vectors,
    log_sigma2,
    log_theta,
    log_theta1,
    u_function,
)
from .polytope import LatticePolytope, SectionSpace, geometric_volume, lattice_points
from .quadrature import adaptive_gauss_legendre, gauss_nodes
from .weights import (
    Blend,
    Canonical,
    MonomialExp,
    RadialMeasure,
    Shifted,
    ToricWeight,
    integrate,
)

DEFAULT_U_GRID = np.linspace(-4.0, 4.0, 41)


# ---------------------------------------------------------------------------
# Gram and evaluation data


@dataclass(frozen=True, eq=False)
class GramData:
    """Diagonal Gram matrix of the monomial basis, stored as ``log M_mm``."""

    space: SectionSpace
    log_diag: np.ndarray
    rel_err: np.ndarray
    weight: ToricWeight
    measure: RadialMeasure

    @property
    def diag(self) -> np.ndarray:
        return np.exp(self.log_diag)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def k(self) -> int:
        return self.space.k

    def lattice(self) -> EuclideanLattice:
        return EuclideanLattice.diagonal(self.diag)

    def log_det(self) -> float:
        return math.fsum(self.log_diag)


@dataclass(frozen=True, eq=False)
class EvalData:
    """``log ||chi^m(x)||^2 = 2 <m, u> - 2 k psi(u)`` at the points ``u``."""

    space: SectionSpace
    points: np.ndarray
    log_diag: np.ndarray  # shape (n_points, N_k)

    @property
    def diag(self) -> np.ndarray:
        return np.exp(self.log_diag)


def _as_points(u, dim: int) -> tuple[np.ndarray, bool]:
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0 or (dim > 1 and u.ndim == 1)
    return u.reshape(-1, dim), scalar


def log_section_norms(S: SectionSpace, w: ToricWeight, u) -> np.ndarray:
    """``2 <m, u> - 2 k psi(u)`` for points ``u`` (rows) and exponents (columns)."""
    pts = np.asarray(u, dtype=float).reshape(-1, S.dim)
    psi = np.asarray(w(pts if S.dim > 1 else pts[:, 0]), dtype=float).reshape(-1)
    return 2.0 * pts @ S.exponents.T.astype(float) - 2.0 * S.k * psi[:, None]


def eval_data(S: SectionSpace, w: ToricWeight, u) -> EvalData:
    pts = np.asarray(u, dtype=float).reshape(-1, S.dim)
    return EvalData(S, pts, log_section_norms(S, w, pts))


def _check_model(S: SectionSpace, w: ToricWeight, mu: RadialMeasure) -> None:
    if S.polytope != w.polytope:
        raise ValueError("section space and weight use different polytopes")
    if mu.dim != S.dim:
        raise ValueError("measure and polytope dimensions differ")


def _log_density_entry(m: float, k: int, w: ToricWeight, mu: RadialMeasure, eps: float):
    """``log int exp(2 m u - 2 k psi) dmu_density`` and its relative error bound."""
    dens = mu.density
    a, b = w.polytope.interval
    g_inf = w.gap_lower_bound()

    def h(u):
        return 2.0 * m * u - 2.0 * k * np.asarray(w(u), dtype=float) + dens.logpdf(u)

    probe = np.linspace(-60.0, 60.0, 2401)
    hv = h(probe)
    i = int(np.argmax(hv))
    hmax, peak = float(hv[i]), float(probe[i])

    def f(u):
        return np.exp(h(u) - hmax)

    half = max(8.0, abs(peak) + 8.0)
    for _ in range(60):
        lo, hi = -half, half
        ml, mr = dens.tail_mass(lo, hi)
        # psi >= Psi + g_inf, and the monomial over Psi decays on each tail
        sup_l = 2.0 * (m - k * a) * lo - 2.0 * k * g_inf - hmax
        sup_r = -2.0 * (k * b - m) * hi - 2.0 * k * g_inf - hmax
        tail = math.exp(min(sup_l, 700.0)) * ml + math.exp(min(sup_r, 700.0)) * mr
        if tail <= 0.1 * eps:
            break
        half *= 1.5
    else:
        raise TailNotDominated(f"Gram entry m = {m}: tail never falls below tolerance")
    breaks = sorted({0.0, peak, *(x for x in w.kinks() if lo < x < hi and len(w.kinks()) < 64)})
    val, qerr = adaptive_gauss_legendre(f, lo, hi, tol=0.1 * eps, breakpoints=breaks)
    if not val > 0:
        raise TailNotDominated(f"Gram entry m = {m} vanished numerically")
    return hmax + math.log(val), (qerr + tail) / val


def gram_matrix(
    S: SectionSpace, mu: RadialMeasure, w: ToricWeight, eps: float = 1e-12
) -> GramData:
    """Diagonal Gram matrix ``M_mm = int ||chi^m||^2_{k psi} dmu``.

    Atoms are summed exactly in the log domain; a density part (n = 1) is
    integrated with the peak of each integrand scaled to 1, so ``eps`` is a
    relative tolerance.
    """
    _check_model(S, w, mu)
    parts = []
    errs = np.zeros(S.n_k)
    if len(mu.atom_weights):
        ln = log_section_norms(S, w, mu.atom_locations)
        parts.append(logsumexp(ln + np.log(mu.atom_weights)[:, None], axis=0))
    if mu.density is not None:
        if S.dim != 1:
            raise DimensionUnsupported("density measures need n = 1")
        vals = np.empty(S.n_k)
        for j, m in enumerate(S.exponents[:, 0]):
            vals[j], errs[j] = _log_density_entry(float(m), S.k, w, mu, eps)
        parts.append(vals + math.log(mu.density_mass))
    log_diag = parts[0] if len(parts) == 1 else np.logaddexp(parts[0], parts[1])
    log_diag = np.asarray(log_diag, dtype=float)
    log_diag.setflags(write=False)
    return GramData(S, log_diag, errs, w, mu)


def _gram(S, mu, w, gram):
    return gram_matrix(S, mu, w) if gram is None else gram


def rho(S: SectionSpace, mu: RadialMeasure, w: ToricWeight, u, gram: GramData | None = None):
    """Bergman distortion ``sum_m ||chi^m(x)||^2 / M_mm``."""
    g = _gram(S, mu, w, gram)
    pts, scalar = _as_points(u, S.dim)
    out = np.exp(logsumexp(log_section_norms(S, w, pts) - g.log_diag[None, :], axis=1))
    return float(out[0]) if scalar else out


def theta_distortion(
    S: SectionSpace,
    mu: RadialMeasure,
    w: ToricWeight,
    u,
    t: float = 1.0,
    gram: GramData | None = None,
    method: str = "diagonal",
    eps: float = 1e-13,
    budget: int = 10**7,
):
    """``Theta(mu, k psi)(t; x)``, the Gaussian-weighted mean of ``2 pi |v(x)|^2``.

    ``diagonal``: ``2 pi sum_m ||chi^m(x)||^2 sigma^2(t M_mm)``, exact because
    the coordinates of the discrete Gaussian are independent and centred.
    ``dense``: direct enumeration over ``Z^{N_k}`` (validation only).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    g = _gram(S, mu, w, gram)
    pts, scalar = _as_points(u, S.dim)
    ln = log_section_norms(S, w, pts)
    if method == "diagonal":
        ls = np.atleast_1d(log_sigma2(t * g.diag))
        out = 2.0 * np.pi * np.exp(logsumexp(ln + ls[None, :], axis=1))
    elif method == "dense":
        out = np.array([_dense_theta(t * g.diag, np.exp(0.5 * row), eps, budget)[0] for row in ln])
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out[0]) if scalar else out


def _dense_sums(gram: np.ndarray, quad: Callable, quad_scale: float, eps: float, budget: int):
    """``(sum e^{-pi q}, sum quad(a) e^{-pi q})`` over ``Z^N`` with ``q = a^T G a``.

    ``quad`` must satisfy ``|quad(a)| <= quad_scale * q(a)``; the tails of both
    sums are then certified below ``eps``.
    """
    L = EuclideanLattice(np.array(gram, dtype=float), diagonal_hint=False)
    r2 = max(
        _tail_radius_sq(L, 1.0, eps),
        _tail_radius_sq(L, 1.0, eps / max(quad_scale, 1e-300), moment=True),
    )
    vecs, q = enumerate_short_vectors(L, r2, budget)
    e = np.exp(-np.pi * q)
    return math.fsum(e), math.fsum(quad(vecs) * e), len(q)


def _dense_theta(mdiag: np.ndarray, c: np.ndarray, eps: float, budget: int) -> tuple[float, int]:
    lam = float(np.min(mdiag))
    cc = float(c @ c)
    theta, num, count = _dense_sums(
        np.diag(mdiag), lambda a: (a @ c) ** 2, cc / lam, eps, budget
    )
    return 2.0 * np.pi * num / theta, count


def theta_identity_check(
    M: np.ndarray, c: np.ndarray, eps: float = 1e-14, budget: int = 10**7
) -> dict:
    """Both sides of the matrix identity behind ``Theta <= rho`` with ``C = c c^T``:

        sum_a (a^T C a) e^{-pi a^T M a}
          = Tr(M^{-1} C) / (2 pi) * theta_M(1)
            - det(M)^{-1/2} sum_a (a^T M^{-1} C M^{-1} a) e^{-pi a^T M^{-1} a}.
    """
    M = np.array(M, dtype=float)
    c = np.asarray(c, dtype=float)
    if M.shape[0] > 12:
        raise DimensionUnsupported("dense identity checks are limited to N <= 12")
    Minv = np.linalg.inv(M)
    Minv = 0.5 * (Minv + Minv.T)
    lam = float(np.linalg.eigvalsh(M)[0])
    lam_inv = float(np.linalg.eigvalsh(Minv)[0])
    cc = float(c @ c)
    theta_m, lhs, n1 = _dense_sums(M, lambda a: (a @ c) ** 2, cc / lam, eps, budget)
    d = Minv @ c
    dd = float(d @ d)
    _, dual, n2 = _dense_sums(Minv, lambda a: (a @ d) ** 2, dd / lam_inv, eps, budget)
    sign, logdet = np.linalg.slogdet(M)
    trace = float(c @ Minv @ c)
    rhs = trace / (2.0 * np.pi) * theta_m - math.exp(-0.5 * logdet) * dual
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs) / max(abs(lhs), 1e-300),
        "vectors": n1 + n2,
    }


def model_identity_check(
    S: SectionSpace, mu: RadialMeasure, w: ToricWeight, u: float, gram: GramData | None = None
) -> dict:
    g = _gram(S, mu, w, gram)
    c = np.exp(0.5 * log_section_norms(S, w, np.atleast_1d(u))[0])
    return theta_identity_check(g.matrix, c)


def _theta_sup_bound(g: GramData, t: float) -> float:
    """``sup_u Theta(t; u)`` is at most ``2 pi sum sigma^2(t M) exp(-2 k g_inf)``."""
    ls = np.atleast_1d(log_sigma2(t * g.diag))
    return 2.0 * np.pi * float(np.exp(logsumexp(ls) - 2.0 * g.k * g.weight.gap_lower_bound()))


def u_integral_check(
    S: SectionSpace,
    mu: RadialMeasure,
    w: ToricWeight,
    t: float = 1.0,
    gram: GramData | None = None,
    eps: float = 1e-11,
) -> dict:
    """``int Theta(t) dmu`` by quadrature against ``U(t)`` of the section lattice."""
    g = _gram(S, mu, w, gram)
    sup = _theta_sup_bound(g, t)
    lhs = integrate(
        lambda x: theta_distortion(S, mu, w, np.atleast_1d(x), t, gram=g),
        mu,
        eps=eps * max(1.0, S.n_k),
        tail_sup=lambda lo, hi: (sup, sup),
        breakpoints=(0.0,),
    )
    rhs = u_function(g.lattice(), t)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "bound": S.n_k / t,
        "relative_gap": abs(lhs - rhs) / max(abs(rhs), 1e-300),
        "within_bound": rhs <= S.n_k / t * (1 + 1e-12),
    }


def section_h0_theta(S: SectionSpace, mu: RadialMeasure, w: ToricWeight, gram: GramData | None = None) -> float:
    """``h^0_theta`` of ``(H^0(kL), ||.||_{(mu, k psi)})``."""
    g = _gram(S, mu, w, gram)
    return log_theta(g.lattice()).log_value


def section_chi(S: SectionSpace, mu: RadialMeasure, w: ToricWeight, gram: GramData | None = None) -> float:
    """Arakelov degree ``-log covol = -1/2 log det M`` of the section lattice."""
    g = _gram(S, mu, w, gram)
    return 0.0 - 0.5 * g.log_det()  # avoid -0.0 in tables


# ---------------------------------------------------------------------------
# k-scans and extrapolation


@dataclass(frozen=True)
class ScanRow:
    k: int
    n_k: int
    h0_theta: float
    chi_hat: float
    v_k: float
    chi_k: float
    sup_rho: float
    theta_over_rho_max: float


CSV_HEADER = ("k", "N_k", "h0_theta", "chi_hat", "v_k", "chi_k", "sup_rho", "theta_over_rho_max")


@dataclass(frozen=True)
class Extrapolation:
    """Least-squares fit ``v_k = limit + a / k + b / k^2`` on the largest ``k``."""

    limit: float
    a: float
    b: float
    ks: tuple
    residual: float

    def to_json(self):
        return {"limit": self.limit, "a": self.a, "b": self.b, "ks": list(self.ks), "residual": self.residual}


def extrapolate(ks: Sequence[int], vals: Sequence[float], last: int = 5) -> Extrapolation:
    ks = np.asarray(ks, dtype=float)[-last:]
    vals = np.asarray(vals, dtype=float)[-last:]
    if len(ks) < 3:
        raise ValueError("need at least 3 values of k to extrapolate")
    A = np.column_stack([np.ones_like(ks), 1.0 / ks, 1.0 / ks**2])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    res = float(np.max(np.abs(A @ coef - vals)))
    return Extrapolation(float(coef[0]), float(coef[1]), float(coef[2]), tuple(int(k) for k in ks), res)


def scan_row(P: LatticePolytope, w: ToricWeight, mu: RadialMeasure, k: int, u_grid=None) -> ScanRow:
    n = P.dim
    S = lattice_points(P, k)
    g = gram_matrix(S, mu, w)
    h0 = section_h0_theta(S, mu, w, g)
    chi = section_chi(S, mu, w, g)
    scale = math.factorial(n + 1) / k ** (n + 1)
    sup_rho = math.nan
    ratio = math.nan
    if n == 1:
        grid = DEFAULT_U_GRID if u_grid is None else np.asarray(u_grid, dtype=float)
        r = rho(S, mu, w, grid, g)
        th = theta_distortion(S, mu, w, grid, 1.0, g)
        sup_rho = float(np.max(r))
        ratio = float(np.max(th / r))
    elif n == 2:
        r = rho(S, mu, w, np.zeros((1, 2)), g)
        th = theta_distortion(S, mu, w, np.zeros((1, 2)), 1.0, g)
        sup_rho, ratio = float(r[0]), float(th[0] / r[0])
    return ScanRow(k, S.n_k, h0, chi, h0 * scale, chi * scale, sup_rho, ratio)


def _scan_job(args):
    return scan_row(*args)


@dataclass(frozen=True)
class VolumeScan:
    rows: tuple
    volume_fit: Extrapolation
    chi_fit: Extrapolation

    def csv_rows(self):
        return [
            (r.k, r.n_k, r.h0_theta, r.chi_hat, r.v_k, r.chi_k, r.sup_rho, r.theta_over_rho_max)
            for r in self.rows
        ]

    def to_json(self):
        return {"volume_fit": self.volume_fit.to_json(), "chi_fit": self.chi_fit.to_json()}


def volume_scan(
    P: LatticePolytope,
    w: ToricWeight,
    mu: RadialMeasure,
    k_list: Sequence[int],
    jobs: int = 1,
    u_grid=None,
) -> VolumeScan:
    """``v_k`` and ``chi_k`` for each ``k`` plus their extrapolated limits."""
    ks = [int(k) for k in k_list]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be nonempty and increasing")
    work = [(P, w, mu, k, u_grid) for k in ks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_scan_job, work))
    else:
        rows = [_scan_job(a) for a in work]
    vf = extrapolate(ks, [r.v_k for r in rows])
    cf = extrapolate(ks, [r.chi_k for r in rows])
    return VolumeScan(tuple(rows), vf, cf)


def volume_estimate(P, w, mu, k_list, jobs: int = 1) -> VolumeScan:
    return volume_scan(P, w, mu, k_list, jobs)


def chi_volume_estimate(P, w, mu, k_list, jobs: int = 1) -> Extrapolation:
    return volume_scan(P, w, mu, k_list, jobs).chi_fit


# ---------------------------------------------------------------------------
# variation of h^0_theta along an affine path of weights


def _integrate_against(f, mu: RadialMeasure, eps: float, sup: float) -> float:
    return integrate(f, mu, eps=eps, tail_sup=lambda lo, hi: (sup, sup), breakpoints=(0.0,))


def variation_identity_check(
    P: LatticePolytope,
    w0: ToricWeight,
    w1: ToricWeight,
    mu: RadialMeasure,
    k: int,
    s_nodes: int = 16,
    eps: float = 1e-11,
) -> dict:
    """Compare ``h0(k w1) - h0(k w0)`` with ``k int_0^1 int (w1 - w0) Theta(mu, k w_s) dmu ds``
    where ``w_s = w0 + s (w1 - w0)``, using Gauss-Legendre nodes in ``s``."""
    S = lattice_points(P, k)
    lhs = section_h0_theta(S, mu, w1) - section_h0_theta(S, mu, w0)
    span = _gap_span(w0, w1)
    x, wts = gauss_nodes(s_nodes)
    s_vals = 0.5 * (x + 1.0)
    inner = []
    for s in s_vals:
        ws = Blend(w0, w1, float(s))
        g = gram_matrix(S, mu, ws)
        sup = _theta_sup_bound(g, 1.0) * span

        def f(u, ws=ws, g=g):
            u = np.atleast_1d(u)
            return (np.asarray(w1(u)) - np.asarray(w0(u))) * theta_distortion(S, mu, ws, u, 1.0, g)

        inner.append(_integrate_against(f, mu, eps, sup))
    rhs = k * 0.5 * math.fsum(np.asarray(inner) * wts)
    scale = max(abs(lhs), abs(rhs))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": 0.0 if scale == 0 else abs(lhs - rhs) / scale,
        "s_nodes": s_nodes,
    }


def _gap_span(w0: ToricWeight, w1: ToricWeight) -> float:
    """Bound for ``sup |w1 - w0|`` from sampled values and asymptotic gaps."""
    u = np.linspace(-60.0, 60.0, 4001)
    d = np.abs(np.asarray(w1(u)) - np.asarray(w0(u)))
    try:
        tails = [abs(x - y) for x, y in zip(w1.asymptotic_gaps(), w0.asymptotic_gaps())]
    except NotImplementedError:
        tails = []
    return float(max(d.max(), *tails, 1e-300))


# ---------------------------------------------------------------------------
# sup norms (n = 1)


@dataclass(frozen=True)
class SupNorm:
    value: float
    lower: float
    upper: float
    cells: int


def _sup_ingredients(w: ToricWeight):
    """Asymptotic tail gaps and a curvature bound for the sup-norm search."""
    base = w
    shift = 0.0
    while isinstance(base, Shifted):
        shift += base.shift
        base = base.base
    if not isinstance(base, (Canonical, MonomialExp)):
        raise WeightNotSmooth("sup norms need a canonical or monomial-exponential weight")
    gl, gr = w.asymptotic_gaps()
    return gl, gr, w.curvature_bound(), base


def sup_norm(
    S: SectionSpace,
    w: ToricWeight,
    coeffs,
    rel_tol: float = 1e-7,
    box: float = 30.0,
    max_rounds: int = 80,
    max_cells: int = 2_000_000,
) -> SupNorm:
    """``sup_{u, theta} |sum_m a_m e^{m (u + i theta)}| e^{-k psi(u)}`` by branch and bound.

    Works with ``G = |Q|^2``, ``Q = sum a_m T_m(u) e^{i (m - m_0) theta}`` and
    ``T_m = e^{m u - k psi(u)}`` (the phase ``e^{i m_0 theta}`` does not change
    ``|Q|``). On a cell

        G <= G(c) + |G_u| h_u + |G_th| h_th + (K_uu h_u^2 + 2 K_ut h_u h_th + K_tt h_th^2) / 2

    where the ``K`` bound the second derivatives of ``G`` on the cell. They are
    built per monomial from ``T_m <= e^{m u - k Psi(u) - k g_inf}``, the range
    of ``psi'`` over the cell (``psi`` is convex) and ``psi'' <= 2 (psi' - a)(b - psi')``.
    Cells never straddle ``u = 0``, so the canonical kink is harmless, and
    the kink line itself is sampled. The theta bounds are taken about the
    dominant monomial of each cell. Outside ``|u| <= box`` only the vertex
    monomials survive; their limits enter the bracket.
    """
    if S.dim != 1:
        raise DimensionUnsupported("sup norms are implemented for n = 1")
    a_coef = np.asarray(coeffs, dtype=float).reshape(-1)
    if a_coef.shape != (S.n_k,):
        raise ValueError("need one coefficient per monomial")
    if not np.any(a_coef):
        return SupNorm(0.0, 0.0, 0.0, 0)
    gl, gr, _, base = _sup_ingredients(w)
    smooth = isinstance(base, MonomialExp)
    k = S.k
    active = a_coef != 0
    m = S.exponents[:, 0].astype(float)[active]
    coef = a_coef[active]
    absc = np.abs(coef)
    a, b = w.polytope.interval
    mt = m - 0.5 * (m.min() + m.max())
    g_inf = w.gap_lower_bound()

    def G_and_grad(u, th):
        psi = np.asarray(w(u), dtype=float).reshape(-1)
        dpsi = np.asarray(w.d1(u), dtype=float).reshape(-1)
        tm = coef[None, :] * np.exp(m[None, :] * u[:, None] - k * psi[:, None])
        ph = np.exp(1j * mt[None, :] * th[:, None])
        q = (tm * ph).sum(axis=1)
        qu = (tm * (m[None, :] - k * dpsi[:, None]) * ph).sum(axis=1)
        qt = (tm * 1j * mt[None, :] * ph).sum(axis=1)
        return np.abs(q) ** 2, 2.0 * np.real(np.conj(q) * qu), 2.0 * np.real(np.conj(q) * qt)

    def curvature(uc, hu):
        lo, hi = uc - hu, uc + hu
        inset = 1e-9 * hu
        s_lo = np.asarray(w.d1(lo + inset), dtype=float).reshape(-1)
        s_hi = np.asarray(w.d1(hi - inset), dtype=float).reshape(-1)
        psi_lin = lambda x: np.where(x < 0, a * x, b * x)  # noqa: E731
        ex = np.maximum(
            m[None, :] * lo[:, None] - k * psi_lin(lo)[:, None],
            m[None, :] * hi[:, None] - k * psi_lin(hi)[:, None],
        )
        T = absc[None, :] * np.exp(ex - k * g_inf)
        dm = np.maximum(np.abs(m[None, :] - k * s_lo[:, None]), np.abs(m[None, :] - k * s_hi[:, None]))
        if smooth:
            s_mid = np.clip(0.5 * (a + b), s_lo, s_hi)
            c2 = 2.0 * (s_mid - a) * (b - s_mid)
        else:
            c2 = np.zeros(len(uc))
        # |Q| does not depend on the phase e^{i m_0 theta}; centring on the
        # dominant monomial of the cell keeps the theta bounds small
        m0 = m[np.argmax(T, axis=1)]
        am = np.abs(m[None, :] - m0[:, None])
        Q0 = T.sum(axis=1)
        Qu = (T * dm).sum(axis=1)
        Qt = (T * am).sum(axis=1)
        Quu = (T * (dm**2 + k * c2[:, None])).sum(axis=1)
        Qtt = (T * am**2).sum(axis=1)
        Qut = (T * dm * am).sum(axis=1)
        return 2 * (Quu * Q0 + Qu**2), 2 * (Qut * Q0 + Qu * Qt), 2 * (Qtt * Q0 + Qt**2)

    # limits along u -> -inf / +inf (only vertex monomials survive)
    ia = int(np.argmin(m))
    ib = int(np.argmax(m))
    lim_l = (absc[ia] * math.exp(-k * gl)) ** 2 if m[ia] == k * a else 0.0
    lim_r = (absc[ib] * math.exp(-k * gr)) ** 2 if m[ib] == k * b else 0.0
    # tails |u| > box: vertex term plus decaying interior terms
    rest_l = float(np.sum(absc * np.where(m > k * a, np.exp(-(m - k * a) * box), 0.0)))
    rest_r = float(np.sum(absc * np.where(m < k * b, np.exp(-(k * b - m) * box), 0.0)))
    tail_up = max(
        (math.sqrt(lim_l) + math.exp(-k * g_inf) * rest_l) ** 2,
        (math.sqrt(lim_r) + math.exp(-k * g_inf) * rest_r) ** 2,
    )

    flat = bool(np.all(mt == 0))
    nu = 48
    nt = 1 if flat else 24
    ue = np.concatenate([np.linspace(-box, 0.0, nu + 1)[:-1], np.linspace(0.0, box, nu + 1)])
    uc0 = 0.5 * (ue[:-1] + ue[1:])
    hu0 = 0.5 * np.diff(ue)
    # real coefficients: G(u, -theta) = G(u, theta)
    te = np.linspace(0.0, np.pi, nt + 1)
    tc0 = 0.5 * (te[:-1] + te[1:])
    uc = np.repeat(uc0, nt)
    hu = np.repeat(hu0, nt)
    tc = np.tile(tc0, len(uc0))
    ht = np.full(len(uc), 0.5 * np.pi / nt)
    best = max(lim_l, lim_r)
    cells = 0
    for _ in range(max_rounds):
        if len(uc) == 0:
            upper = max(best, tail_up)
            if upper - best <= rel_tol * best:
                return SupNorm(math.sqrt(best), math.sqrt(best), math.sqrt(upper), cells)
            break
        G, gu, gt = G_and_grad(uc, tc)
        cells += len(uc)
        best = max(best, float(G.max()))
        edge = np.abs(np.abs(uc) - hu) <= 1e-12 * np.maximum(hu, 1.0)
        if np.any(edge):
            best = max(best, float(G_and_grad(np.zeros(int(edge.sum())), tc[edge])[0].max()))
        kuu, kut, ktt = curvature(uc, hu)
        up = G + np.abs(gu) * hu + np.abs(gt) * ht + 0.5 * (kuu * hu**2 + 2 * kut * hu * ht + ktt * ht**2)
        upper = max(float(up.max()), tail_up)
        if upper - best <= rel_tol * best:
            return SupNorm(math.sqrt(best), math.sqrt(best), math.sqrt(upper), cells)
        keep = up > best * (1.0 + 0.5 * rel_tol)
        uc, hu, tc, ht = uc[keep], hu[keep], tc[keep], ht[keep]
        if len(uc) * 4 > max_cells:
            break
        # split in u always, in theta only where theta matters at all
        hu2 = 0.5 * hu
        if flat:
            uc = np.concatenate([uc - hu2, uc + hu2])
            tc, ht, hu = np.tile(tc, 2), np.tile(ht, 2), np.tile(hu2, 2)
        else:
            ht2 = 0.5 * ht
            uc = np.concatenate([uc - hu2, uc - hu2, uc + hu2, uc + hu2])
            tc = np.concatenate([tc - ht2, tc + ht2, tc - ht2, tc + ht2])
            hu, ht = np.tile(hu2, 4), np.tile(ht2, 4)
    raise GridNotConverged(
        f"sup-norm bracket did not close (best {best:.6g}, tail {tail_up:.6g})"
    )


@dataclass(frozen=True)
class SupTheta:
    lower: float
    upper: float
    vectors: int
    refined: int

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)


def sup_h0_theta_smallk(
    S: SectionSpace,
    w: ToricWeight,
    mu: RadialMeasure,
    gram: GramData | None = None,
    eps: float = 1e-10,
    budget: int = 10**6,
    rel_tol: float = 1e-6,
) -> SupTheta:
    """Bracket ``h^0_theta`` of the section lattice under the sup norm.

    Since ``||v||_sup >= ||v||_{L^2(mu)}`` for a probability measure, the
    terms are dominated by ``exp(-pi v^T M v)``: vectors are enumerated in
    the L2 ellipsoid with a certified tail, the smallest terms are bounded
    by their L2 values, and the rest get a sup-norm bracket each.
    """
    if S.n_k > 5:
        raise DimensionUnsupported("sup-norm theta sums are limited to N_k <= 5")
    g = _gram(S, mu, w, gram)
    L = EuclideanLattice(g.matrix, diagonal_hint=False)
    r2 = _tail_radius_sq(L, 1.0, eps)
    vecs, q = enumerate_short_vectors(L, r2, budget)
    # one representative per pair +-v, zero excluded
    first = np.array([row[np.flatnonzero(row)[0]] if np.any(row) else 0 for row in vecs])
    sel = first > 0
    vecs, q = vecs[sel], q[sel]
    order = np.argsort(-q, kind="stable")  # smallest terms first
    vecs, q = vecs[order], q[order]
    l2_terms = np.exp(-np.pi * q)
    cum = np.cumsum(l2_terms)
    cheap = cum <= eps
    lower = 0.0
    upper = 2.0 * float(cum[cheap][-1]) if np.any(cheap) else 0.0
    refined = 0
    for v, t2 in zip(vecs[~cheap], l2_terms[~cheap]):
        # relative bracket on ||v||_sup^2; loose where the term is negligible
        res = sup_norm(S, w, v, rel_tol=rel_tol if t2 > 1e-6 else 100 * rel_tol)
        lower += 2.0 * math.exp(-np.pi * res.upper**2)
        upper += 2.0 * math.exp(-np.pi * res.lower**2)
        refined += 1
    return SupTheta(math.log1p(lower), math.log1p(upper + eps), int(2 * len(q) + 1), refined)


def bernstein_markov_constants(
    P: LatticePolytope,
    w: ToricWeight,
    mu: RadialMeasure,
    k_list: Sequence[int],
    epsilon: float = 0.1,
    u_grid=None,
) -> dict:
    """``B_k = sup_u rho_k(u)^{1/2}`` (the optimal ``||.||_sup <= B_k ||.||_{L2}``)
    and ``C = max(1, max_k B_k e^{-epsilon k})``."""
    grid = np.linspace(-30.0, 30.0, 6001) if u_grid is None else np.asarray(u_grid, dtype=float)
    grid = np.union1d(grid, [0.0])
    bk = []
    for k in k_list:
        S = lattice_points(P, int(k))
        g = gram_matrix(S, mu, w)
        r = rho(S, mu, w, grid, g)
        bk.append(math.sqrt(float(np.max(r))))
    C = max(1.0, max(b * math.exp(-epsilon * k) for b, k in zip(bk, k_list)))
    return {"k": [int(k) for k in k_list], "B_k": bk, "epsilon": epsilon, "C": C}


# ---------------------------------------------------------------------------
# weak convergence surrogate


def theta_measure_moments(
    S: SectionSpace,
    mu: RadialMeasure,
    w: ToricWeight,
    fs: Sequence[Callable],
    gram: GramData | None = None,
    eps: float = 1e-10,
) -> np.ndarray:
    """``int f Theta dmu / int Theta dmu`` for each test function ``f``."""
    g = _gram(S, mu, w, gram)
    sup = _theta_sup_bound(g, 1.0)

    def th(u):
        return theta_distortion(S, mu, w, np.atleast_1d(u), 1.0, g)

    total = _integrate_against(th, mu, eps, sup)
    out = []
    for f in fs:
        fsup = float(np.max(np.abs(f(np.linspace(-60, 60, 2001)))))
        out.append(_integrate_against(lambda u, f=f: f(u) * th(u), mu, eps, sup * fsup) / total)
    return np.array(out)
