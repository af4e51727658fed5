"""Command-line driver: ``torictheta <subcommand> [--config PATH] [--out DIR] ...``.

Tables go to CSV and reports to JSON under ``--out`` (or the config's output
directory); without either they are printed to stdout.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _io
from .bergman import (
    CSV_HEADER,
    gram_matrix,
    rho,
    theta_distortion,
    volume_scan,
)
from .config import ExperimentConfig, apply_shift, load_config
from .equilibrium import (
    arithmetic_degree,
    degree_of_equilibrium,
    equilibrium_measure,
    equilibrium_weight,
    hodge_gap,
    small_sections_shift,
)
from .errors import ConfigInvalid, DimensionUnsupported, ToricThetaError, VerifyFailed
from .lattice import (
    theta_count_sandwich,
    degree,
    h0_theta,
    h1_theta,
    random_lattice,
    u_function,
)
from .polytope import count_points, ehrhart_polynomial, geometric_volume, lattice_points
from .verify import SUITES, format_report, run_suite
from .weights import Canonical, MonomialExp, Shifted

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


class Output:
    def __init__(self, out_dir: str | None):
        self.dir = Path(out_dir) if out_dir else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header, rows) -> None:
        if self.dir is None:
            buf = io.StringIO()
            buf.write(",".join(header) + "\n")
            for row in rows:
                buf.write(",".join(_io.fmt_real(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
                buf.write("\n")
            sys.stdout.write(buf.getvalue())
        else:
            _io.write_csv(self.dir / name, header, rows)

    def json(self, name: str, obj) -> None:
        text = _io.dumps(obj) + "\n"
        if self.dir is None:
            sys.stdout.write(text)
        else:
            (self.dir / name).write_text(text, encoding="utf-8")

    def text(self, name: str, text: str) -> None:
        sys.stdout.write(text)
        if self.dir is not None:
            (self.dir / name).write_text(text, encoding="utf-8")


def _points(cfg: ExperimentConfig) -> np.ndarray:
    """Evaluation points: the u-grid for curves, its square for surfaces."""
    u = cfg.u_grid
    if cfg.model.polytope.dim == 1:
        return u[:, None]
    return np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)


# ---------------------------------------------------------------------------
# subcommands


def cmd_lattice(cfg, args, out):
    lats = list(cfg.lattices)
    if not lats:
        rng = np.random.default_rng(cfg.seed)
        count = int(cfg.random_lattices["count"])
        max_rank = int(cfg.random_lattices["max_rank"])
        lats = [random_lattice(1 + i % max_rank, rng) for i in range(count)]
    header = ("index", "rank", "h0_theta", "h1_theta", "degree", "poisson_residual", "h0_ar", "sandwich_lower", "sandwich_upper")
    header += tuple(f"U_t{t:g}" for t in cfg.t_list)
    rows = []
    for i, L in enumerate(lats):
        h0, h1, d = h0_theta(L), h1_theta(L), degree(L)
        lo, har, hi = theta_count_sandwich(L)
        us = [u_function(L, t) for t in cfg.t_list]
        rows.append((i, L.rank, h0, h1, d, h0 - h1 - d, har, lo, hi, *us))
    out.csv("lattice.csv", header, rows)


def cmd_count(cfg, args, out):
    P = cfg.model.polytope
    n = P.dim
    vol = geometric_volume(P)
    coeffs = ehrhart_polynomial(P)
    rows = []
    for k in cfg.k_list:
        nk = count_points(P, k)
        ehr = sum(c * k**j for j, c in enumerate(coeffs))
        rows.append((k, nk, int(ehr), nk * math.factorial(n) / k**n))
    out.csv("count.csv", ("k", "N_k", "ehrhart", "normalized"), rows)
    out.json("ehrhart.json", {"polytope": P.to_json(), "volume": vol, "coefficients": [str(c) for c in coeffs]})


def cmd_gram(cfg, args, out):
    m = apply_shift(cfg)
    rows = []
    for k in cfg.k_list:
        S = lattice_points(m.polytope, k)
        g = gram_matrix(S, m.measure, m.weight, eps=cfg.tolerances["quadrature"])
        for e, ld, re in zip(S.exponents, g.log_diag, g.rel_err):
            rows.append((k, " ".join(str(int(x)) for x in np.atleast_1d(e)), float(ld), float(re)))
    out.csv("gram.csv", ("k", "m", "log_M_mm", "rel_err"), rows)


def _u_cols(dim: int):
    return ("u",) if dim == 1 else ("u1", "u2")


def cmd_rho(cfg, args, out):
    m = apply_shift(cfg)
    pts = _points(cfg)
    rows = []
    for k in cfg.k_list:
        S = lattice_points(m.polytope, k)
        r = rho(S, m.measure, m.weight, pts)
        rows += [(k, *map(float, p), float(v)) for p, v in zip(pts, np.atleast_1d(r))]
    out.csv("rho.csv", ("k", *_u_cols(m.polytope.dim), "rho"), rows)


def cmd_theta_distortion(cfg, args, out):
    m = apply_shift(cfg)
    pts = _points(cfg)
    rows = []
    for k in cfg.k_list:
        S = lattice_points(m.polytope, k)
        g = gram_matrix(S, m.measure, m.weight)
        r = np.atleast_1d(rho(S, m.measure, m.weight, pts, g))
        for t in cfg.t_list:
            th = np.atleast_1d(theta_distortion(S, m.measure, m.weight, pts, t, g))
            rows += [(k, t, *map(float, p), float(a), float(b), float(a / b)) for p, a, b in zip(pts, th, r)]
    out.csv("theta_distortion.csv", ("k", "t", *_u_cols(m.polytope.dim), "theta", "rho", "ratio"), rows)


def _scan(cfg, args):
    m = apply_shift(cfg)
    grid = cfg.u_grid if m.polytope.dim == 1 else None
    return volume_scan(m.polytope, m.weight, m.measure, cfg.k_list, jobs=args.jobs, u_grid=grid)


def cmd_volume_scan(cfg, args, out):
    scan = _scan(cfg, args)
    out.csv("volume_scan.csv", CSV_HEADER, scan.csv_rows())
    out.json("volume_fit.json", scan.volume_fit.to_json())


def cmd_chi_scan(cfg, args, out):
    scan = _scan(cfg, args)
    rows = [(r.k, r.n_k, r.chi_hat, r.chi_k) for r in scan.rows]
    out.csv("chi_scan.csv", ("k", "N_k", "chi_hat", "chi_k"), rows)
    out.json("chi_fit.json", scan.chi_fit.to_json())


def _require_curve(cfg):
    if cfg.model.polytope.dim != 1:
        raise DimensionUnsupported("this subcommand is implemented for n = 1")


def cmd_equilibrium(cfg, args, out):
    _require_curve(cfg)
    w = apply_shift(cfg).weight
    env = equilibrium_weight(w)
    u = cfg.u_grid
    psi = np.asarray(w(u), dtype=float)
    pe = env(u)
    out.csv("equilibrium.csv", ("u", "psi", "envelope", "gap"), list(zip(u, psi, pe, psi - pe)))
    mu = equilibrium_measure(w)
    loc = mu.atom_locations[:, 0]
    mean = float(np.dot(mu.atom_weights, loc))
    out.json(
        "equilibrium.json",
        {
            "small_sections_shift": small_sections_shift(w),
            "max_gap_on_grid": float(np.max(psi - pe)),
            "measure_atoms": int(len(loc)),
            "measure_mean_u": mean,
            "degree_of_envelope": degree_of_equilibrium(w),
        },
    )


def _p_route_ok(w) -> bool:
    while isinstance(w, Shifted):
        w = w.base
    return isinstance(w, (Canonical, MonomialExp))


def cmd_degree(cfg, args, out):
    _require_curve(cfg)
    w = apply_shift(cfg).weight
    deg = arithmetic_degree(w, "u")
    rep = {"weight": w.to_json(), "degree": deg, "energy": 0.5 * deg}
    if _p_route_ok(w):
        rep["degree_p_route"] = arithmetic_degree(w, "p")
    rep["degree_of_envelope"] = degree_of_equilibrium(w)
    out.json("degree.json", rep)


def cmd_hodge(cfg, args, out):
    _require_curve(cfg)
    m = apply_shift(cfg)
    rep = hodge_gap(m.polytope, m.weight, m.measure, cfg.k_list, jobs=args.jobs)
    out.json("hodge.json", rep.to_json())


def cmd_verify(cfg, args, out):
    seed = cfg.seed
    results = run_suite(args.suite, seed=seed, jobs=args.jobs)
    out.text("verify_report.txt", format_report(results, args.suite, seed))
    if not all(r.passed for r in results):
        raise VerifyFailed(f"{sum(not r.passed for r in results)} check(s) failed")


COMMANDS = {
    "lattice": (cmd_lattice, "theta invariants of given or seeded random lattices"),
    "count": (cmd_count, "lattice-point counts and the Ehrhart polynomial"),
    "gram": (cmd_gram, "log Gram entries of the monomial bases"),
    "rho": (cmd_rho, "Bergman distortion on the u-grid"),
    "theta-distortion": (cmd_theta_distortion, "theta distortion and its ratio to rho"),
    "volume-scan": (cmd_volume_scan, "normalized h0_theta over k with extrapolation"),
    "chi-scan": (cmd_chi_scan, "normalized Arakelov degrees over k with extrapolation"),
    "equilibrium": (cmd_equilibrium, "equilibrium envelope and measure"),
    "degree": (cmd_degree, "arithmetic degree of the weight"),
    "hodge": (cmd_hodge, "volume estimate against degrees of the weight and its envelope"),
    "verify": (cmd_verify, "run an acceptance suite and print PASS/FAIL lines"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment configuration (JSON)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for scans")
    common.add_argument("--out", metavar="DIR", help="directory for CSV/JSON outputs")
    common.add_argument("--seed", type=int, default=None, metavar="S", help="seed for random lattices")
    common.add_argument("--suite", default="all", choices=sorted(SUITES), help="verification suite")
    parser = argparse.ArgumentParser(prog="torictheta", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigInvalid("--jobs must be at least 1")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        out = Output(args.out or cfg.out_dir)
        COMMANDS[args.command][0](cfg, args, out)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerifyFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ToricThetaError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"compute error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
