"""Command-line front end: ``mdsspec {spectrum,empirical,reconstruct,accept}``.

Exit codes: 0 ok, 1 acceptance failure, 2 usage error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from math import cos, pi
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError, InsufficientDataError, NumericError, QuadratureOrderError
from .spaces import Projective, Sphere, Torus, format_space, grid_points, parse_space, sample_uniform

CACHE_ENV = "MDSSPEC_CACHE_DIR"

EXIT_OK, EXIT_ACCEPT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    space: str
    kmax: int = 40
    quad_order: int | None = None
    n: int | None = None
    seed: int | None = None
    fmt: str = "csv"
    output: str | None = None
    cache_dir: str | None = None

    def parsed_space(self):
        return parse_space(self.space)

    def check(self):
        self.parsed_space()
        if self.kmax < 2:
            raise UsageError("--kmax must be >= 2")


def _emit(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


# -- spectrum ----------------------------------------------------------------


def cache_key(space, kmax, quad_order, method):
    blob = json.dumps([format_space(space), int(kmax), quad_order, method, __version__])
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def cached_spectrum(space, kmax, quad_order=None, method="auto", cache_dir=None):
    """``build_spectrum`` through an on-disk JSON cache (JSON floats round-trip exactly)."""
    from .spectra import SpectrumTable, build_spectrum

    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return build_spectrum(space, kmax, quad_order, method)
    path = Path(cache_dir) / f"spectrum-{cache_key(space, kmax, quad_order, method)}.json"
    if path.exists():
        return SpectrumTable.from_json(path.read_text())
    table = build_spectrum(space, kmax, quad_order, method)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(table.to_json())
    tmp.replace(path)
    return table


def cmd_spectrum(args):
    cfg = RunConfig(args.space, args.kmax, args.quad_order, fmt=args.format, output=args.output, cache_dir=args.cache_dir)
    cfg.check()
    table = cached_spectrum(cfg.parsed_space(), cfg.kmax, cfg.quad_order, args.method, cfg.cache_dir)
    _emit(table.to_csv() if cfg.fmt == "csv" else table.to_json() + "\n", cfg.output)
    return EXIT_OK


# -- empirical ---------------------------------------------------------------


def _grid_side(space, n):
    dims = len(space.atoms())
    side = round(n ** (1.0 / dims))
    if side**dims != n:
        raise UsageError(f"--n {n} is not a perfect {dims}-th power for a grid on {format_space(space)}")
    return side


def cmd_empirical(args):
    from .empirical import empirical_spectrum, match_spectra, near_zero_fraction

    cfg = RunConfig(args.space, args.kmax, args.quad_order, args.n, args.seed, args.format, args.output, args.cache_dir)
    cfg.check()
    space = cfg.parsed_space()
    if cfg.n is None:
        raise UsageError("--n is required")
    if args.grid:
        if not all(isinstance(a, Torus) for a in space.atoms()):
            raise UsageError("--grid needs a torus or product of circles")
        sample = grid_points(space, _grid_side(space, cfg.n))
    else:
        if cfg.seed is None:
            raise UsageError("--seed is required for random sampling")
        sample = sample_uniform(space, cfg.n, cfg.seed)
    emp = empirical_spectrum(sample)
    table = cached_spectrum(space, cfg.kmax, cfg.quad_order, cache_dir=cfg.cache_dir)
    report = match_spectra(emp, table, min(args.top, cfg.n))
    report.meta.update(
        {
            "version": __version__,
            "space": format_space(space),
            "n_points": cfg.n,
            "seed": cfg.seed,
            "scheme": sample.scheme,
            "kmax": cfg.kmax,
            "quad_order": cfg.quad_order,
            "near_zero_fraction": near_zero_fraction(emp),
            "convergence_note": "O(1/N) eigenvalue convergence is an empirical heuristic, not a proven rate",
        }
    )
    if cfg.fmt == "json":
        _emit(report.to_json() + "\n", cfg.output)
    else:
        _emit(_report_csv(report), cfg.output)
    return EXIT_OK


def _report_csv(report):
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["factor_tag", "analytic_degree", "analytic_value", "multiplicity", "slot", "empirical_value", "rel_error"])
    for r in report.records:
        for slot, (v, e) in enumerate(zip(r.empirical_values, r.rel_errors)):
            w.writerow([r.factor, r.analytic_degree, format(r.analytic_value, ".17g"), r.multiplicity, slot,
                        format(v, ".17g"), format(e, ".17g")])
    return buf.getvalue()


# -- reconstruct -------------------------------------------------------------


def cmd_reconstruct(args):
    from .recon import divergence_probe, embedded_distance_partial_sums, reconstruction_from_cosines, snowflake_scan

    space = parse_space(args.space)
    if args.snowflake:
        atoms = space.atoms()
        if len(atoms) != 1 or not (isinstance(atoms[0], Torus) or atoms[0] == Sphere(1)):
            raise UsageError("--snowflake needs a single circle (S1 or T1)")
        kmax = args.kmax if args.kmax_given else 400
        length = atoms[0].lengths[0] if isinstance(atoms[0], Torus) else 2 * pi
        scan = snowflake_scan(args.resolution, kmax, length)
        _emit(_snowflake_out(scan, args.format), args.output)
        print(f"alpha = {scan.alpha:.4f} (beta = {scan.beta:.4f}), S/d = {scan.ratio_mean:.5f}", file=sys.stderr)
        return EXIT_OK
    if (args.pair_angle is None) == (args.cos is None):
        raise UsageError("give exactly one of --pair-angle or --cos (or --snowflake)")
    t = cos(args.pair_angle) if args.pair_angle is not None else args.cos
    cosines = [t] * len(space.atoms())
    odd_projective = isinstance(space, Projective) and space.n % 2 == 1 and space.n > 1
    mode = args.mode or ("embedded" if odd_projective else "all")
    if mode == "embedded":
        series = embedded_distance_partial_sums(space, cosines, args.kmax, args.quad_order)
    else:
        series = reconstruction_from_cosines(space, cosines, args.kmax, args.quad_order)
    if args.pair_angle is not None:
        series.meta["pair_angle"] = args.pair_angle
        if mode == "all":
            series.meta["d_squared"] = len(cosines) * args.pair_angle**2
    if odd_projective:
        cut = [10**e for e in range(2, 7) if 10**e <= args.kmax]
        if len(cut) >= 2:
            rep = divergence_probe(space.n, abs(t), cut)
            series.meta["divergence"] = {k: _plain(v) for k, v in rep._asdict().items()}
            print(f"growth law {rep.law} (increment exponent {rep.growth_exponent:.3f}), "
                  f"log coefficients {[round(float(c), 4) for c in rep.log_coefficients]}", file=sys.stderr)
    series.meta["version"] = __version__
    _emit(series.to_csv() if args.format == "csv" else series.to_json() + "\n", args.output)
    return EXIT_OK


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _snowflake_out(scan, fmt):
    if fmt == "json":
        return json.dumps({
            "version": __version__,
            "kmax": scan.kmax,
            "beta": scan.beta,
            "alpha": scan.alpha,
            "ratio_mean": scan.ratio_mean,
            "ratio_spread": scan.ratio_spread,
            "ratio_tolerance": scan.ratio_tolerance,
            "rows": [{"d": float(d), "S": float(s), "ratio": None if np.isnan(r) else float(r)}
                     for d, s, r in zip(scan.distances, scan.sums, scan.ratios)],
        }) + "\n"
    lines = ["d,S,ratio"]
    for d, s, r in zip(scan.distances, scan.sums, scan.ratios):
        lines.append(f"{d:.17g},{s:.17g},{'' if np.isnan(r) else format(r, '.17g')}")
    return "\n".join(lines) + "\n"


# -- accept ------------------------------------------------------------------


def cmd_accept(args):
    from .acceptance import CRITERIA, run_all

    only = [n for chunk in (args.only or []) for n in chunk.split(",") if n]
    unknown = [n for n in only if n not in CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria: {', '.join(unknown)}; choose from {', '.join(CRITERIA)}")
    results = run_all(only or None)
    for r in results:
        print(r.line(), file=sys.stderr)
    failed = [r.name for r in results if not r.passed]
    summary = {"version": __version__, "passed": not failed, "failed": failed, "criteria": [r.to_dict() for r in results]}
    _emit(json.dumps(summary, indent=1) + "\n", args.output)
    return EXIT_ACCEPT if failed else EXIT_OK


# -- parser ------------------------------------------------------------------


class _KmaxAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.kmax_given = True


def build_parser():
    p = argparse.ArgumentParser(prog="mdsspec", description="Spectra of the MDS operator on symmetric spaces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, kmax=40):
        sp.add_argument("--space", required=True, help='e.g. "RP2", "S2 x RP3 x T1", "T[6.28,3.14]"')
        sp.add_argument("--kmax", type=int, default=kmax, action=_KmaxAction)
        sp.add_argument("--quad-order", type=int, default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--output", "-o", default=None)
        sp.add_argument("--cache-dir", default=None, help=f"spectrum cache (default ${CACHE_ENV})")
        sp.set_defaults(kmax_given=False)

    sp = sub.add_parser("spectrum", help="analytic spectrum table")
    common(sp)
    sp.add_argument("--method", choices=("auto", "quadrature", "recurrence", "closed_form"), default="auto")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("empirical", help="finite-sample MDS spectrum matched against the analytic table")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--grid", action="store_true", help="equally spaced grid (circles and tori)")
    sp.add_argument("--top", type=int, default=10)
    sp.set_defaults(func=cmd_empirical)

    sp = sub.add_parser("reconstruct", help="pair series via the addition theorem")
    common(sp, kmax=200)
    sp.add_argument("--pair-angle", type=float, default=None, help="geodesic angle per factor")
    sp.add_argument("--cos", type=float, default=None, help="cosine argument per factor")
    sp.add_argument("--mode", choices=("all", "embedded"), default=None)
    sp.add_argument("--snowflake", action="store_true")
    sp.add_argument("--resolution", type=int, default=64)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("accept", help="run the acceptance suite")
    sp.add_argument("--only", action="append", help="criterion name(s), comma separated")
    sp.add_argument("--output", "-o", default=None, help="JSON summary path (default stdout)")
    sp.set_defaults(func=cmd_accept)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, DomainError, QuadratureOrderError, InsufficientDataError) as exc:
        print(f"mdsspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"mdsspec: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
