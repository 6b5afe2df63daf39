"""Command-line interface: ``critline <subcommand> ...``.

Exit codes: 0 success, 2 invalid form or flags, 3 numeric domain error,
4 I/O or cache problem.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from critline import counting, epstein, sweep
from critline.cache import cache_dir, cache_manage, values_for
from critline.eisenstein import LatticeId, eis, eis_picard_special_point, lattice_form
from critline.errors import CacheError, DomainError, FormError
from critline.forms import (
    INDEFINITE,
    POSITIVE_DEFINITE,
    HyperbolicPoint,
    difference_form,
    dual,
    parse_inline,
    parse_text,
)

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


# -- shared argument groups -----------------------------------------------------


def _add_io(p: argparse.ArgumentParser, formats=("plain", "json", "csv"), default="plain") -> None:
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--format", choices=formats, default=default)
    p.add_argument("--cache-dir", help="value-list cache (default $CRITLINE_CACHE_DIR)")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")


def _add_form(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--gram", help='inline Gram matrix, rows split by ";", entries by "," e.g. "2,1;1,1"')
    g.add_argument("--form-file", help="form text file: m, then m rows")


def _add_point(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lattice", choices=[x.value for x in LatticeId], default="modular")
    p.add_argument("--x1", "--x", type=float, default=0.0, dest="x1")
    p.add_argument("--x2", type=float, default=0.0)
    p.add_argument("--y", type=float, default=1.0)


def _form(args, definite: str = POSITIVE_DEFINITE):
    if getattr(args, "gram", None):
        return parse_inline(args.gram, definite)
    if getattr(args, "form_file", None):
        try:
            text = Path(args.form_file).read_text()
        except OSError as exc:
            raise CacheError(f"cannot read {args.form_file}: {exc}") from exc
        return parse_text(text, definite)
    return None


def _point(args) -> tuple[LatticeId, HyperbolicPoint]:
    lat = LatticeId(args.lattice)
    if lat is LatticeId.MODULAR:
        if args.x2:
            raise FormError("--x2 is only meaningful for --lattice picard")
        return lat, HyperbolicPoint.h2(args.x1, args.y)
    return lat, HyperbolicPoint.h3(args.x1, args.x2, args.y)


def _threads(args) -> int:
    n = args.threads
    if n < 0:
        raise FormError("--threads must be >= 0")
    return n or (os.cpu_count() or 1)


def _cache(args):
    if args.cache_dir or os.environ.get("CRITLINE_CACHE_DIR"):
        return cache_dir(args.cache_dir)
    return None


def _complex_out(args, value: complex, **meta) -> str:
    if args.format == "json":
        return json.dumps({"re": value.real, "im": value.imag, **meta}, sort_keys=True)
    if args.format == "csv":
        return f"re,im\n{fmt(value.real)},{fmt(value.imag)}"
    return f"{fmt(value.real)} {fmt(value.imag)}"


# -- subcommands ----------------------------------------------------------------


def cmd_eval_epstein(args) -> str:
    Q = _form(args)
    s = complex(args.sigma, args.t)
    method = epstein.route(Q, s) if args.method == "auto" else args.method
    kw = {}
    if method == "direct" and args.eps is not None:
        kw["eps"] = args.eps
    cdir = _cache(args)
    if method == "afe" and cdir is not None:
        kw["values"] = values_for(cdir, Q, epstein.afe_length(Q, s.imag))
        kw["dual_values"] = values_for(cdir, dual(Q), epstein.afe_dual_cutoff(Q, s.imag))
    value = epstein.evaluate(Q, s, method, **kw)
    return _complex_out(args, value, method=method, sigma=args.sigma, t=args.t)


def cmd_eval_eisenstein(args) -> str:
    lat, z = _point(args)
    if args.closed_form:
        if lat is not LatticeId.PICARD or (z.x1, z.x2, z.y) != (0.0, 0.0, 1.0) or args.sigma != 1:
            raise FormError("--closed-form is the Picard series at z = j on Re s = 1")
        return _complex_out(args, eis_picard_special_point(args.t), method="closed-form", t=args.t)
    s = complex(args.sigma, args.t)
    Q = lattice_form(lat, z)
    method = epstein.route(Q, s) if args.method == "auto" else args.method
    kw = {}
    cdir = _cache(args)
    if method == "afe" and cdir is not None:
        kw["values"] = values_for(cdir, Q, epstein.afe_length(Q, s.imag))
        kw["dual_values"] = values_for(cdir, dual(Q), epstein.afe_dual_cutoff(Q, s.imag))
    value = eis(lat, s, z, method, **kw)
    return _complex_out(args, value, lattice=lat.value, method=method, sigma=args.sigma, t=args.t)


def cmd_values(args) -> str:
    Q = _form(args)
    if args.X is None and args.T is None:
        raise FormError("give --X or --T")
    X = args.X if args.X is not None else epstein.afe_length(Q, args.T)
    report = cache_manage(cache_dir(args.cache_dir), Q, X)
    if args.format == "json":
        return json.dumps(report, sort_keys=True)
    return f"{report['status']}: {report['entries']} values up to {fmt(report['X'])} " \
           f"({report['dual_entries']} dual values up to {fmt(report['dual_X'])})"


def _count_form(args):
    if args.difference:
        return difference_form(_form(args))
    return _form(args, INDEFINITE)


def _reports_out(args, reports) -> str:
    if args.no_timing:
        reports = [dataclasses.replace(r, seconds=0.0) for r in reports]
    if args.format == "csv":
        return counting.reports_to_csv(reports).rstrip("\n")
    if args.format == "json":
        return "\n".join(json.dumps(r.row()) for r in reports)
    return "\n".join(" ".join(str(r.row()[c]) if isinstance(r.row()[c], int) else fmt(r.row()[c])
                              for c in counting.CSV_COLUMNS) for r in reports)


def cmd_count(args) -> str:
    Q = _count_form(args)
    q = counting.CountQuery(Q, args.A, args.B, not args.no_origin)
    return _reports_out(args, [counting.count(q, threads=_threads(args), region=args.region)])


def cmd_dyadic_table(args) -> str:
    Q = _count_form(args)
    reports = counting.dyadic_table(Q, args.A, args.B, threads=_threads(args), region=args.region,
                                    include_origin=not args.no_origin)
    return _reports_out(args, reports)


def _ms_reports(args) -> list:
    Q = _form(args, POSITIVE_DEFINITE) if (args.gram or args.form_file) else None
    T_list = args.T
    threads = _threads(args)
    cdir = _cache(args)
    if Q is not None:
        v, dv = sweep.epstein_values(Q, 2 * max(T_list), cdir)
        return [sweep.mean_square_epstein(Q, T, args.step, v, dv, threads) for T in T_list]
    lat, z = _point(args)
    if args.grid:
        pts = sweep.fundamental_grid(args.grid, args.grid)
        return [sweep.sup_over_grid(lat, pts, T, args.step, threads, cdir) for T in T_list]
    if lat is not LatticeId.MODULAR:
        raise DomainError("critical-line mean squares exist for --lattice modular only")
    v, dv = sweep.eisenstein_values(z, max(T_list) + args.step, cdir)
    return sweep.eisenstein_ladder(z, T_list, args.step, v, dv, threads)


def cmd_meansquare(args) -> str:
    reports = _ms_reports(args)
    if args.format == "csv":
        return "T,integral\n" + "\n".join(f"{fmt(r.T)},{fmt(r.integral)}" for r in reports)
    if args.format == "json":
        return "\n".join(r.to_json() for r in reports)
    return "\n".join(f"{fmt(r.T)} {fmt(r.integral)} samples={r.samples} shifted={r.shifted_samples}"
                     for r in reports)


def cmd_sweep(args) -> str:
    if args.t1 <= args.t0:
        raise FormError("--t1 must exceed --t0")
    ts = sweep.grid(args.t0, args.t1 - args.t0, args.step)
    Q = _form(args, POSITIVE_DEFINITE) if (args.gram or args.form_file) else None
    threads = _threads(args)
    cdir = _cache(args)
    if Q is not None:
        if np.min(np.abs(ts)) < 1:
            raise DomainError("the Epstein sweep uses the AFE, which needs |t| >= 1")
        v, dv = sweep.epstein_values(Q, float(np.max(np.abs(ts))), cdir)
        vals = sweep.epstein_samples(Q, ts, v, dv, threads)
        eff, shifted = ts, 0
    else:
        lat, z = _point(args)
        if lat is not LatticeId.MODULAR:
            raise DomainError("critical-line sweeps exist for --lattice modular only")
        v, dv = sweep.eisenstein_values(z, float(np.max(np.abs(ts))) + args.step, cdir)
        vals, eff, mask = sweep.eisenstein_samples(z, ts, args.step, v, dv, threads)
        shifted = int(mask.sum())
    text = sweep.samples_to_csv(eff, vals).rstrip("\n")
    if shifted:
        print(f"note: {shifted} samples moved by step/7 off a zeta zero or pole", file=sys.stderr)
    return text


def cmd_growth(args) -> str:
    fit = sweep.pointwise_picard_growth(args.T, args.width, args.samples)
    return _fit_out(args, fit)


def _fit_out(args, fit) -> str:
    if args.format == "json":
        return json.dumps({"slope": fit.slope, "intercept": fit.intercept,
                           "max_abs_residual": fit.max_abs_residual,
                           "points": [list(p) for p in fit.points],
                           "label": "empirical exponent"}, sort_keys=True)
    return f"{fmt(fit.slope)} {fmt(fit.intercept)} {fmt(fit.max_abs_residual)}"


def cmd_fit(args) -> str:
    try:
        text = Path(args.infile).read_text() if args.infile != "-" else sys.stdin.read()
    except OSError as exc:
        raise CacheError(f"cannot read {args.infile}: {exc}") from exc
    return _fit_out(args, sweep.fit_exponent(sweep.read_points(text)))


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critline",
        description="Epstein zeta functions, Eisenstein series and lattice counts.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("eval-epstein", help="Z_Q(sigma + it)", description=(
        "Evaluate Z_Q(s), s = sigma + it, for a positive-definite form. Domains: "
        "direct needs sigma >= m/2 + 1/4; theta needs |t| <= 30 and s != m/2; "
        "afe needs m = 2, sigma = 1/2, |t| >= 1 (error O(log t)); special functions cap |t| at 1e5. "
        "auto picks direct, then theta, then afe."))
    _add_form(p)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--method", choices=epstein.METHODS, default="auto")
    p.add_argument("--eps", type=float, help="target accuracy of the direct method")
    _add_io(p)
    p.set_defaults(func=cmd_eval_epstein)

    p = sub.add_parser("eval-eisenstein", help="E(sigma + it, z)", description=(
        "Evaluate the Eisenstein series of SL2(Z) (--lattice modular, point x + iy) or SL2(Z[i]) "
        "(--lattice picard, point x1 + i x2 + j y). Same domains as eval-epstein with m = 2 or 4: "
        "direct for sigma >= 1.25 (modular) / 2.25 (picard); theta for |t| <= 30; afe only for "
        "modular on sigma = 1/2. Points where zeta(2s) or zeta(s)L(s) is below 1e-8 are refused. "
        "--closed-form evaluates E(1 + it, j) on the Picard side for any |t| <= 1e5."))
    _add_point(p)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--method", choices=epstein.METHODS, default="auto")
    p.add_argument("--closed-form", action="store_true")
    _add_io(p)
    p.set_defaults(func=cmd_eval_eisenstein)

    p = sub.add_parser("values", help="build or extend the value-list cache", description=(
        "Bring the cached value lists of a positive-definite form and its dual up to --X "
        "(or to the AFE length X(T) = T sqrt(D)/pi for --T). Idempotent."))
    _add_form(p)
    p.add_argument("--X", type=float)
    p.add_argument("--T", type=float)
    _add_io(p, ("plain", "json"))
    p.set_defaults(func=cmd_values)

    for name, fn, desc in (
        ("count", cmd_count, "Count v with ||v|| <= A and |Q(v)| < B (strict)."),
        ("dyadic-table", cmd_dyadic_table, "Counts on a grid of A and B values, A outer."),
    ):
        p = sub.add_parser(name, help=desc, description=desc + (
            " The form must be indefinite with 3 to 6 variables (box scan, (2A+1)^n <= 2e9), or "
            "use --difference with a positive-definite form in 2 or 3 variables (fast path)."))
        _add_form(p)
        p.add_argument("--difference", action="store_true", help="count for Q(u) - Q(v)")
        p.add_argument("--region", choices=counting.REGIONS, default="joint",
                       help="for difference forms: joint ball ||(u,v)|| <= A or separate balls")
        p.add_argument("--no-origin", action="store_true")
        p.add_argument("--no-timing", action="store_true", help="write seconds as 0 (byte-stable output)")
        if name == "count":
            p.add_argument("--A", type=float, required=True)
            p.add_argument("--B", type=float, required=True)
        else:
            p.add_argument("--A", type=_floats, required=True, help='list, e.g. "20,40,80"')
            p.add_argument("--B", type=_floats, required=True)
        _add_io(p, default="csv" if name == "dyadic-table" else "plain")
        p.set_defaults(func=fn)

    p = sub.add_parser("meansquare", help="critical-line mean squares", description=(
        "With a form (--gram/--form-file, binary): integral of |Z_Q(1/2+it)|^2 over [T, 2T], T >= 64. "
        "Otherwise (--lattice modular and a point): 2 * integral_0^T |E(1/2+it, z)|^2. "
        "--grid N takes the sup over an N x N grid of {|x| <= 1/2, 1 <= y <= 2}. Step <= 1/8."))
    _add_form(p, required=False)
    _add_point(p)
    p.add_argument("--T", type=_floats, required=True, help='one or more heights, e.g. "128,256"')
    p.add_argument("--step", type=float, default=sweep.DEFAULT_STEP)
    p.add_argument("--grid", type=int, default=0)
    _add_io(p)
    p.set_defaults(func=cmd_meansquare)

    p = sub.add_parser("sweep", help="samples on the critical line as CSV t,re,im,abs2", description=(
        "Sample Z_Q(1/2+it) (form given, |t| >= 1, AFE) or E(1/2+it, z) (modular point) on "
        "t0, t0 + step, ..., t1. Samples on a zeta zero or pole move by step/7 (reported on stderr)."))
    _add_form(p, required=False)
    _add_point(p)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--step", type=float, default=sweep.DEFAULT_STEP)
    _add_io(p, ("csv",), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("growth", help="pointwise growth of E(1+iT, j) on the Picard side", description=(
        "Fit log W(T) against log T, W(T) = max of |E(1+it, j)| over [T, T + width] "
        "(closed form). At least 4 heights, all <= 1e4."))
    p.add_argument("--T", type=_floats, default=[100.0 * 2**k for k in range(7)])
    p.add_argument("--width", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=21)
    _add_io(p, ("plain", "json"))
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("fit", help="least-squares exponent of a two-column CSV", description=(
        "Fit log Y = slope log X + intercept to a CSV with columns X,Y (header optional). "
        "Needs >= 3 rows, X strictly ascending, all values positive."))
    p.add_argument("--in", dest="infile", required=True, help='CSV file, or "-" for stdin')
    _add_io(p, ("plain", "json"))
    p.set_defaults(func=cmd_fit)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.func(args)
        if args.out:
            try:
                Path(args.out).write_text(text + "\n")
            except OSError as exc:
                raise CacheError(f"cannot write {args.out}: {exc}") from exc
        else:
            print(text)
    except (FormError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (CacheError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
