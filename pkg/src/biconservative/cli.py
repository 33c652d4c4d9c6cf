"""Command line: ``analyze``, ``check``, ``fit``, ``list-surfaces``.

Exit codes: 0 success, 1 a check or verification failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .analysis import GridSpec, analyze, dumps, emit_field_csv, emit_report, report_json
from .checks import CHECKS, FAIL, junit_xml, run_suite
from .errors import ConvergenceError, GeometryError
from .fit import OBJECTIVES, FitProblem, fit
from .gallery import ALIASES, FAMILIES, make_surface, resolve_family, solve_family_constraint
from .geometry import ToleranceSet

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _key_values(items: list[str] | None, flag: str) -> dict[str, float]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValueError(f"{flag} expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError as exc:
            raise ValueError(f"{flag} {name}: {value!r} is not a number") from exc
    return out


def _field_targets(items: list[str] | None) -> list[tuple[str, str]]:
    out = []
    for item in items or []:
        name, sep, path = item.partition(":")
        if not sep or not name or not path:
            raise ValueError(f"--field-csv expects name:path, got {item!r}")
        out.append((name, path))
    return out


def cmd_analyze(args) -> int:
    surface = make_surface(args.surface, _key_values(args.param, "--param"))
    grid = GridSpec.parse(args.grid, args.margin)
    tol = ToleranceSet.profile(args.tol_profile or ("fd" if args.jets == "fd" else "strict"))
    fields = _field_targets(args.field_csv)
    report = analyze(surface, grid, tol, jets=args.jets, h=args.h)
    for name, _ in fields:
        report.column(name)
    if args.out:
        emit_report(report, "json", args.out)
    else:
        sys.stdout.write(report_json(report))
    if args.csv:
        emit_report(report, "csv", args.csv)
    for name, path in fields:
        emit_field_csv(report, name, path)
    print(f"{report.surface['family']}: flags = {{{', '.join(report.flags)}}}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    ids = None
    if args.only:
        ids = [s.strip() for s in args.only.split(",") if s.strip()]
        unknown = [i for i in ids if i not in CHECKS]
        if unknown:
            raise ValueError(f"unknown check ids {unknown}; known: {', '.join(CHECKS)}")
    results = run_suite(ids, ToleranceSet.profile(args.tol_profile))
    for r in results:
        print(r.summary())
        if args.verbose:
            for c in r.cases:
                print(f"    [{c.verdict}] {c.label}")
                for m in c.metrics:
                    print(f"        {'ok ' if m.ok else 'BAD'} {m.line()}")
    if args.junit:
        with open(args.junit, "w", encoding="utf-8") as fh:
            fh.write(junit_xml(results))
    return EXIT_FAIL if any(r.verdict == FAIL for r in results) else EXIT_OK


def cmd_fit(args) -> int:
    family = resolve_family(args.surface)
    free = [s.strip() for s in args.free.split(",") if s.strip()]
    fixed = _key_values(args.param, "--param")
    init = _key_values(args.init, "--init")
    problem = FitProblem(family, tuple(free), fixed, args.objective, GridSpec.parse(args.grid))
    payload = {
        "surface": family,
        "free": free,
        "fixed": fixed,
        "objective": args.objective,
        "init": init,
        "version": __version__,
    }
    code = EXIT_OK
    try:
        params, report = fit(problem, init)
        payload["fitted"] = params
        payload["report"] = report.to_dict()
    except ConvergenceError as exc:
        payload["error"] = str(exc)
        payload["report"] = exc.report.to_dict() if exc.report is not None else None
        code = EXIT_FAIL
    if code == EXIT_OK and len(free) == 1:
        try:
            closed = solve_family_constraint(family, fixed)
        except Exception:
            closed = None
        if closed is not None:
            target = closed[free[0]]
            err = abs(payload["fitted"][free[0]] - target)
            payload["constraint_check"] = {"closed_form": target, "abs_error": err, "tolerance": 1e-3, "agrees": err <= 1e-3}
            if err > 1e-3:
                code = EXIT_FAIL
    text = dumps(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def cmd_list(args) -> int:
    reverse = {}
    for alias, name in ALIASES.items():
        reverse.setdefault(name, []).append(alias)
    for name in sorted(FAMILIES):
        fam = FAMILIES[name]
        params = ", ".join(f"{k}={v:g}" for k, v in fam.defaults.items())
        alias = f" (alias: {', '.join(sorted(reverse[name]))})" if name in reverse else ""
        print(f"{name}{alias}\n    {fam.summary}\n    defaults: {params}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biconservative", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="residual fields and flags on a grid")
    a.add_argument("--surface", required=True)
    a.add_argument("--param", action="append", metavar="NAME=VALUE")
    a.add_argument("--grid", default="32x32", metavar="NUxNV")
    a.add_argument("--margin", type=float, default=0.02)
    a.add_argument("--jets", choices=("analytic", "fd", "auto"), default="analytic")
    a.add_argument("--h", type=float, default=1e-3, help="finite-difference step for --jets fd")
    a.add_argument("--tol-profile", choices=("strict", "fd"))
    a.add_argument("--out", help="JSON report path (stdout if omitted)")
    a.add_argument("--csv", help="per-point table path")
    a.add_argument("--field-csv", action="append", metavar="NAME:PATH")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("check", help="run the verification checks")
    c.add_argument("--only", metavar="ID[,ID]")
    c.add_argument("--junit", metavar="PATH")
    c.add_argument("--tol-profile", choices=("strict", "fd"), default="strict")
    c.add_argument("-v", "--verbose", action="store_true")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fit", help="least-squares fit of free family parameters")
    f.add_argument("--surface", required=True)
    f.add_argument("--free", required=True, metavar="NAME[,NAME]")
    f.add_argument("--param", action="append", metavar="NAME=VALUE", help="fixed parameters")
    f.add_argument("--init", action="append", required=True, metavar="NAME=VALUE")
    f.add_argument("--objective", choices=OBJECTIVES, default="W")
    f.add_argument("--grid", default="16x16")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    ls = sub.add_parser("list-surfaces", help="gallery families and default parameters")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, GeometryError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
