"""Command-line front end.

Subcommands ``verify``, ``energies``, ``perturb`` and ``quartic``.  Options may
come from a ``key = value`` file given with ``--config``; flags on the command
line win.  Output goes to ``--out``, else ``$DYSON_OUT``, else ``./dyson_out``.
Every run writes ``manifest.json`` with the resolved parameters.

Exit codes: 0 pass, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from .coefficient_functions import TimeGrid, from_name
from .errors import (ConditioningError, ConfigError, DegenerateConstantError, DomainError,
                     DysonError, IntegrationError, SingularConfigurationError)
from .exact_maps import DysonCase, ExactMap
from .observables import emit_figure_data, energy_expectation, FIG2_PANELS
from .operator_algebra import build_fock_rep_1mode, build_fock_rep_2mode
from .perturbation_engine import (MAX_ORDER, closed_form_match, collapses, hermitian_chain,
                                  integrate_chain, nonhermitian_chain)
from .quartic import SigmaClass, quartic_tdde_residual, recursion_constraints_check
from .verification import BlockEngine, tdqh_residual

log = logging.getLogger("dysonmaps")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_ERRORS = (ConfigError, DegenerateConstantError, DomainError, SingularConfigurationError)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _floats(text: str, count: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise ConfigError(f"{what}: {text!r} is not a list of numbers") from exc
    if len(vals) != count:
        raise ConfigError(f"{what}: expected {count} comma-separated numbers, got {text!r}")
    return vals


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get("DYSON_OUT") or "dyson_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, args, extra: dict) -> Path:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    data = {"tool": "dysonmaps", "version": _version(), "command": args.command,
            "parameters": params, **extra}
    path = out / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _write_table(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" for v in row])
    return path


def _check_tol(args) -> None:
    for name in ("tol", "fd_step"):
        if hasattr(args, name) and not getattr(args, name) > 0:
            raise ConfigError(f"{name} must be positive")


def _case(args, default_constraint: str = "c=0") -> DysonCase:
    constraint = args.constraint or ("lam=pmu" if args.case.startswith("eta7") else default_constraint)
    return DysonCase(args.case, constraint, args.p, args.k1, args.k2, args.branch)


def _exact_map(args, case: DysonCase) -> ExactMap:
    mu = from_name(args.mu) if args.mu else None
    return ExactMap(case, from_name(args.a), from_name(args.lam), mu=mu)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    _check_tol(args)
    case = _case(args)
    emap = _exact_map(args, case)
    out = _outdir(args)
    rep = build_fock_rep_2mode(args.n, args.margin)
    times = TimeGrid(args.t_start, args.t_end, args.steps).points
    rep_ = tdqh_residual(emap, rep, times, args.fd_step, engine=BlockEngine(rep))
    path = out / f"verify_{case.label}.csv"
    rep_.to_csv(path)
    ok = rep_.passed(args.tol)
    summary = {"case": case.label, "herm_max": rep_.max("herm"), "pred_max": rep_.max("pred"),
               "tdqh_max": rep_.max("tdqh"), "excluded_t": [float(v) for v in rep_.excluded],
               "fd_flag": rep_.fd_flagged(args.tol), "passed": ok, "files": [path.name]}
    _write_manifest(out, args, {"result": summary})
    print(f"{case.label}: herm={summary['herm_max']:.3e} pred={summary['pred_max']:.3e} "
          f"tdqh={summary['tdqh_max']:.3e} tol={args.tol:g} -> {'PASS' if ok else 'FAIL'}")
    if rep_.fd_flagged(args.tol):
        print("note: finite-difference error estimate exceeds 10*tol; residuals are FD-limited")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_energies(args) -> int:
    out = _outdir(args)
    files = []
    max_imag = 0.0
    if args.figure is not None:
        if args.figure not in (1, 2):
            raise ConfigError("figure must be 1 or 2")
        paths = emit_figure_data(args.figure, out, args.samples)
        if args.p is not None and args.figure == 2:
            keep = [k for k, v in FIG2_PANELS.items() if abs(v - args.p) < 1e-12]
            if not keep:
                raise ConfigError(f"p={args.p} is not a figure-2 panel value")
            for path in paths:
                if not path.name.startswith(f"fig2{keep[0]}_"):
                    path.unlink()
            paths = [p for p in paths if p.exists()]
        files = [p.name for p in paths]
    else:
        if not args.map:
            raise ConfigError("give --figure or --map")
        args.case = args.map
        args.p = 0.0 if args.p is None else args.p
        case = _case(args)
        emap = _exact_map(args, case)
        t = np.linspace(0.0, args.t_end, args.samples)
        curve = energy_expectation(emap, args.n_q, args.m_q, args.cplus, args.cminus, t)
        max_imag = curve.max_imag
        path = curve.to_csv(out / f"energy_{case.label}_n{args.n_q}_m{args.m_q}.csv")
        files = [path.name]
    _write_manifest(out, args, {"result": {"files": files, "max_imag": max_imag}})
    print(f"wrote {len(files)} file(s) to {out}")
    return EXIT_OK


def cmd_perturb(args) -> int:
    if args.order is None:
        args.order = 5 if args.case == "K4K3" else 3
    if not 1 <= args.order <= MAX_ORDER:
        raise ConfigError(f"order must be in 1..{MAX_ORDER}; the printed chain stops at {MAX_ORDER}")
    out = _outdir(args)
    lam = from_name(args.lam)
    c = from_name(args.c) if args.c else lam.scaled(args.p)
    grid = TimeGrid(args.t_start, args.t_end, args.steps)
    notes = []
    if args.case == "K4K3":
        series = integrate_chain(hermitian_chain(c, lam, args.order), grid)
    elif args.case == "K4K1":
        if args.order != 3:
            raise ConfigError("the K4K1 chain is printed to order 3 only")
        y0 = _floats(args.y0, 6, "y0")
        series = integrate_chain(nonhermitian_chain(c, lam, y0, variant=args.variant), grid)
    else:
        raise ConfigError(f"unknown chain {args.case!r}")
    if collapses(series):
        notes.append("chain collapses to the single equation for gamma2^(1) (c = 0)")
    names, table = series.columns()
    path = _write_table(out / f"perturb_{args.case}_order{args.order}.csv", names, table)
    result = {"files": [path.name], "notes": notes}
    ok = True
    if args.case == "K4K3":
        match = closed_form_match(series, args.epsilon, c, args.tol)
        ok = match.passed
        result.update({"match_max": match.weighted_max, "first_failing_order": match.first_failing_order})
        print(f"closed-form match: max={match.weighted_max:.3e} tol={args.tol:g} -> {'PASS' if ok else 'FAIL'}")
    for n in notes:
        print("note:", n)
    result["passed"] = ok
    _write_manifest(out, args, {"result": result})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_quartic(args) -> int:
    _check_tol(args)
    out = _outdir(args)
    if args.g:
        source = from_name(args.g)
    else:
        source = SigmaClass(*_floats(args.sigma, 3, "sigma"))
        if source.is_constant:
            raise ConfigError("constant sigma gives g' = 0")
    t0, t1 = _floats(args.window, 2, "window")
    times = np.linspace(t0, t1, args.samples)
    rec = recursion_constraints_check(source, times, args.rec_tol, args.c1const)
    rep = build_fock_rep_1mode(args.n, args.margin)
    res = quartic_tdde_residual(source, args.c1const, rep, times, args.fd_step, method=args.method)
    path = out / "quartic_residual.csv"
    res.to_csv(path)
    ok = rec.passed and res.passed(args.tol)
    result = {"relations": rec.residuals, "relation_worst_t": rec.worst_t,
              "relation_failures": rec.failures(), "herm_max": res.max("herm"),
              "passed": ok, "files": [path.name]}
    _write_manifest(out, args, {"result": result})
    for k, v in rec.residuals.items():
        print(f"{k:20s} {v:.3e} {'ok' if v < args.rec_tol else 'FAIL'}")
    print(f"hermiticity residual {res.max('herm'):.3e} tol={args.tol:g}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _map_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--constraint", choices=["c=0", "c=plam", "c=lam", "lam=pmu"])
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--k1", type=float, default=2.0)
    p.add_argument("--k2", type=float, default=0.0)
    p.add_argument("--branch", type=int, default=1, choices=[1, -1])
    p.add_argument("--a", default="cost", help="catalogue name of a(t)")
    p.add_argument("--lambda", dest="lam", default="sin2t", help="catalogue name of lambda(t)")
    p.add_argument("--mu", default=None, help="catalogue name of mu(t) (three-slot maps)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dysonmaps", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="key = value file; flags override it")
    parser.add_argument("--out", help="output directory (default $DYSON_OUT or ./dyson_out)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="matrix-level TDDE/TDQH check of an exact map")
    v.add_argument("--case", required=True)
    _map_options(v)
    v.add_argument("--n", type=int, default=16)
    v.add_argument("--margin", type=int, default=4)
    v.add_argument("--fd-step", type=float, default=1e-4)
    v.add_argument("--tol", type=float, default=1e-5)
    v.add_argument("--t-start", type=float, default=0.2)
    v.add_argument("--t-end", type=float, default=3.0)
    v.add_argument("--steps", type=int, default=56)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("energies", help="instantaneous energy curves")
    e.add_argument("--figure", type=int)
    e.add_argument("--map")
    _map_options(e)
    e.add_argument("--n", dest="n_q", type=int, default=0)
    e.add_argument("--m", dest="m_q", type=int, default=0)
    e.add_argument("--cplus", type=float, default=1.0)
    e.add_argument("--cminus", type=float, default=1.0)
    e.add_argument("--samples", type=int, default=600)
    e.add_argument("--t-end", type=float, default=3 * np.pi)
    e.set_defaults(func=cmd_energies, p=None)

    q = sub.add_parser("perturb", help="integrate a perturbative chain")
    q.add_argument("--case", default="K4K3", choices=["K4K3", "K4K1"])
    q.add_argument("--epsilon", type=float, default=0.1)
    q.add_argument("--order", type=int, default=None, help="default 5 (K4K3) or 3 (K4K1)")
    q.add_argument("--c", default=None, help="catalogue name of c(t); default p*lambda")
    q.add_argument("--p", type=float, default=0.3)
    q.add_argument("--lambda", dest="lam", default="sin2t")
    q.add_argument("--y0", default="1,0,0,0,0,0", help="K4K1 initial state")
    q.add_argument("--variant", default="corrected", choices=["corrected", "printed"])
    q.add_argument("--tol", type=float, default=1e-7)
    q.add_argument("--t-start", type=float, default=0.0)
    q.add_argument("--t-end", type=float, default=3.0)
    q.add_argument("--steps", type=int, default=3000)
    q.set_defaults(func=cmd_perturb)

    k = sub.add_parser("quartic", help="quartic-oscillator pipeline")
    k.add_argument("--sigma", default="1,0.2,0.1")
    k.add_argument("--g", default=None, help="catalogue name of g(t) instead of sigma")
    k.add_argument("--c1const", type=float, default=0.0)
    k.add_argument("--window", default="0.5,1.5")
    k.add_argument("--samples", type=int, default=11)
    k.add_argument("--n", type=int, default=48)
    k.add_argument("--margin", type=int, default=10)
    k.add_argument("--fd-step", type=float, default=1e-4)
    k.add_argument("--tol", type=float, default=1e-4)
    k.add_argument("--rec-tol", type=float, default=1e-8)
    k.add_argument("--method", default="weyl", choices=["weyl", "direct"])
    k.set_defaults(func=cmd_quartic)
    return parser


def _explicit_dests(argv: list[str], command: str) -> set[str]:
    """Destinations given on the command line (defaults suppressed)."""
    probe = build_parser()
    sub = probe._subparsers._group_actions[0].choices[command]
    for act in sub._actions:
        act.default = argparse.SUPPRESS
        act.required = False
    sub.set_defaults(**{k: argparse.SUPPRESS for k in sub._defaults})
    return set(vars(probe.parse_args(argv)))


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` fill options not given as flags."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    conf = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    given = _explicit_dests(argv, args.command)
    for key, raw in conf.items():
        if key not in actions or key == "help":
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        if key in given:
            continue
        act = actions[key]
        try:
            val = act.type(raw) if act.type else raw
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: bad value {raw!r}") from exc
        if act.choices is not None and val not in act.choices:
            raise ConfigError(f"config key {key!r}: {val!r} not in {list(act.choices)}")
        setattr(args, key, val)
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConditioningError, IntegrationError, DysonError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
