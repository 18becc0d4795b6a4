r"""Command line front end.

Subcommands:

    run     one simulation; writes ledger.csv and nodal snapshots
    sweep   the (alpha, beta, h) stability study; writes the table
    verify  built-in invariant and oracle checks
    oracle  print characteristics / shock reference values

Exit codes: 0 success, 1 usage error, 2 verification failure,
3 dt underflow during `run`.  Messages go to stderr; simulation data
goes only to files (the `oracle` subcommand prints its requested values
to stdout, which are its data).

Options may also come from a flat key=value config file via --config;
explicit flags win over file entries.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import selftest
from .diagnostics import (
    characteristics_solution,
    rankine_hugoniot_speed,
    shock_dissipation,
    shock_formation_time,
)
from .integrator import RunConfig, run_simulation
from .sweep import SweepGrid, atomic_write_text, emit_table, run_sweep, write_run_outputs


class UsageError(Exception):
    """Bad flags, bad config file, or inconsistent option values."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage errors to 1
        raise UsageError(message)


def _float_list(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


# keys a config file may set, with their conversions
_CONFIG_TYPES = {
    "h": float,
    "n_elems": int,
    "alpha": float,
    "beta": float,
    "t_final": float,
    "newton_tol": float,
    "dt_min_factor": float,
    "snapshots": int,
    "out_dir": str,
    "workers": int,
    "format": str,
    "alphas": _float_list,
    "betas": _float_list,
    "hs": _float_list,
}


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_TYPES[key](text)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _merge_config(args: argparse.Namespace) -> None:
    """Fill flag values that were not given from the config file, if any."""
    if not getattr(args, "config", None):
        return
    for key, value in _parse_config_file(args.config).items():
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, value)


def _build_parser() -> _Parser:
    parser = _Parser(prog="phburgers", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")

    p_run = sub.add_parser("run", help="run one simulation")
    add_common(p_run)
    p_run.add_argument("--h", type=float, help="element width (1/h integral)")
    p_run.add_argument("--n-elems", dest="n_elems", type=int, help="number of elements")
    p_run.add_argument("--alpha", type=float, help="dt0 = alpha * h (default 1)")
    p_run.add_argument("--beta", type=float, help="nu = beta * h / alpha (0 = inviscid)")
    p_run.add_argument("--t-final", dest="t_final", type=float, help="end time (default 0.4)")
    p_run.add_argument("--newton-tol", dest="newton_tol", type=float)
    p_run.add_argument("--dt-min-factor", dest="dt_min_factor", type=float)
    p_run.add_argument("--snapshots", type=int, help="snapshot count (default 50)")

    p_sweep = sub.add_parser("sweep", help="run the (alpha, beta, h) study")
    add_common(p_sweep)
    p_sweep.add_argument("--alphas", type=_float_list, help="comma list (default 0.5,1,2)")
    p_sweep.add_argument("--betas", type=_float_list, help="comma list (default 0,1,2,5)")
    p_sweep.add_argument("--hs", type=_float_list,
                         help="comma list (default 5e-4,1e-3,2.5e-3,5e-3,1e-2)")
    p_sweep.add_argument("--t-final", dest="t_final", type=float)
    p_sweep.add_argument("--newton-tol", dest="newton_tol", type=float)
    p_sweep.add_argument("--dt-min-factor", dest="dt_min_factor", type=float)
    p_sweep.add_argument("--workers", type=int, help="worker processes (default: cores)")
    p_sweep.add_argument("--format", choices=("csv", "text"), help="table format")

    p_verify = sub.add_parser("verify", help="run the built-in check battery")
    p_verify.add_argument("--config", help=argparse.SUPPRESS)

    p_oracle = sub.add_parser("oracle", help="print reference values")
    group = p_oracle.add_mutually_exclusive_group(required=True)
    group.add_argument("--shock-speed", nargs=2, type=float, metavar=("VL", "VR"),
                       help="Rankine-Hugoniot speed of the (VL, VR) jump")
    group.add_argument("--shock-dissipation", nargs=2, type=float, metavar=("VL", "VR"),
                       help="jump contributions (dE, dH)")
    group.add_argument("--shock-time", action="store_true",
                       help="shock formation time of the pulse data")
    group.add_argument("--solution", nargs=2, type=float, metavar=("T", "X"),
                       help="pre-shock characteristics solution v(T, X)")
    return parser


def _cmd_run(args) -> int:
    kwargs = {}
    for key in ("h", "n_elems", "alpha", "beta", "t_final",
                "newton_tol", "dt_min_factor"):
        if getattr(args, key) is not None:
            kwargs[key] = getattr(args, key)
    if args.snapshots is not None:
        kwargs["n_snapshots"] = args.snapshots
    try:
        config = RunConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_simulation(config)
    out_dir = args.out_dir or "phburgers_out"
    paths = write_run_outputs(result, out_dir)
    print(f"run: t reached {result.t_reached:.6g} of {config.t_final:g}, "
          f"{result.n_steps} steps, Var {result.var:.3e}, "
          f"termination {result.termination_reason}; "
          f"{len(paths)} files in {out_dir}", file=sys.stderr)
    for flag in result.flags:
        print(f"run: flagged {flag}", file=sys.stderr)
    return 3 if result.termination_reason == "dt_underflow" else 0


def _cmd_sweep(args) -> int:
    overrides = {}
    for key in ("t_final", "newton_tol", "dt_min_factor"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    grid_kwargs = {"overrides": overrides}
    for key in ("alphas", "betas", "hs"):
        if getattr(args, key) is not None:
            grid_kwargs[key] = getattr(args, key)
    try:
        grid = SweepGrid(**grid_kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out_dir or "phburgers_out")
    result = run_sweep(grid, workers=args.workers, out_dir=out_dir)
    fmt = args.format or "csv"
    path = out_dir / ("table.csv" if fmt == "csv" else "table.txt")
    atomic_write_text(path, emit_table(result, fmt))
    n_bad = sum(c.termination.startswith("error") for c in result.cells)
    print(f"sweep: {len(result.cells)} cells, {n_bad} errored; table at {path}",
          file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    checks = selftest.run_checks()
    for name, ok, detail in checks:
        print(f"{'ok  ' if ok else 'FAIL'}  {name}  ({detail})", file=sys.stderr)
    failed = sum(not ok for _, ok, _ in checks)
    print(f"verify: {len(checks) - failed}/{len(checks)} checks passed", file=sys.stderr)
    return 0 if failed == 0 else 2


def _cmd_oracle(args) -> int:
    try:
        if args.shock_speed is not None:
            print(f"{rankine_hugoniot_speed(*args.shock_speed):.12g}")
        elif args.shock_dissipation is not None:
            de, dh = shock_dissipation(*args.shock_dissipation)
            print(f"{de:.12g} {dh:.12g}")
        elif args.shock_time:
            print(f"{shock_formation_time():.12g}")
        else:
            t, x = args.solution
            print(f"{characteristics_solution(t, x):.12g}")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _merge_config(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


main = cli_main

if __name__ == "__main__":
    sys.exit(main())
