"""Command-line front end.

Subcommands:

* ``mse-vs-snr``: total MSE of the EM and LS estimators across an SNR
  grid, written as CSV (plus a figure and a run manifest).
* ``mse-vs-iters``: total MSE after each EM iteration at a fixed SNR.
* ``selfcheck``: run the oracle-backed invariant suite.

Options come from a flat ``key = value`` config file and/or flags; flags
win. Outputs are deterministic for a given spec and seed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .harness import (ExperimentSpec, run_mse_vs_iterations, run_mse_vs_snr,
                      validate_spec)
from .model import SUPPORTED_ORDERS, ConfigurationError
from .reporting import (RunManifest, figure_path_for, manifest_path_for,
                        render_iterations_figure, render_snr_figure,
                        write_iterations_csv, write_manifest, write_snr_csv)
from .selfcheck import run_selfcheck

ITERS_DEFAULT_SPEC = ExperimentSpec(snr_grid_db=(15.0,), n_values=(32, 100),
                                    em_iters=13)


class ParseError(ValueError):
    """A config file or flag value could not be interpreted."""


def _parse_int(name: str, text: str, minimum: int = None, even: bool = False) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"{name}: expected an integer, got {text!r}") from None
    if minimum is not None and value < minimum:
        raise ParseError(f"{name}: must be at least {minimum}, got {value}")
    if even and value % 2:
        raise ParseError(f"{name}: must be even, got {value}")
    return value


def _parse_float(name: str, text: str, positive: bool = False) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name}: expected a number, got {text!r}") from None
    if positive and not value > 0:
        raise ParseError(f"{name}: must be positive, got {value}")
    return value


def _parse_order_list(name: str, text: str) -> tuple:
    orders = []
    for item in str(text).split(","):
        value = _parse_int(name, item.strip())
        if value not in SUPPORTED_ORDERS:
            raise ParseError(f"{name}: unsupported modulation order {value} "
                             f"(expected one of {SUPPORTED_ORDERS})")
        orders.append(value)
    return tuple(orders)


# field name -> parser taking (name, raw string) and returning the value
_FIELD_PARSERS = {
    "seed": lambda n, t: _parse_int(n, t, minimum=0),
    "trials": lambda n, t: _parse_int(n, t, minimum=1),
    "em_iters": lambda n, t: _parse_int(n, t, minimum=1),
    "pilots": lambda n, t: _parse_int(n, t, minimum=2, even=True),
    "snr": lambda n, t: tuple(_parse_float(n, item.strip())
                              for item in str(t).split(",")),
    "mod_orders": _parse_order_list,
    "n_data": lambda n, t: tuple(_parse_int(n, item.strip(), minimum=1)
                                 for item in str(t).split(",")),
    "p1": lambda n, t: _parse_float(n, t, positive=True),
    "p2": lambda n, t: _parse_float(n, t, positive=True),
    "pr": lambda n, t: _parse_float(n, t, positive=True),
}

_FIELD_TO_SPEC = {"seed": "seed", "trials": "trials", "em_iters": "em_iters",
                  "pilots": "L", "snr": "snr_grid_db", "mod_orders": "mod_orders",
                  "n_data": "n_values", "p1": "P1", "p2": "P2", "pr": "Pr"}


def parse_config(path=None, overrides=None, base: ExperimentSpec = None) -> ExperimentSpec:
    """Build an experiment spec from a config file plus flag overrides.

    The file is flat ``key = value`` text ('#' starts a comment); list
    values are comma separated. Flags win over file values; anything not
    given keeps the documented default from ``base``.
    """
    values = {}
    if path is not None:
        values.update(_read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    spec_kwargs = {}
    for field, raw in values.items():
        if field not in _FIELD_PARSERS:
            known = ", ".join(sorted(_FIELD_PARSERS))
            raise ParseError(f"unknown config field {field!r} (known fields: {known})")
        spec_kwargs[_FIELD_TO_SPEC[field]] = _FIELD_PARSERS[field](field, raw)

    spec = ExperimentSpec(**{**(base or ExperimentSpec()).__dict__, **spec_kwargs})
    validate_spec(spec)
    return spec


def _read_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config file {path!r}: {exc}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        values[key.strip()] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twrn-em",
        description="Semi-blind EM channel estimation experiments for "
                    "amplify-and-forward two-way relay networks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, default_out: str) -> None:
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        p.add_argument("--seed", metavar="U64", help="random seed")
        p.add_argument("--trials", metavar="N", help="Monte-Carlo trials per grid cell")
        p.add_argument("--snr", metavar="LIST", help="comma-separated SNR grid in dB")
        p.add_argument("--mod-orders", metavar="LIST", dest="mod_orders",
                       help="comma-separated QAM orders (4, 16, 64)")
        p.add_argument("--n-data", metavar="LIST", dest="n_data",
                       help="comma-separated data block lengths")
        p.add_argument("--pilots", metavar="L", help="pilot block length (even)")
        p.add_argument("--em-iters", metavar="N", dest="em_iters",
                       help="EM iteration count")
        p.add_argument("--out", metavar="PATH", default=default_out, help="output CSV path")
        p.add_argument("--workers", type=int, default=1, metavar="W",
                       help="parallel worker processes (results identical to serial)")
        p.add_argument("--no-plot", action="store_true",
                       help="skip rendering the figure next to the CSV")

    p_snr = sub.add_parser("mse-vs-snr", help="total MSE of EM and LS across an SNR grid")
    add_common(p_snr, "mse_vs_snr.csv")

    p_iters = sub.add_parser("mse-vs-iters",
                             help="total MSE after each EM iteration at fixed SNR")
    add_common(p_iters, "mse_vs_iters.csv")

    sub.add_parser("selfcheck", help="run the oracle-backed invariant suite")
    return parser


def _overrides_from(args: argparse.Namespace) -> dict:
    return {"seed": args.seed, "trials": args.trials, "snr": args.snr,
            "mod_orders": args.mod_orders, "n_data": args.n_data,
            "pilots": args.pilots, "em_iters": args.em_iters}


def _run_experiment(args: argparse.Namespace, command: str) -> int:
    base = ITERS_DEFAULT_SPEC if command == "mse-vs-iters" else ExperimentSpec()
    spec = parse_config(args.config, _overrides_from(args), base=base)
    out = Path(args.out)

    start = time.perf_counter()
    if command == "mse-vs-snr":
        records = run_mse_vs_snr(spec, workers=args.workers)
    else:
        records = run_mse_vs_iterations(spec, workers=args.workers)
    wall = time.perf_counter() - start

    if command == "mse-vs-snr":
        write_snr_csv(records, out)
    else:
        write_iterations_csv(records, out)

    figure = None
    if not args.no_plot:
        figure = figure_path_for(out)
        if command == "mse-vs-snr":
            render_snr_figure(records, figure)
        else:
            render_iterations_figure(records, figure)

    manifest = RunManifest.from_run(command, spec, __version__, wall, records,
                                    out, figure)
    write_manifest(manifest, manifest_path_for(out))

    print(f"{command}: {len(records)} rows -> {out} "
          f"({wall:.2f}s, {manifest.clamp_flags} clamp flags, "
          f"{manifest.excluded_trials} excluded trials)")
    if figure is not None:
        print(f"figure -> {figure}")
    return 0


def _run_selfcheck() -> int:
    results = run_selfcheck()
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name}: {result.detail}")
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "selfcheck":
            return _run_selfcheck()
        return _run_experiment(args, args.command)
    except (ParseError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    raise SystemExit(main())
