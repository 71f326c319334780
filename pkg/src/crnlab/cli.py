"""Command-line front door.

Subcommands: analyze, simulate, stationary, experiment.  Exit codes are
stable: 0 success, 2 input error (files, parsing, schema, dimensions),
3 threshold failure in an experiment config, 4 structural precondition
refused.  Diagnostics go to stderr; stdout carries only the requested
JSON/CSV payload.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from .config import ConfigError, load_config, run_experiment_config
from .errors import CRNError, ContractError, ParseError, RefusalError
from .experiments import ComparisonResult
from .parser import load_network
from .simulate import SimConfig, Thinning, simulate
from .structure import (
    analyze,
    deterministic_equilibrium,
    product_form_measure,
    stationarity_residual,
)

OK, INPUT_ERROR, THRESHOLD_FAILURE, REFUSED = 0, 2, 3, 4


@contextmanager
def _out_stream(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _load(path: str):
    p = Path(path)
    if not p.exists():
        print(f"error: model file not found: {p}", file=sys.stderr)
        raise SystemExit(INPUT_ERROR)
    try:
        return load_network(p)
    except ParseError as exc:
        print(f"error: {p}:{exc.line}:{exc.column}: {exc.message}", file=sys.stderr)
        raise SystemExit(INPUT_ERROR)


def cmd_analyze(args) -> int:
    net = _load(args.model)
    report = analyze(net).to_dict()
    report["species"] = list(net.species_names)
    report["n_reactions"] = len(net.reactions)
    with _out_stream(args.out) as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return OK


def cmd_simulate(args) -> int:
    net = _load(args.model)
    if args.init is None:
        init = (0,) * net.n_species
    else:
        try:
            init = tuple(int(v) for v in args.init.split(",")) if args.init else ()
        except ValueError:
            print(f"error: bad --init {args.init!r}", file=sys.stderr)
            return INPUT_ERROR
    if len(init) != net.n_species:
        print(
            f"error: --init has {len(init)} entries, model has {net.n_species} species",
            file=sys.stderr,
        )
        return INPUT_ERROR
    thinning = Thinning.every_event() if args.thin <= 1 else Thinning.every(args.thin)
    cfg = SimConfig(
        seed=args.seed,
        max_time=args.max_time,
        max_events=args.max_events,
        thinning=thinning,
        engine=args.engine,
    )
    try:
        record = simulate(net, init, cfg)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    with _out_stream(args.out) as fh:
        record.to_csv(fh)
    return OK


def cmd_stationary(args) -> int:
    net = _load(args.model)
    base = tuple(int(v) for v in args.base_state.split(",")) if args.base_state else (1,) * net.n_species
    if len(base) != net.n_species:
        print("error: --base-state dimension mismatch", file=sys.stderr)
        return INPUT_ERROR
    window = (args.window,) * net.n_species
    try:
        c = deterministic_equilibrium(net)
        measure = product_form_measure(net, c, base, window)
        residual = stationarity_residual(net, measure, window)
    except RefusalError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return REFUSED
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    payload = {
        "equilibrium": [float(v) for v in c],
        "window": args.window,
        "base_state": list(base),
        "states": [list(s) for s in measure.states],
        "probabilities": measure.probabilities.tolist(),
        "boundary_leak": measure.boundary_leak,
        "normalizable": measure.normalizable,
        "stationarity_residual": residual,
    }
    with _out_stream(args.out) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return OK


def cmd_experiment(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config not found: {path}", file=sys.stderr)
        return INPUT_ERROR
    try:
        doc = load_config(path)
        outcome = run_experiment_config(doc, base_dir=path.parent, jobs=args.jobs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except RefusalError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return REFUSED
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR

    result = outcome.result
    if isinstance(result, ComparisonResult):
        payload = result.to_dict()
    else:  # drift survey rows
        payload = {
            "kind": "drift",
            "rows": [
                dict(
                    r.estimate.to_dict(),
                    stopped_over_initial=r.stopped_over_initial,
                    tau_over_initial=r.tau_over_initial,
                )
                for r in result
            ],
        }
    payload["thresholds_ok"] = outcome.thresholds_ok
    payload["threshold_report"] = outcome.threshold_report
    with _out_stream(args.out) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if args.csv and isinstance(result, ComparisonResult):
        with open(args.csv, "w", encoding="utf-8") as fh:
            result.to_csv(fh)
    for line in outcome.threshold_report:
        print(line, file=sys.stderr)
    return OK if outcome.thresholds_ok else THRESHOLD_FAILURE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crnlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structural report (linkage classes, deficiency)")
    p.add_argument("model", help="path to a .crn model file")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="one exact trajectory as CSV")
    p.add_argument("model")
    p.add_argument("--init", default=None, help="comma-separated initial counts (default zeros)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-time", type=float, default=100.0)
    p.add_argument("--max-events", type=int, default=10**8)
    p.add_argument("--thin", type=int, default=1, help="record every k-th event")
    p.add_argument("--engine", default="auto", choices=["auto", "numba", "python"])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("stationary", help="product-form stationary measure + residual")
    p.add_argument("model")
    p.add_argument("--base-state", default=None, help="comma-separated state in the class")
    p.add_argument("--window", type=int, default=30, help="per-coordinate truncation cap")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_stationary)

    p = sub.add_parser("experiment", help="run a JSON experiment config")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=max(1, os.cpu_count() or 1))
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None, help="also write per-N error matrix CSV")
    p.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except CRNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
