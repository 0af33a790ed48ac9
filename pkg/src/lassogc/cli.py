"""Command-line interface.

Subcommands: simulate, fit, gc, sweep, theory, bin-spikes. Every subcommand
accepts ``--show-config`` to print its effective defaults as JSON and exit.
Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .causality import DEFAULT_T0, GC_CSV_HEADER
from .errors import InputError, NumericalError, StructuralError, UnstableModelError
from .experiments import (
    SweepConfig,
    analyze_pair,
    bin_spikes,
    ingest_csv,
    load_model,
    render_plots,
    run_sweep,
)
from .regression import build_design, cross_validate_lambda, fit_lasso, fit_ols
from .theory import AbsoluteConstants, theory_report
from .var_model import simulate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _show_config(args, defaults: dict) -> int:
    print(json.dumps(defaults, indent=2))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.show_config:
        return _show_config(args, {"model": "builtin", "n": 1000, "burn_in": 1000, "seed": 0})
    model = load_model(args.model)
    traj = simulate(model, args.n, burn_in=args.burn_in, seed=args.seed)
    traj.to_csv(args.out)
    print(f"wrote {traj.data.shape[0]} rows x {traj.data.shape[1]} channels to {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    if args.show_config:
        return _show_config(
            args, {"target": 0, "order": 10, "lam": None, "cv_folds": 5, "center": True}
        )
    data = ingest_csv(args.data, channels=args.channels, center=not args.no_center)
    problem = build_design(data, args.target, args.order)
    lam = args.lam
    if lam is None:
        lam = cross_validate_lambda(problem, folds=args.cv_folds).chosen_lambda
    fit = fit_ols(problem) if lam == 0.0 else fit_lasso(problem, lam)
    text = fit.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_gc(args) -> int:
    if args.show_config:
        return _show_config(
            args,
            {
                "target": 0,
                "source": 1,
                "order": 10,
                "lam": None,
                "t0": DEFAULT_T0,
                "fpr": 0.01,
                "cv_folds": 5,
            },
        )
    data = ingest_csv(
        args.data, channels=args.channels, center=not args.no_center, zscore=args.zscore
    )
    lam = None if args.cv else args.lam
    analysis = analyze_pair(
        data, target=args.target, source=args.source, p=args.order, lam=lam, t0=args.t0
    )
    print(analysis.format_table())
    fwd = analysis.lasso_src_to_tgt
    try:
        from .causality import threshold_for_fpr
        from .errors import InfeasibleThresholdError

        rule = threshold_for_fpr(args.fpr, fwd.n, fwd.p, args.t0)
        det_fwd = fwd.lgc > rule.threshold
        det_rev = analysis.lasso_tgt_to_src.lgc > rule.threshold
        print(
            f"threshold at false-positive level {args.fpr} (t0={args.t0}): "
            f"{rule.threshold:.6g}; detected {fwd.source_channel}->{fwd.target_channel}: "
            f"{det_fwd}, {fwd.target_channel}->{fwd.source_channel}: {det_rev}"
        )
    except InfeasibleThresholdError as exc:
        print(f"threshold at false-positive level {args.fpr}: unavailable ({exc})")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(analysis.to_csv())
    else:
        print(GC_CSV_HEADER)
        for res in analysis.results():
            print(res.to_csv_row())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.show_config:
        demo = SweepConfig(sweep_variable="n", values=[250, 500, 750, 1000], fixed={"p": 100})
        return _show_config(args, json.loads(demo.to_json()))
    with open(args.config) as fh:
        config = SweepConfig.from_json(fh.read())
    result = run_sweep(config)
    import os

    os.makedirs(args.out_dir, exist_ok=True)
    records_path = os.path.join(args.out_dir, "records.csv")
    summary_path = os.path.join(args.out_dir, "summary.csv")
    with open(records_path, "w") as fh:
        fh.write(result.records_csv())
    with open(summary_path, "w") as fh:
        fh.write(result.summary_csv())
    svg_paths = render_plots(result, args.out_dir)
    print(f"wrote {records_path}, {summary_path}, {', '.join(svg_paths)}")
    return EXIT_OK


def _cmd_theory(args) -> int:
    if args.show_config:
        consts = AbsoluteConstants()
        return _show_config(
            args,
            {
                "target": 0,
                "order": 10,
                "n": 1000,
                "k": None,
                "m": 8.0,
                "constants": consts.__dict__,
            },
        )
    model = load_model(args.model)
    constants = None
    if args.consts:
        with open(args.consts) as fh:
            constants = AbsoluteConstants(**json.load(fh))
    report = theory_report(
        model, target=args.target, p=args.order, n=args.n, k=args.k, m=args.m,
        constants=constants,
    )
    print(report.format_table())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json() + "\n")
    return EXIT_OK


def _cmd_bin_spikes(args) -> int:
    if args.show_config:
        return _show_config(args, {"bin_width": 0.04, "t_start": 0.0, "t_end": None})
    import csv as _csv

    units: dict = {}
    try:
        with open(args.events, newline="") as fh:
            reader = _csv.reader(fh)
            rows = [r for r in reader if r]
    except FileNotFoundError as exc:
        raise InputError(f"events file not found: {args.events}") from exc
    start = 0
    if rows and not _is_float(rows[0][-1]):
        start = 1
    for r in rows[start:]:
        if len(r) < 2:
            raise InputError(f"event rows need (unit, time) cells, got {r}")
        try:
            unit, t = r[0].strip(), float(r[1])
        except ValueError:
            raise InputError(f"non-numeric event time in row {r}") from None
        units.setdefault(unit, []).append(t)
    spike_times = [sorted(v) for _, v in sorted(units.items())]
    t_end = args.t_end
    if t_end is None:
        t_end = max((t for ts in spike_times for t in ts), default=args.t_start + args.bin_width)
    psth = bin_spikes(spike_times, args.bin_width, args.t_start, t_end)
    with open(args.out, "w") as fh:
        fh.write("t,psth\n")
        for i, v in enumerate(psth.counts):
            fh.write(f"{i},{format(v, '.17g')}\n")
    print(f"wrote {psth.counts.size} bins to {args.out} ({psth.ignored} events ignored)")
    return EXIT_OK


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lassogc",
        description="Granger-causality detection in sparse VAR time series",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="simulate a model to a trajectory CSV")
    ps.add_argument("--model", default="builtin", help='"builtin" or a model JSON path')
    ps.add_argument("--n", type=int, default=1000)
    ps.add_argument("--burn-in", type=int, default=1000, dest="burn_in")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", required=False, default="trajectory.csv")
    ps.add_argument("--show-config", action="store_true")
    ps.set_defaults(func=_cmd_simulate)

    pf = sub.add_parser("fit", help="fit one target channel from a CSV")
    pf.add_argument("--data", required=False)
    pf.add_argument("--target", type=int, default=0)
    pf.add_argument("--order", type=int, default=10)
    pf.add_argument("--lam", type=float, default=None, help="fixed lambda; omit for CV")
    pf.add_argument("--cv-folds", type=int, default=5, dest="cv_folds")
    pf.add_argument("--channels", nargs="*", default=None)
    pf.add_argument("--no-center", action="store_true")
    pf.add_argument("--out", default=None)
    pf.add_argument("--show-config", action="store_true")
    pf.set_defaults(func=_cmd_fit)

    pg = sub.add_parser("gc", help="both-direction causality analysis of a pair")
    pg.add_argument("--data", required=False)
    pg.add_argument("--target", type=int, default=0)
    pg.add_argument("--source", type=int, default=1)
    pg.add_argument("--order", type=int, default=10)
    pg.add_argument("--lam", "--lambda", dest="lam", type=float, default=None,
                    help="fixed lambda; omit (or pass --cv) for cross-validation")
    pg.add_argument("--cv", action="store_true", help="force cross-validated lambda")
    pg.add_argument("--t0", type=float, default=DEFAULT_T0)
    pg.add_argument("--fpr", type=float, default=0.01)
    pg.add_argument("--channels", nargs="*", default=None)
    pg.add_argument("--no-center", action="store_true")
    pg.add_argument("--zscore", action="store_true")
    pg.add_argument("--out", default=None)
    pg.add_argument("--show-config", action="store_true")
    pg.set_defaults(func=_cmd_gc)

    pw = sub.add_parser("sweep", help="run a sweep config to CSV + SVG")
    pw.add_argument("--config", required=False)
    pw.add_argument("--out-dir", default="sweep_out", dest="out_dir")
    pw.add_argument("--show-config", action="store_true")
    pw.set_defaults(func=_cmd_sweep)

    pt = sub.add_parser("theory", help="print the constant table for a model")
    pt.add_argument("--model", default="builtin")
    pt.add_argument("--target", type=int, default=0)
    pt.add_argument("--order", type=int, default=11)
    pt.add_argument("--n", type=int, default=1000)
    pt.add_argument("--k", type=int, default=None)
    pt.add_argument("--m", type=float, default=8.0)
    pt.add_argument("--consts", default=None, help="JSON file of absolute constants")
    pt.add_argument("--out", default=None)
    pt.add_argument("--show-config", action="store_true")
    pt.set_defaults(func=_cmd_theory)

    pb = sub.add_parser("bin-spikes", help="bin (unit, time) event rows into a PSTH CSV")
    pb.add_argument("--events", required=False)
    pb.add_argument("--bin-width", type=float, default=0.04, dest="bin_width")
    pb.add_argument("--t-start", type=float, default=0.0, dest="t_start")
    pb.add_argument("--t-end", type=float, default=None, dest="t_end")
    pb.add_argument("--out", default="psth.csv")
    pb.add_argument("--show-config", action="store_true")
    pb.set_defaults(func=_cmd_bin_spikes)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if not args.show_config:
            _require_inputs(args)
        return args.func(args)
    except (
        InputError,
        StructuralError,
        UnstableModelError,
        FileNotFoundError,
        json.JSONDecodeError,
    ) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _require_inputs(args) -> None:
    needed = {
        "_cmd_fit": ["data"],
        "_cmd_gc": ["data"],
        "_cmd_sweep": ["config"],
        "_cmd_bin_spikes": ["events"],
    }.get(args.func.__name__, [])
    for name in needed:
        if getattr(args, name) is None:
            raise InputError(f"--{name.replace('_', '-')} is required")


if __name__ == "__main__":
    sys.exit(main())
