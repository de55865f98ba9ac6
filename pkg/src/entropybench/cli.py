"""Command-line front end: ``entropybench {sweep,fit,threshold,calibrate,plot}``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure (fit did not converge).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import advantage, calibration, heuristic, records
from .experiment import SECTIONS, ConfigError, ExperimentConfig, parse_int_list, run_sweep
from .svgplot import Chart, Series

log = logging.getLogger("entropybench")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class NumericalFailure(RuntimeError):
    pass


def _emit(text: str, path: str | None):
    if path:
        records.write_text(path, text)
    else:
        sys.stdout.write(text)


def _load_table(path: str | None) -> calibration.CalibrationTable:
    if path:
        return calibration.parse_calibration(Path(path).read_text(encoding="utf-8"))
    return calibration.load_example_table()


def _policy(text: str):
    return text if text in ("median", "mean") else parse_int_list(text)


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    cfg.update({key: getattr(args, key) for keys in SECTIONS.values() for key in keys})
    raw = {} if args.raw_dir else None
    rows = run_sweep(cfg, raw)
    _emit(records.sweep_csv(rows), cfg.output)
    if raw:
        out = Path(args.raw_dir)
        out.mkdir(parents=True, exist_ok=True)
        for (n, depth), runs in sorted(raw.items()):
            if cfg.estimator == "swap":
                records.write_text(out / f"swap_n{n}_d{depth}.csv", records.swap_records_csv(runs))
            else:
                records.write_text(out / f"snapshots_n{n}_d{depth}.csv", records.snapshots_csv(runs))
    return EXIT_OK


def cmd_fit(args) -> int:
    p1, p2 = args.p1, args.p2
    if args.calibration is not None:
        p1, p2 = calibration.noise_from_fidelities(
            *calibration.aggregate(_load_table(args.calibration or None), _policy(args.aggregation))
        )
    if p1 is None or p2 is None:
        raise ConfigError("fit needs --p1 and --p2, or --calibration")
    curves = records.curves_from_sweep(records.read_sweep(args.data))
    result = heuristic.fit(
        curves, p1, p2, fit_beta=args.fit_beta, mode=args.mode, weighted=args.weighted, max_iter=args.max_iter
    )
    stem = Path(args.data).with_suffix("")
    report = args.report or f"{stem}.fit.txt"
    curve_path = args.curve or f"{stem}.fitcurve.csv"
    records.write_text(report, result.to_report())
    fitted = [
        (c.n, int(d), heuristic.model_purity(c.n, int(d), result.params)) for c in curves for d in c.depths
    ]
    records.write_text(curve_path, records.fit_curve_csv(fitted))
    sys.stdout.write(result.to_report())
    if not result.converged:
        raise NumericalFailure(f"fit did not converge after {result.iterations} iterations")
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.calibration is not None:
        table = _load_table(args.calibration or None)
        _, p2 = calibration.noise_from_fidelities(*calibration.aggregate(table, _policy(args.aggregation)))
    elif args.p2 is not None:
        p2 = args.p2
    else:
        raise ConfigError("threshold needs --p2 or --calibration")
    rows: list = []
    if not args.asymptotic:
        rows += advantage.frontier_curve(args.c, p2, parse_int_list(args.widths))
    rows.append(("inf", advantage.depth_threshold_asymptotic(args.c, p2), advantage.prior_threshold(args.c, p2)))
    _emit(records.frontier_rows_csv(rows), args.output)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    table = _load_table(args.table)
    f1, f2 = calibration.aggregate(table, _policy(args.aggregation))
    p1, p2 = calibration.noise_from_fidelities(f1, f2)
    pm = calibration.symmetric_readout(args.p01, args.p10)
    lines = {
        "f1": f1,
        "f2": f2,
        "p1": p1,
        "p2": p2,
        "p01": args.p01,
        "p10": args.p10,
        "pm": pm,
        "alpha1": heuristic.rate_from_probability(p1),
        "alpha2": heuristic.rate_from_probability(p2),
        "beta": heuristic.rate_from_probability(pm),
    }
    _emit("".join(f"{k} = {v!r}\n" for k, v in lines.items()), args.output)
    return EXIT_OK


def _sweep_chart(rows, kind: str, fit_rows=None) -> Chart:
    by_n: dict[int, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        value = row.purity if kind == "purity_curve" else row.renyi2_density
        if value is not None:
            by_n[row.n][row.depth].append(value)
    if kind == "purity_curve":
        chart = Chart("Purity versus depth", "depth D", "Tr[rho^2]")
    else:
        chart = Chart("Renyi-2 entropy density versus depth", "depth D", "S2 / n")
        chart.hlines.append((1.0, "maximally mixed"))
    fitted: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for n, depth, value in fit_rows or []:
        density = records.renyi2_from_purity(value, n)
        fitted[n].append((depth, value if kind == "purity_curve" else density))
    for n in sorted(by_n):
        depths = sorted(by_n[n])
        means = [float(np.mean(by_n[n][d])) for d in depths]
        errs = [float(np.std(by_n[n][d], ddof=1)) if len(by_n[n][d]) > 1 else 0.0 for d in depths]
        chart.series.append(Series(f"n = {n}", depths, means, errs, line=not fitted))
        if kind == "purity_curve":
            chart.hlines.append((2.0**-n, f"maximally mixed, n = {n}"))
        if fitted[n]:
            pts = sorted(fitted[n])
            chart.series.append(Series(f"model n = {n}", [p[0] for p in pts], [p[1] for p in pts], markers=False))
    return chart


def _frontier_chart(rows) -> Chart:
    finite = [r for r in rows if math.isfinite(r[0])]
    limit = [r for r in rows if not math.isfinite(r[0])]
    chart = Chart("Depth beyond which quantum advantage is out of reach", "width n", "depth D")
    chart.series.append(Series("this work", [r[0] for r in finite], [r[1] for r in finite], markers=False))
    chart.series.append(
        Series("prior bound", [r[0] for r in finite], [r[2] for r in finite], markers=False, dash="6,4")
    )
    if limit:
        this, prior = limit[0][1], limit[0][2]
        chart.hlines.append((this, "large-n limit"))
        chart.notes += [f"n -> inf: {this:.4g}", f"prior: {prior:.4g}"]
    return chart


def emit_plot(data: str, kind: str, output: str, fit_curve: str | None = None) -> str:
    if kind == "frontier":
        rows = records.read_frontier(data)
        if not rows:
            raise ValueError(f"{data}: no rows to plot")
        chart = _frontier_chart(rows)
    elif kind in ("entropy_curve", "purity_curve"):
        rows = records.read_sweep(data)
        if not rows:
            raise ValueError(f"{data}: no rows to plot")
        fit_rows = records.read_fit_curve(fit_curve) if fit_curve else None
        chart = _sweep_chart(rows, kind, fit_rows)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    svg = chart.render()
    records.write_text(output, svg)
    return output


def cmd_plot(args) -> int:
    output = args.output or str(Path(args.data).with_suffix(".svg"))
    emit_plot(args.data, args.kind, output, args.fit_curve)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entropybench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="simulate entropy accumulation and estimate purities")
    p.add_argument("--config", help="INI experiment file; flags override its keys")
    p.add_argument("--raw-dir", help="also write measured snapshots or SWAP records here")
    for section, keys in SECTIONS.items():
        group = p.add_argument_group(f"[{section}] keys")
        for key in keys:
            group.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the global-depolarising model to sweep output")
    p.add_argument("data")
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--calibration", nargs="?", const="", help="take p1, p2 from a calibration CSV")
    p.add_argument("--aggregation", default="median")
    p.add_argument("--fit-beta", action="store_true")
    p.add_argument("--mode", choices=heuristic.FIT_MODES, default="ratio")
    p.add_argument("--weighted", action="store_true", help="inverse-variance weights")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--report", help="key = value fit report (default: <data>.fit.txt)")
    p.add_argument("--curve", help="fitted curve CSV (default: <data>.fitcurve.csv)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("threshold", help="advantage frontier for an entropy-density threshold")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--p2", type=float)
    p.add_argument("--calibration", nargs="?", const="", help="take p2 from a calibration CSV")
    p.add_argument("--aggregation", default="median")
    p.add_argument("--widths", default="2-200")
    p.add_argument("--asymptotic", action="store_true", help="only the large-width limit")
    p.add_argument("--output")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("calibrate", help="convert a calibration table to noise parameters")
    p.add_argument("table", nargs="?", help="calibration CSV (default: bundled example)")
    p.add_argument("--aggregation", default="median", help="median, mean or qubit ids like 100-102")
    p.add_argument("--p01", type=float, default=0.0)
    p.add_argument("--p10", type=float, default=0.0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("plot", help="render sweep or frontier CSV as SVG")
    p.add_argument("data")
    p.add_argument("--kind", choices=("entropy_curve", "purity_curve", "frontier"), required=True)
    p.add_argument("--fit-curve", help="model curve CSV from `fit` to overlay")
    p.add_argument("--output")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
