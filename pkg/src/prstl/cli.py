"""Command-line interface.

Subcommands:
  check      parse a formula and dump its JSON AST
  monitor    evaluate a formula over a CSV trace (robustness records for
             deterministic formulas, probability records for P-bounded ones)
  validate   statistical self-validation (interval coverage / SPRT error rates)
  bench      micro-benchmarks of the streaming evaluator

Exit codes: 0 success (and, for monitor, property not violated); 1 usage or
parse error; 2 runtime error; 3 property violated in monitor mode.

Trace files are long-format CSV with the header ``time,variable,value``;
timestamps must strictly increase per variable. Output records are JSON
lines validated by ``schemas/result_record.schema.json``; non-finite
robustness serializes as the strings "inf" / "-inf" to stay inside JSON.
The environment variable PRSTL_SEED supplies the default seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import __version__
from .bench import PRESETS, run_bench
from .formula import FormulaError, Prob, formula_to_json, parse_formula
from .noise import NoiseError, load_model
from .robustness import eval_all
from .signals import DENSE, DISCRETE, Trace, TraceError
from .smc import CLOPPER_PEARSON, WILSON, SmcConfig, SmcError, StreamingMonitor, Verdict
from .validation import (DEFAULT_CONFIDENCE_GRID, DEFAULT_P_GRID, coverage_validation,
                         sprt_validation)

USAGE_ERROR = 1
RUNTIME_ERROR = 2
VIOLATED = 3

SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the CLI contract reserves 2 for
    # runtime errors and uses 1 for usage problems.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("PRSTL_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="prstl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prstl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse a formula and dump its AST")
    p_check.add_argument("formula")

    p_mon = sub.add_parser("monitor", help="evaluate a formula over a CSV trace")
    p_mon.add_argument("formula")
    p_mon.add_argument("--trace", required=True, help="CSV file: time,variable,value")
    p_mon.add_argument("--noise-model", help="noise model JSON (required for P formulas)")
    p_mon.add_argument("--samples", type=int, default=1000)
    p_mon.add_argument("--confidence", type=float, default=0.95)
    p_mon.add_argument("--interval", choices=["wilson", "clopper-pearson"], default="wilson")
    p_mon.add_argument("--seed", type=int, default=None)
    p_mon.add_argument("--workers", type=int, default=1)
    sem = p_mon.add_mutually_exclusive_group()
    sem.add_argument("--dense", action="store_true")
    sem.add_argument("--discrete", action="store_true")

    p_val = sub.add_parser("validate", help="statistical self-validation")
    mode = p_val.add_mutually_exclusive_group(required=True)
    mode.add_argument("--coverage", action="store_true")
    mode.add_argument("--sprt", action="store_true")
    p_val.add_argument("--p-grid", default=",".join(str(p) for p in DEFAULT_P_GRID))
    p_val.add_argument("--levels", default=",".join(str(c) for c in DEFAULT_CONFIDENCE_GRID))
    p_val.add_argument("--trials", type=int, default=None)
    p_val.add_argument("--n", type=int, default=100)
    p_val.add_argument("--p0", type=float, default=0.3)
    p_val.add_argument("--p1", type=float, default=0.5)
    p_val.add_argument("--alpha", type=float, default=0.05)
    p_val.add_argument("--beta", type=float, default=0.05)
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--json", dest="json_path", help="also write the summary as JSON")

    p_bench = sub.add_parser("bench", help="micro-benchmarks")
    p_bench.add_argument("--formula", choices=sorted(PRESETS), default="phi1")
    p_bench.add_argument("--samples", type=int, default=100_000)
    p_bench.add_argument("--repeats", type=int, default=5)
    p_bench.add_argument("--window-scale", type=float, default=1.0)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--json", dest="json_path")

    return parser


# --------------------------------------------------------------------------
# Record encoding
# --------------------------------------------------------------------------

def _encode_rho(value: float):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


def robustness_record(time: float, rho: float, inconclusive: bool) -> dict:
    return {"schema_version": SCHEMA_VERSION, "type": "robustness",
            "time": time, "rho": _encode_rho(rho), "inconclusive": bool(inconclusive)}


def probability_record(record) -> dict:
    est = record.estimate
    return {"schema_version": SCHEMA_VERSION, "type": "probability",
            "time": record.time, "estimate": est.estimate,
            "lower": est.lower, "upper": est.upper,
            "confidence": est.confidence, "samples": est.samples,
            "successes": est.successes, "verdict": record.verdict}


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _cmd_check(args, out) -> int:
    formula = parse_formula(args.formula)
    print(json.dumps(formula_to_json(formula), indent=2, sort_keys=True), file=out)
    return 0


def _read_trace_csv(path: str) -> dict[str, tuple[list[float], list[float]]]:
    columns: dict[str, tuple[list[float], list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["time", "variable", "value"]:
            raise TraceError(f"{path}: expected CSV header 'time,variable,value'")
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise TraceError(f"{path}:{row_number}: expected 3 columns")
            try:
                t = float(row[0])
                v = float(row[2])
            except ValueError:
                raise TraceError(f"{path}:{row_number}: unparseable number") from None
            name = row[1].strip()
            series = columns.setdefault(name, ([], []))
            series[0].append(t)
            series[1].append(v)
    if not columns:
        raise TraceError(f"{path}: trace file holds no samples")
    return columns


def _cmd_monitor(args, out) -> int:
    formula = parse_formula(args.formula)
    semantics = DENSE if args.dense else DISCRETE
    seed = args.seed if args.seed is not None else _default_seed()
    columns = _read_trace_csv(args.trace)

    if isinstance(formula, Prob):
        if not args.noise_model:
            print("prstl monitor: error: probability formulas need --noise-model",
                  file=sys.stderr)
            return USAGE_ERROR
        if len(columns) != 1:
            print("prstl monitor: error: probabilistic monitoring lifts a single "
                  "reading variable; the trace holds "
                  f"{len(columns)}", file=sys.stderr)
            return USAGE_ERROR
        model = load_model(args.noise_model)
        config = SmcConfig(
            samples=args.samples, confidence=args.confidence,
            interval=WILSON if args.interval == "wilson" else CLOPPER_PEARSON,
            seed=seed)
        monitor = StreamingMonitor(formula, model, config, semantics,
                                   workers=args.workers)
        (times, values), = columns.values()
        violated = False
        for t, q in zip(times, values):
            record = monitor.feed(t, q)
            violated = violated or record.verdict == Verdict.VIOLATED
            print(_dump(probability_record(record)), file=out)
        return VIOLATED if violated else 0

    trace = Trace(semantics=semantics)
    for name, (times, values) in columns.items():
        trace.extend(name, times, values)
    series = eval_all(formula, trace)
    for t, rho, flag in zip(series.times.tolist(), series.values.tolist(),
                            series.inconclusive.tolist()):
        print(_dump(robustness_record(t, rho, flag)), file=out)
    return 0


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise SmcError(f"unparseable grid {text!r}") from None


def _cmd_validate(args, out) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.coverage:
        trials = args.trials if args.trials is not None else 10_000
        cells = coverage_validation(_parse_grid(args.p_grid), _parse_grid(args.levels),
                                    trials=trials, n=args.n, seed=seed)
        header = (f"{'p':>5} {'conf':>6} {'wilson':>9} {'clopper_pearson':>16} "
                  f"{'chi2_p':>9}")
        print(header, file=out)
        for cell in cells:
            print(f"{cell.p:>5.2f} {cell.confidence:>6.2f} "
                  f"{cell.wilson_coverage:>9.4f} {cell.clopper_pearson_coverage:>16.4f} "
                  f"{cell.chi_squared_p:>9.4f}", file=out)
        payload = {"mode": "coverage", "n": args.n, "trials": trials, "seed": seed,
                   "cells": [cell.__dict__ for cell in cells]}
    else:
        from .smc import SprtConfig

        trials = args.trials if args.trials is not None else 5000
        result = sprt_validation(SprtConfig(p0=args.p0, p1=args.p1,
                                            alpha=args.alpha, beta=args.beta),
                                 trials=trials, seed=seed)
        print(f"{'hypothesis':>12} {'rate':>8} {'bound':>8} {'mean_samples':>13}", file=out)
        print(f"{'type_I':>12} {result.type_i_rate:>8.4f} {args.alpha:>8.4f} "
              f"{result.mean_samples_h0:>13.1f}", file=out)
        print(f"{'type_II':>12} {result.type_ii_rate:>8.4f} {args.beta:>8.4f} "
              f"{result.mean_samples_h1:>13.1f}", file=out)
        payload = {"mode": "sprt", "trials": trials, "seed": seed,
                   "p0": args.p0, "p1": args.p1, "alpha": args.alpha, "beta": args.beta,
                   "type_i_rate": result.type_i_rate, "type_ii_rate": result.type_ii_rate,
                   "undecided_rate": result.undecided_rate,
                   "mean_samples_h0": result.mean_samples_h0,
                   "mean_samples_h1": result.mean_samples_h1}
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_bench(args, out) -> int:
    if args.repeats < 1:
        print("prstl bench: error: --repeats must be at least 1", file=sys.stderr)
        return USAGE_ERROR
    seed = args.seed if args.seed is not None else _default_seed()
    result = run_bench(PRESETS[args.formula], args.samples, args.repeats,
                       seed=seed, window_scale=args.window_scale)
    print(f"formula            {result.formula}", file=out)
    print(f"samples            {result.samples}", file=out)
    print(f"mean +/- std       {result.mean_seconds * 1e3:.3f} ms "
          f"+/- {result.std_seconds * 1e3:.3f} ms over {result.repeats} repeats", file=out)
    print(f"throughput         {result.throughput_sps:,.0f} samples/s", file=out)
    print(f"peak deque entries {sum(result.deque_peaks)} "
          f"(per window pass: {list(result.deque_peaks)})", file=out)
    print(f"window bounds      {list(result.window_sample_bounds)} samples", file=out)
    if args.json_path:
        payload = {"formula": result.formula, "samples": result.samples,
                   "repeats": result.repeats,
                   "times_seconds": list(result.times_seconds),
                   "mean_seconds": result.mean_seconds,
                   "std_seconds": result.std_seconds,
                   "throughput_sps": result.throughput_sps,
                   "deque_peaks": list(result.deque_peaks),
                   "window_sample_bounds": list(result.window_sample_bounds)}
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "check":
            return _cmd_check(args, out)
        if args.command == "monitor":
            return _cmd_monitor(args, out)
        if args.command == "validate":
            return _cmd_validate(args, out)
        return _cmd_bench(args, out)
    except FormulaError as exc:
        print(f"prstl: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (TraceError, NoiseError, SmcError, OSError, ValueError) as exc:
        print(f"prstl: error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
