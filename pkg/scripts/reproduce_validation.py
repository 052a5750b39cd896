#!/usr/bin/env python3
"""Reproduce the statistical validation tables and the scaling benchmark.

Writes JSON artifacts next to this script (or to --out) and prints the same
aligned tables the CLI shows. Runtime is a few minutes at the default trial
counts; pass --quick for a fast sanity pass.
"""

import argparse
import json
import pathlib
import sys

from prstl.bench import PRESETS, run_bench
from prstl.smc import SprtConfig
from prstl.validation import coverage_validation, sprt_validation


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).parent / "results"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials = 1000 if args.quick else 10_000
    sprt_trials = 500 if args.quick else 5000

    print(f"# coverage grid ({trials} trials per p)")
    cells = coverage_validation(trials=trials, seed=args.seed)
    print(f"{'p':>5} {'conf':>6} {'wilson':>9} {'clopper_pearson':>16} {'chi2_p':>9}")
    for cell in cells:
        print(f"{cell.p:>5.2f} {cell.confidence:>6.2f} {cell.wilson_coverage:>9.4f} "
              f"{cell.clopper_pearson_coverage:>16.4f} {cell.chi_squared_p:>9.4f}")
    (out_dir / "coverage.json").write_text(
        json.dumps([cell.__dict__ for cell in cells], indent=2, sort_keys=True) + "\n")

    print(f"\n# SPRT boundary error rates ({sprt_trials} trials per side)")
    result = sprt_validation(SprtConfig(p0=0.3, p1=0.5), trials=sprt_trials,
                             seed=args.seed)
    print(f"type_I  {result.type_i_rate:.4f}   mean samples {result.mean_samples_h0:.1f}")
    print(f"type_II {result.type_ii_rate:.4f}   mean samples {result.mean_samples_h1:.1f}")
    (out_dir / "sprt.json").write_text(json.dumps({
        "type_i_rate": result.type_i_rate, "type_ii_rate": result.type_ii_rate,
        "mean_samples_h0": result.mean_samples_h0,
        "mean_samples_h1": result.mean_samples_h1,
        "trials": sprt_trials}, indent=2, sort_keys=True) + "\n")

    print("\n# streaming scaling (phi1)")
    sizes = (10_000, 100_000) if args.quick else (100_000, 1_000_000)
    rows = []
    for n in sizes:
        bench = run_bench(PRESETS["phi1"], n, repeats=5, seed=args.seed)
        rows.append({"samples": n, "mean_seconds": bench.mean_seconds,
                     "throughput_sps": bench.throughput_sps,
                     "deque_peaks": list(bench.deque_peaks)})
        print(f"n={n:>9,}  {bench.mean_seconds * 1e3:8.2f} ms  "
              f"{bench.throughput_sps / 1e6:6.1f} M samples/s  "
              f"peak deque {bench.deque_peaks[0]}")
    print(f"time ratio: {rows[-1]['mean_seconds'] / rows[0]['mean_seconds']:.2f} "
          f"(sizes differ by {sizes[1] // sizes[0]}x)")
    (out_dir / "scaling.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
