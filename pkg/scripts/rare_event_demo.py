#!/usr/bin/env python3
"""Rare-event splitting vs direct Monte Carlo on a Gaussian tail.

Estimates P(X >= 4) = 3.167e-5 for X ~ N(0,1) with ~76k simulations per
splitting run, where direct Monte Carlo at the same budget would see ~2 hits.
"""

import argparse
import sys

from scipy import stats

from prstl.smc import GaussianTailSimulator, naive_monte_carlo, run_ams


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target", type=float, default=4.0)
    parser.add_argument("--particles", type=int, default=1000)
    parser.add_argument("--repetitions", type=int, default=10)
    args = parser.parse_args()

    simulator = GaussianTailSimulator()
    truth = stats.norm.sf(args.target)
    print(f"analytic P(X >= {args.target}) = {truth:.4e}")

    for seed in range(args.repetitions):
        result = run_ams(simulator, args.target, particles=args.particles, seed=seed)
        budget = args.particles * (1 + 5 * result.level_count)
        print(f"seed {seed:2d}: splitting {result.probability:.4e} "
              f"(x{result.probability / truth:5.2f} of truth, "
              f"{result.level_count} levels, {budget:,} sims)")

    mc, se = naive_monte_carlo(simulator, args.target, 76_000, seed=0)
    print(f"direct MC at the same budget: {mc:.4e} (se {se:.1e})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
