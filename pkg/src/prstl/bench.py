"""Micro-benchmarks for the streaming evaluator on synthetic signals.

The formula presets exercise single windows, nested windows, and Boolean
combinations over unit-spaced signals whose values cross the predicate
thresholds irregularly, so the deques see realistic churn.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .formula import (Always, Eventually, Formula, Historically, Interval, Once,
                      Since, Until, free_variables, parse_formula)
from .robustness import eval_all_with_stats
from .signals import DISCRETE, Trace

__all__ = ["PRESETS", "BenchResult", "make_bench_trace", "scale_intervals", "run_bench"]

PRESETS: dict[str, str] = {
    "phi1": "always[0,50](x > 10)",
    "phi2": "eventually[0,50](x > 10)",
    "phi3": "always[0,100](eventually[0,10](p > 0))",
    "phi4": "(p > 0) implies (eventually[0,20](q > 0))",
    "phi5": "always[0,200]((p > 0) and (eventually[5,15](q > 0)))",
}


@dataclass(frozen=True)
class BenchResult:
    formula: str
    samples: int
    repeats: int
    times_seconds: tuple[float, ...]
    mean_seconds: float
    std_seconds: float
    throughput_sps: float
    deque_peaks: tuple[int, ...]
    window_sample_bounds: tuple[int, ...]


def make_bench_trace(variables, n: int, seed: int = 0, dt: float = 1.0) -> Trace:
    """Unit-grid synthetic trace; values oscillate around the preset thresholds."""
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 128) - 1)))
    t = np.arange(n, dtype=np.float64) * dt
    trace = Trace(semantics=DISCRETE)
    for i, name in enumerate(variables):
        base = 10.0 if name == "x" else 0.0
        phase = 0.7 * i
        values = base + 2.0 * np.sin(0.01 * t + phase) + rng.uniform(-2.0, 2.0, n)
        trace.extend(name, t, values)
    return trace


def scale_intervals(f: Formula, factor: float) -> Formula:
    """Rebuild the formula with every temporal bound scaled by ``factor``."""
    def scale(iv: Interval) -> Interval:
        upper = None if iv.upper is None else iv.upper * factor
        return Interval(iv.lower * factor, upper)

    if isinstance(f, (Always, Eventually, Historically, Once)):
        return type(f)(scale(f.interval), scale_intervals(f.child, factor))
    if isinstance(f, (Until, Since)):
        return type(f)(scale(f.interval), scale_intervals(f.left, factor),
                       scale_intervals(f.right, factor))
    if hasattr(f, "child"):
        return type(f)(**{**f.__dict__, "child": scale_intervals(f.child, factor)})
    if hasattr(f, "left"):
        return type(f)(**{**f.__dict__,
                          "left": scale_intervals(f.left, factor),
                          "right": scale_intervals(f.right, factor)})
    return f


def _window_sample_bounds(f: Formula, dt: float) -> list[int]:
    """Sample count each deque-backed window can cover on a dt grid.

    Children first, matching the bottom-up kernel invocation order, so the
    list aligns index-for-index with the measured deque peaks. until/since
    evaluate with running-infimum sweeps, not deques, and are not counted.
    """
    out: list[int] = []
    for attr in ("child", "left", "right"):
        sub = getattr(f, attr, None)
        if sub is not None and not isinstance(sub, (float, int, str, Interval)):
            out.extend(_window_sample_bounds(sub, dt))
    if isinstance(f, (Always, Eventually, Historically, Once)):
        iv = f.interval
        if iv.upper is None:
            out.append(-1)  # unbounded
        else:
            out.append(int(math.floor((iv.upper - iv.lower) / dt)) + 1)
    return out


def run_bench(formula_text: str, n: int, repeats: int, seed: int = 0,
              window_scale: float = 1.0, dt: float = 1.0) -> BenchResult:
    """Time ``eval_all`` on a synthetic n-sample trace.

    One untimed warmup run precedes measurement so JIT compilation does not
    pollute the first repeat. Trace construction is excluded from the timing;
    the measured quantity is evaluation alone.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    formula = parse_formula(formula_text)
    if window_scale != 1.0:
        formula = scale_intervals(formula, window_scale)
    trace = make_bench_trace(sorted(free_variables(formula)), n, seed=seed, dt=dt)

    _, peaks = eval_all_with_stats(formula, trace)  # warmup, also reports peaks
    times: list[float] = []
    for _ in range(repeats):
        begin = time.perf_counter()
        eval_all_with_stats(formula, trace)
        times.append(time.perf_counter() - begin)

    mean = float(np.mean(times))
    std = float(np.std(times))
    return BenchResult(
        formula=formula_text if window_scale == 1.0 else f"{formula_text} (bounds x{window_scale})",
        samples=n, repeats=repeats, times_seconds=tuple(times),
        mean_seconds=mean, std_seconds=std,
        throughput_sps=n / mean if mean > 0 else math.inf,
        deque_peaks=peaks,
        window_sample_bounds=tuple(_window_sample_bounds(formula, dt)),
    )
