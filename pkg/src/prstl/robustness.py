"""Quantitative robustness evaluation over traces.

Predicates score signed distance to their threshold; Boolean connectives
propagate min/max; temporal operators aggregate over sliding windows with
monotonic deques (strict back-pop, ties retained), giving O(n) evaluation per
nesting level and memory bounded by the window sample count.

End-of-trace policy: windows are clipped to the available samples. A window
with no samples evaluates to the aggregation identity (+inf for an infimum,
-inf for a supremum), and every timestamp whose full window extends past the
last observed sample carries an ``inconclusive`` flag, since data that has
not arrived yet could still change the value. Past windows that reach before
the first sample are clipped silently: no future data can fill them in.

Dense-time semantics evaluates on the sample grid plus the window boundary
points, whose values come from piecewise-linear interpolation of the child
robustness signal; this grid is exact for predicates affine in one variable
and a documented approximation otherwise. ``until``/``since`` witnesses are
taken on the sample grid under either semantics.
"""

from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from . import _kernels
from .formula import (
    And, Always, Bottom, BinOp, Comparison, Const, Eventually, Formula,
    Historically, Implies, Next, Not, NumericDomainError, Once, Or, Predicate,
    Prob, Since, Top, Until, Var,
)
from .signals import DENSE, DISCRETE, QueryOutOfRange, Trace, TraceError

__all__ = [
    "MonotonicDeque", "sliding_extremum", "RobustnessSeries",
    "eval_robustness", "eval_all", "RobustnessError", "ProbNodeError",
    "HorizonError",
]

POS_INF = math.inf
NEG_INF = -math.inf


class RobustnessError(ValueError):
    pass


class ProbNodeError(RobustnessError):
    """A probability node reached the deterministic evaluator."""


class HorizonError(RobustnessError):
    """A window extended past the trace horizon under the strict policy."""


# --------------------------------------------------------------------------
# Streaming sliding-window extrema
# --------------------------------------------------------------------------

class MonotonicDeque:
    """Streaming extremum of a trailing window [t - width, t].

    The deque keeps (timestamp, value) candidates with timestamps strictly
    increasing and values monotone front to back. Back-pops are strict
    (min mode discards only values strictly greater than the arrival), so
    tied values stay; front-pops discard entries strictly older than the
    window. ``push`` is amortized O(1).
    """

    def __init__(self, width: float, mode: str = "min"):
        if not width > 0.0:
            raise RobustnessError("window width must be positive")
        if mode not in ("min", "max"):
            raise RobustnessError(f"unknown deque mode {mode!r}")
        self.width = width
        self.mode = mode
        self._entries: deque[tuple[float, float]] = deque()
        self._last_time: float | None = None

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[tuple[float, float]]:
        return list(self._entries)

    def push(self, time: float, value: float) -> float:
        """Admit one sample and return the current window extremum."""
        if self._last_time is not None and time <= self._last_time:
            raise RobustnessError(
                f"timestamps must strictly increase (got {time} after {self._last_time})")
        self._last_time = time
        entries = self._entries
        if self.mode == "min":
            while entries and entries[-1][1] > value:
                entries.pop()
        else:
            while entries and entries[-1][1] < value:
                entries.pop()
        entries.append((time, value))
        cutoff = time - self.width
        while entries[0][0] < cutoff:
            entries.popleft()
        return entries[0][1]

    @property
    def front(self) -> float:
        if not self._entries:
            raise RobustnessError("deque is empty")
        return self._entries[0][1]


def sliding_extremum(stream: Iterable[tuple[float, float]], width: float,
                     mode: str = "min") -> list[float]:
    """Per-step extrema of the trailing window [t_k - width, t_k].

    Equivalent to the exhaustive filter min/max{v_i : t_k - width <= t_i <= t_k}
    at every step, computed in amortized O(1) per sample.
    """
    dq = MonotonicDeque(width, mode)
    return [dq.push(t, v) for t, v in stream]


# --------------------------------------------------------------------------
# Buffer arena (keeps repeated large evaluations allocation-free)
# --------------------------------------------------------------------------

class _Arena:
    """Free lists of reusable ndarrays, keyed by (dtype, size).

    Node result buffers have stack-like lifetimes during a bottom-up
    evaluation (a child's buffer dies once its parent consumed it), so the
    evaluator releases them eagerly and sweeps any stragglers when it
    finishes; buffers handed to callers are disowned first and never recycled.
    """

    _MAX_FREE = 8

    def __init__(self):
        self._free: dict[tuple[str, int], list[np.ndarray]] = {}
        self._owned: dict[int, np.ndarray] = {}

    def acquire(self, size: int, dtype=np.float64) -> np.ndarray:
        key = (np.dtype(dtype).str, size)
        free = self._free.get(key)
        arr = free.pop() if free else np.empty(size, dtype)
        self._owned[id(arr)] = arr
        return arr

    def release(self, arr: np.ndarray) -> None:
        owned = self._owned.pop(id(arr), None)
        if owned is None:
            return
        key = (owned.dtype.str, owned.size)
        free = self._free.setdefault(key, [])
        if len(free) < self._MAX_FREE:
            free.append(owned)

    def disown(self, arr: np.ndarray) -> None:
        self._owned.pop(id(arr), None)

    def sweep(self) -> None:
        for arr in list(self._owned.values()):
            self.release(arr)


_tls = threading.local()


def _arena() -> _Arena:
    arena = getattr(_tls, "arena", None)
    if arena is None:
        arena = _tls.arena = _Arena()
    return arena


# --------------------------------------------------------------------------
# Whole-trace evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessSeries:
    """Per-timestamp robustness with inconclusive-tail flags."""
    times: np.ndarray
    values: np.ndarray
    inconclusive: np.ndarray

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.times.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return self.times.size


def _interp_rho(query: np.ndarray, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation of a robustness signal.

    Robustness values may be +/-inf (constant formulas, empty windows). A
    segment with one infinite endpoint evaluates to that infinity strictly
    inside the segment; opposite infinities fall back to the nearer endpoint.
    Exact at grid points. Never yields NaN.
    """
    if np.isfinite(values).all():
        return np.interp(query, times, values)
    out = np.empty(query.size, dtype=np.float64)
    for k in range(query.size):
        q = query[k]
        i = int(np.searchsorted(times, q))
        if i < times.size and times[i] == q:
            out[k] = values[i]
            continue
        v1, v2 = values[i - 1], values[i]
        if math.isfinite(v1) and math.isfinite(v2):
            t1, t2 = times[i - 1], times[i]
            out[k] = v1 + (v2 - v1) * (q - t1) / (t2 - t1)
        elif math.isinf(v1) and math.isinf(v2) and v1 != v2:
            mid = 0.5 * (times[i - 1] + times[i])
            out[k] = v1 if q <= mid else v2
        else:
            out[k] = v1 if math.isinf(v1) else v2
    return out


class _GridEvaluator:
    def __init__(self, trace, grid: np.ndarray, strict_horizon: bool):
        self.trace = trace
        self.grid = grid
        self.strict = strict_horizon
        self.semantics = trace.semantics
        self.deque_peaks: list[int] = []
        self.arena = _arena()
        self._zero_flags = np.zeros(grid.size, dtype=bool)
        self._zero_flags.setflags(write=False)
        self._env_cache: dict[str, np.ndarray] = {}

    def run(self, node: Formula) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate and transfer ownership of the results to the caller."""
        try:
            values, flags = self.eval(node)
            self.arena.disown(values)
            self.arena.disown(flags)
            return values, flags
        finally:
            self.arena.sweep()

    # -- predicate environments ---------------------------------------

    def _variable_values(self, name: str) -> np.ndarray:
        cached = self._env_cache.get(name)
        if cached is not None:
            return cached
        times, values = self.trace.series(name)
        grid = self.grid
        if times.size == grid.size and (times is grid or np.array_equal(times, grid)):
            out = values
        elif self.semantics == DISCRETE:
            pos = np.searchsorted(times, grid)
            ok = (pos < times.size)
            ok &= times[np.minimum(pos, times.size - 1)] == grid
            if not ok.all():
                missing = grid[~ok][0]
                raise QueryOutOfRange(
                    f"variable '{name}' has no sample at t={missing} (discrete semantics)")
            out = values[pos]
        else:
            if grid[0] < times[0] or grid[-1] > times[-1]:
                raise QueryOutOfRange(
                    f"grid extends outside the stored range of '{name}'")
            out = np.interp(grid, times, values)
        self._env_cache[name] = out
        return out

    def _expr(self, e):
        """Expression value over the grid: scalar float or ndarray."""
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Var):
            return self._variable_values(e.name)
        if isinstance(e, BinOp):
            left = self._expr(e.left)
            right = self._expr(e.right)
            if e.op == "+":
                out = left + right
            elif e.op == "-":
                out = left - right
            elif e.op == "*":
                out = left * right
            else:
                if np.any(np.asarray(right) == 0.0):
                    raise NumericDomainError("division by zero in predicate expression")
                out = left / right
        else:  # Call
            args = [self._expr(a) for a in e.args]
            if e.fn == "log":
                if np.any(np.asarray(args[0]) <= 0.0):
                    raise NumericDomainError("log of a non-positive argument")
                out = np.log(args[0])
            elif e.fn == "sqrt":
                if np.any(np.asarray(args[0]) < 0.0):
                    raise NumericDomainError("sqrt of a negative argument")
                out = np.sqrt(args[0])
            elif e.fn == "exp":
                out = np.exp(args[0])
            elif e.fn == "sin":
                out = np.sin(args[0])
            elif e.fn == "cos":
                out = np.cos(args[0])
            elif e.fn == "abs":
                out = np.abs(args[0])
            elif e.fn == "min":
                out = np.minimum(args[0], args[1])
            else:
                out = np.maximum(args[0], args[1])
        if not np.all(np.isfinite(out)):
            raise NumericDomainError("non-finite value in predicate expression")
        return out

    def _predicate(self, node: Predicate) -> np.ndarray:
        with np.errstate(all="ignore"):  # explicit domain checks raise instead
            left = self._expr(node.left)
            right = self._expr(node.right)
        cmp = node.comparison
        out = self.arena.acquire(self.grid.size)
        if np.isscalar(left) and np.isscalar(right):
            if cmp in (Comparison.LT, Comparison.LE):
                margin = right - left
            elif cmp in (Comparison.GT, Comparison.GE):
                margin = left - right
            elif cmp is Comparison.EQ:
                margin = -abs(left - right)
            else:
                margin = abs(left - right)
            out.fill(margin)
            return out
        if cmp in (Comparison.LT, Comparison.LE):
            np.subtract(right, left, out=out)
        elif cmp in (Comparison.GT, Comparison.GE):
            np.subtract(left, right, out=out)
        else:
            np.subtract(left, right, out=out)
            np.abs(out, out=out)
            if cmp is Comparison.EQ:
                np.negative(out, out=out)
        return out

    # -- flag helpers ------------------------------------------------------

    def _or_flags(self, f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
        zf = self._zero_flags
        if f1 is zf:
            return f2
        if f2 is zf:
            return f1
        out = self.arena.acquire(self.grid.size, bool)
        np.logical_or(f1, f2, out=out)
        self.arena.release(f1)
        self.arena.release(f2)
        return out

    def _truncation_flags(self, upper: float | None) -> np.ndarray:
        """Flags for windows whose upper edge passes the last observed sample."""
        grid = self.grid
        end = grid[-1]
        if upper is None:
            first_bad = 0
        else:
            # grid[i] + upper > end  <=>  grid[i] > end - upper
            first_bad = int(np.searchsorted(grid, end - upper, side="right"))
        if first_bad >= grid.size:
            return self._zero_flags
        if self.strict:
            raise HorizonError("window extends past the trace horizon")
        out = self.arena.acquire(grid.size, bool)
        out[:first_bad] = False
        out[first_bad:] = True
        return out

    def _child_window_flags(self, child_flags: np.ndarray, lo: float,
                            hi: float) -> np.ndarray:
        if not child_flags.any():
            if child_flags is not self._zero_flags:
                self.arena.release(child_flags)
            return self._zero_flags
        out = self.arena.acquire(self.grid.size, bool)
        _kernels.window_any(self.grid, child_flags, lo, hi, out)
        if child_flags is not self._zero_flags:
            self.arena.release(child_flags)
        return out

    # -- temporal helpers ------------------------------------------------

    def _window(self, child_vals, child_flags, lo: float, hi: float,
                use_min: bool, future: bool, upper: float | None):
        grid = self.grid
        n = grid.size
        out = self.arena.acquire(n)
        idx = self.arena.acquire(n, np.int64)
        empty = self.arena.acquire(n, bool)
        peak = _kernels.window_extremum(grid, child_vals, lo, hi, use_min, idx, out, empty)
        self.deque_peaks.append(int(peak))
        self.arena.release(idx)
        self.arena.release(empty)
        if self.semantics == DENSE and n > 0:
            intersects = (grid + hi >= grid[0]) & (grid + lo <= grid[-1])
            q_lo = np.clip(grid + lo, grid[0], grid[-1])
            q_hi = np.clip(grid + hi, grid[0], grid[-1])
            b_lo = _interp_rho(q_lo, grid, child_vals)
            b_hi = _interp_rho(q_hi, grid, child_vals)
            combine = np.minimum if use_min else np.maximum
            refined = combine(out, combine(b_lo, b_hi))
            identity = POS_INF if use_min else NEG_INF
            self.arena.release(out)
            out = np.where(intersects, refined, identity)
        self.arena.release(child_vals)
        flags = self._truncation_flags(upper) if future else self._zero_flags
        return out, self._or_flags(flags, self._child_window_flags(child_flags, lo, hi))

    # -- node dispatch ---------------------------------------------------

    def eval(self, node: Formula) -> tuple[np.ndarray, np.ndarray]:
        n = self.grid.size
        if isinstance(node, Top):
            out = self.arena.acquire(n)
            out.fill(POS_INF)
            return out, self._zero_flags
        if isinstance(node, Bottom):
            out = self.arena.acquire(n)
            out.fill(NEG_INF)
            return out, self._zero_flags
        if isinstance(node, Predicate):
            return self._predicate(node), self._zero_flags
        if isinstance(node, Not):
            vals, flags = self.eval(node.child)
            out = self.arena.acquire(n)
            np.negative(vals, out=out)
            self.arena.release(vals)
            return out, flags
        if isinstance(node, (And, Or, Implies)):
            v1, f1 = self.eval(node.left)
            v2, f2 = self.eval(node.right)
            out = self.arena.acquire(n)
            if isinstance(node, And):
                np.minimum(v1, v2, out=out)
            elif isinstance(node, Or):
                np.maximum(v1, v2, out=out)
            else:
                np.negative(v1, out=out)
                np.maximum(out, v2, out=out)
            self.arena.release(v1)
            self.arena.release(v2)
            return out, self._or_flags(f1, f2)
        if isinstance(node, (Always, Eventually)):
            vals, flags = self.eval(node.child)
            iv = node.interval
            hi = POS_INF if iv.upper is None else iv.upper
            return self._window(vals, flags, iv.lower, hi,
                                use_min=isinstance(node, Always),
                                future=True, upper=iv.upper)
        if isinstance(node, (Historically, Once)):
            vals, flags = self.eval(node.child)
            iv = node.interval
            lo = NEG_INF if iv.upper is None else -iv.upper
            return self._window(vals, flags, lo, -iv.lower,
                                use_min=isinstance(node, Historically),
                                future=False, upper=None)
        if isinstance(node, (Until, Since)):
            v1, f1 = self.eval(node.left)
            v2, f2 = self.eval(node.right)
            iv = node.interval
            hi = POS_INF if iv.upper is None else iv.upper
            out = self.arena.acquire(n)
            if isinstance(node, Until):
                _kernels.until_sweep(self.grid, v1, v2, iv.lower, hi, out)
                own = self._truncation_flags(iv.upper)
                span_lo, span_hi = 0.0, hi
            else:
                _kernels.since_sweep(self.grid, v1, v2, iv.lower, hi, out)
                own = self._zero_flags
                span_lo, span_hi = -hi, 0.0
            self.arena.release(v1)
            self.arena.release(v2)
            child = self._or_flags(f1, f2)
            return out, self._or_flags(own, self._child_window_flags(child, span_lo, span_hi))
        if isinstance(node, Next):
            vals, flags = self.eval(node.child)
            out = self.arena.acquire(n)
            out[:-1] = vals[1:]
            out[-1] = NEG_INF
            self.arena.release(vals)
            nf = self.arena.acquire(n, bool)
            nf[:-1] = flags[1:]
            nf[-1] = True
            if flags is not self._zero_flags:
                self.arena.release(flags)
            return out, nf
        if isinstance(node, Prob):
            raise ProbNodeError(
                "probability nodes are resolved by the statistical layer, "
                "not the deterministic robustness evaluator")
        raise TypeError(f"not a formula node: {node!r}")


def _prepare_grid(formula: Formula, trace) -> np.ndarray:
    """Union of sample timestamps of the variables the formula references.

    Variables the formula never reads contribute no evaluation points, so a
    trace may carry unrelated series on their own grids. Variable-free
    formulas fall back to the whole-trace grid.
    """
    from .formula import free_variables

    names = free_variables(formula)
    if not names:
        grid = trace.grid()
    else:
        arrays = [trace.series(name)[0] for name in sorted(names)]
        grid = arrays[0] if len(arrays) == 1 else np.unique(np.concatenate(arrays))
    if grid.size == 0:
        raise TraceError("cannot evaluate over an empty trace")
    return grid


def eval_all(formula: Formula, trace: Trace,
             strict_horizon: bool = False) -> RobustnessSeries:
    """Robustness at every sample timestamp, bottom-up with one sliding
    window pass per temporal nesting level."""
    series, _ = eval_all_with_stats(formula, trace, strict_horizon)
    return series


def eval_all_with_stats(formula: Formula, trace: Trace,
                        strict_horizon: bool = False):
    """As eval_all, also reporting per-window-pass peak deque occupancies
    (for bounded-memory checks)."""
    grid = _prepare_grid(formula, trace)
    ev = _GridEvaluator(trace, grid, strict_horizon)
    values, flags = ev.run(formula)
    series = RobustnessSeries(times=grid, values=values, inconclusive=flags)
    return series, tuple(ev.deque_peaks)


def eval_robustness(formula: Formula, trace: Trace, t: float,
                    strict_horizon: bool = False) -> float:
    """Robustness of ``formula`` on ``trace`` at time ``t``.

    Discrete semantics requires ``t`` to be a sample timestamp. Dense
    semantics accepts any time inside the sampled range; the evaluation grid
    is augmented with ``t``.
    """
    grid = _prepare_grid(formula, trace)
    idx = int(np.searchsorted(grid, t))
    on_grid = idx < grid.size and grid[idx] == t
    if not on_grid:
        if trace.semantics == DISCRETE:
            raise QueryOutOfRange(f"t={t} is not a sample timestamp (discrete semantics)")
        if t < grid[0] or t > grid[-1]:
            raise QueryOutOfRange(f"t={t} outside the sampled range")
        grid = np.insert(grid, idx, t)
    ev = _GridEvaluator(trace, grid, strict_horizon)
    values, _ = ev.run(formula)
    return float(values[idx])
