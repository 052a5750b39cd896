"""Time-ordered multivariate signal storage with discrete/dense point queries.

A :class:`Trace` keeps one strictly time-ordered series per variable. The
discrete semantics answers queries only at stored timestamps; the dense
semantics interpolates piecewise-linearly between the bracketing samples and
never extrapolates. Registering a maximum temporal bound turns on sample
retention, which keeps memory proportional to the largest formula window
instead of the stream length.
"""

from __future__ import annotations

import math
from array import array
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Sample", "Trace", "TraceEnsemble", "TraceError",
    "OutOfOrderSample", "NonFiniteSample", "UnknownVariable", "QueryOutOfRange",
    "DISCRETE", "DENSE",
]

DISCRETE = "discrete"
DENSE = "dense"


class TraceError(ValueError):
    pass


class OutOfOrderSample(TraceError):
    pass


class NonFiniteSample(TraceError):
    pass


class UnknownVariable(TraceError):
    pass


class QueryOutOfRange(TraceError):
    pass


@dataclass(frozen=True)
class Sample:
    time: float
    value: float

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0.0:
            raise NonFiniteSample("sample time must be finite and non-negative")


class _Series:
    """One variable's samples. Physical compaction is amortized so appends
    stay O(1); the logical window (after retention trimming) is what the
    accessors expose."""

    __slots__ = ("times", "values", "head", "min_gap", "_cache")

    def __init__(self):
        self.times = array("d")
        self.values = array("d")
        self.head = 0
        self.min_gap = math.inf
        self._cache: tuple[np.ndarray, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.times) - self.head

    def last_time(self) -> float:
        return self.times[-1]

    def append(self, time: float, value: float) -> None:
        if len(self.times) > self.head:
            gap = time - self.times[-1]
            if gap < self.min_gap:
                self.min_gap = gap
        self.times.append(time)
        self.values.append(value)
        self._cache = None

    def trim_before(self, cutoff: float) -> None:
        head = self.head
        times = self.times
        n = len(times)
        while head < n and times[head] < cutoff:
            head += 1
        if head != self.head:
            self.head = head
            self._cache = None
        if self.head > 64 and self.head * 2 > len(times):
            del self.times[: self.head]
            del self.values[: self.head]
            self.head = 0
            self._cache = None

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None:
            t = np.frombuffer(self.times, dtype=np.float64)[self.head:].copy()
            v = np.frombuffer(self.values, dtype=np.float64)[self.head:].copy()
            t.setflags(write=False)
            v.setflags(write=False)
            self._cache = (t, v)
        return self._cache


class Trace:
    """Multivariate signal with a time horizon and a time semantics.

    semantics: ``"discrete"`` or ``"dense"``.
    horizon:   upper bound on sample times, or None for unbounded.
    """

    def __init__(self, semantics: str = DISCRETE, horizon: float | None = None):
        if semantics not in (DISCRETE, DENSE):
            raise TraceError(f"unknown time semantics {semantics!r}")
        if horizon is not None and (not math.isfinite(horizon) or horizon < 0.0):
            raise TraceError("horizon must be finite and non-negative, or None")
        self.semantics = semantics
        self.horizon = horizon
        self._series: dict[str, _Series] = {}
        self._bound: float | None = None

    # ---- ingestion -----------------------------------------------------

    def append(self, variable: str, time: float, value: float) -> "Trace":
        """Store one sample; timestamps must strictly increase per variable."""
        if not math.isfinite(value):
            raise NonFiniteSample(f"non-finite value for '{variable}' at t={time}")
        if not math.isfinite(time) or time < 0.0:
            raise NonFiniteSample("sample time must be finite and non-negative")
        if self.horizon is not None and time > self.horizon:
            raise OutOfOrderSample(f"sample time {time} exceeds the horizon {self.horizon}")
        series = self._series.get(variable)
        if series is None:
            series = self._series[variable] = _Series()
        elif len(series) > 0 and time <= series.last_time():
            raise OutOfOrderSample(
                f"t={time} does not advance past t={series.last_time()} for '{variable}'")
        series.append(time, value)
        if self._bound is not None:
            series.trim_before(time - self._bound)
        return self

    append_sample = append

    def extend(self, variable: str, times: Iterable[float], values: Iterable[float]) -> "Trace":
        """Bulk ingestion; equivalent to appending sample by sample."""
        t = np.asarray(list(times) if not isinstance(times, np.ndarray) else times,
                       dtype=np.float64)
        v = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                       dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise TraceError("times and values must be 1-d sequences of equal length")
        if t.size == 0:
            return self
        if not np.isfinite(v).all():
            raise NonFiniteSample(f"non-finite value in bulk ingestion for '{variable}'")
        if not np.isfinite(t).all() or t[0] < 0.0:
            raise NonFiniteSample("sample times must be finite and non-negative")
        if np.any(np.diff(t) <= 0.0):
            raise OutOfOrderSample(f"timestamps must strictly increase for '{variable}'")
        if self.horizon is not None and t[-1] > self.horizon:
            raise OutOfOrderSample(f"sample time {t[-1]} exceeds the horizon {self.horizon}")
        series = self._series.get(variable)
        if series is None:
            series = self._series[variable] = _Series()
        elif len(series) > 0 and t[0] <= series.last_time():
            raise OutOfOrderSample(
                f"t={t[0]} does not advance past t={series.last_time()} for '{variable}'")
        if len(series) > 0:
            gap = t[0] - series.last_time()
            if gap < series.min_gap:
                series.min_gap = gap
        if t.size > 1:
            series.min_gap = min(series.min_gap, float(np.min(np.diff(t))))
        series.times.extend(t.tolist())
        series.values.extend(v.tolist())
        series._cache = None
        if self._bound is not None:
            series.trim_before(t[-1] - self._bound)
        return self

    def register_bound(self, bound: float) -> None:
        """Opt into retention: drop samples older than (latest - bound)."""
        if not math.isfinite(bound) or bound < 0.0:
            raise TraceError("retention bound must be finite and non-negative")
        self._bound = bound
        for series in self._series.values():
            if len(series) > 0:
                series.trim_before(series.last_time() - bound)

    # ---- queries ---------------------------------------------------------

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self._series)

    def sample_count(self, variable: str) -> int:
        return len(self._get(variable))

    def _get(self, variable: str) -> _Series:
        series = self._series.get(variable)
        if series is None:
            raise UnknownVariable(f"unknown variable '{variable}'")
        return series

    def series(self, variable: str) -> tuple[np.ndarray, np.ndarray]:
        """(times, values) as read-only arrays."""
        return self._get(variable).arrays()

    def samples(self, variable: str) -> list[Sample]:
        t, v = self.series(variable)
        return [Sample(float(a), float(b)) for a, b in zip(t, v)]

    def value_at(self, variable: str, t: float) -> float:
        series = self._get(variable)
        times, values = series.arrays()
        if times.size == 0:
            raise QueryOutOfRange(f"variable '{variable}' has no samples")
        i = bisect_left(times, t)
        if i < times.size and times[i] == t:
            return float(values[i])
        if self.semantics == DISCRETE:
            raise QueryOutOfRange(f"no sample for '{variable}' at t={t} (discrete semantics)")
        if i == 0 or i == times.size:
            raise QueryOutOfRange(
                f"t={t} outside the stored range [{times[0]}, {times[-1]}] for '{variable}'")
        t1, t2 = times[i - 1], times[i]
        v1, v2 = values[i - 1], values[i]
        return float(v1 + (v2 - v1) * (t - t1) / (t2 - t1))

    def grid(self) -> np.ndarray:
        """Sorted union of all sample timestamps across variables."""
        if not self._series:
            return np.empty(0, dtype=np.float64)
        arrays = [s.arrays()[0] for s in self._series.values()]
        if len(arrays) == 1:
            return arrays[0]
        return np.unique(np.concatenate(arrays))

    def end_time(self) -> float:
        """Latest sample timestamp across all variables."""
        grid = self.grid()
        if grid.size == 0:
            raise TraceError("trace has no samples")
        return float(grid[-1])

    def copy(self) -> "Trace":
        dup = Trace(self.semantics, self.horizon)
        for name, series in self._series.items():
            t, v = series.arrays()
            dup.extend(name, t, v)
        if self._bound is not None:
            dup.register_bound(self._bound)
        return dup


class TraceEnsemble(Sequence[Trace]):
    """N traces drawn from one distribution, with paired timestamps."""

    def __init__(self, traces: Sequence[Trace]):
        if len(traces) < 1:
            raise TraceError("an ensemble needs at least one trace")
        first = traces[0]
        names = set(first.variables)
        for other in traces[1:]:
            if set(other.variables) != names:
                raise TraceError("ensemble members must share the same variable set")
            for name in names:
                if not np.array_equal(other.series(name)[0], first.series(name)[0]):
                    raise TraceError("ensemble members must share sample timestamps")
        self._traces = list(traces)

    def __len__(self) -> int:
        return len(self._traces)

    def __getitem__(self, i):
        return self._traces[i]

    @property
    def variables(self) -> tuple[str, ...]:
        return self._traces[0].variables
