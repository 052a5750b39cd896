from __future__ import annotations

import functools

import numpy as np

from prstl.cli import probability_record, robustness_record
from prstl.formula import Prob, parse_formula
from prstl.noise import NoiseModel, load_model, model_from_json
from prstl.robustness import eval_all
from prstl.signals import DENSE, DISCRETE, Trace
from prstl.smc import SmcConfig, StreamingMonitor

__all__ = ["Monitor", "MonitorClosedError", "MonitorUsageError"]


class MonitorClosedError(RuntimeError):
    """The handle was closed; no further operations are accepted."""


class MonitorUsageError(ValueError):
    """The requested operation does not apply to this monitor's formula."""


def _open_only(method):
    @functools.wraps(method)
    def wrapper(self, *args, **kwargs):
        if self._closed:
            raise MonitorClosedError("monitor handle is closed")
        return method(self, *args, **kwargs)
    return wrapper


class Monitor:
    """Engine-side monitor handle.

    Parameters mirror the CLI: ``confidence``, ``samples``, ``seed``,
    ``interval`` ("wilson" or "clopper_pearson"), ``semantics`` ("discrete"
    or "dense"), and, for probability-bounded formulas, a ``noise_model``
    (a fitted model object, a path to its JSON file, or the decoded dict).

    Formula and configuration errors surface at construction with the same
    messages the CLI prints (positioned parse errors included).
    """

    def __init__(self, formula: str, *, confidence: float = 0.95,
                 samples: int = 1000, seed: int = 0, interval: str = "wilson",
                 semantics: str = DISCRETE, noise_model=None, workers: int = 1):
        self._formula = parse_formula(formula)
        self._config = SmcConfig(samples=samples, confidence=confidence,
                                 interval=interval, seed=seed)
        if semantics not in (DISCRETE, DENSE):
            raise MonitorUsageError(f"unknown time semantics {semantics!r}")
        self._semantics = semantics
        self._closed = False
        self._records: list[dict] = []

        if isinstance(self._formula, Prob):
            model = self._coerce_model(noise_model)
            self._engine = StreamingMonitor(self._formula, model, self._config,
                                            semantics, workers=workers)
            self._trace = None
            self._variable = self._engine.variable
        else:
            if noise_model is not None:
                raise MonitorUsageError(
                    "a noise model only applies to probability-bounded formulas")
            self._engine = None
            self._trace = Trace(semantics=semantics)
            self._variable = None

    @staticmethod
    def _coerce_model(noise_model) -> NoiseModel:
        if noise_model is None:
            raise MonitorUsageError(
                "probability-bounded formulas need a noise model")
        if isinstance(noise_model, dict):
            return model_from_json(noise_model)
        if isinstance(noise_model, (str, bytes)) or hasattr(noise_model, "__fspath__"):
            return load_model(noise_model)
        return noise_model

    # ---- ingestion --------------------------------------------------------

    @_open_only
    def add_signal(self, variable: str, time: float, value: float) -> None:
        """Ingest one sample (one reading, for probabilistic monitors)."""
        if self._engine is not None:
            if variable != self._variable:
                raise MonitorUsageError(
                    f"this monitor lifts '{self._variable}', not '{variable}'")
            record = self._engine.feed(float(time), float(value))
            self._records.append(probability_record(record))
        else:
            self._trace.append(variable, float(time), float(value))

    @_open_only
    def add_signals(self, variable: str, times, values) -> None:
        """Batch ingestion; equivalent to adding each sample in order."""
        if self._engine is not None:
            times = np.asarray(times, dtype=np.float64)
            values = np.asarray(values, dtype=np.float64)
            if times.shape != values.shape or times.ndim != 1:
                raise MonitorUsageError("times and values must be 1-d and equal-length")
            for t, v in zip(times.tolist(), values.tolist()):
                self.add_signal(variable, t, v)
        else:
            self._trace.extend(variable, times, values)

    # ---- queries -----------------------------------------------------------

    @_open_only
    def robustness(self) -> list[dict]:
        """Per-timestamp robustness records (deterministic formulas only)."""
        if self._engine is not None:
            raise MonitorUsageError(
                "probability-bounded formulas report probability(); robustness "
                "applies to deterministic formulas")
        series = eval_all(self._formula, self._trace)
        return [robustness_record(t, rho, flag)
                for t, rho, flag in zip(series.times.tolist(),
                                        series.values.tolist(),
                                        series.inconclusive.tolist())]

    @_open_only
    def probability(self) -> dict:
        """Probability record for the latest reading (probabilistic monitors)."""
        if self._engine is None:
            raise MonitorUsageError(
                "deterministic formulas report robustness(); probability "
                "applies to P-bounded formulas")
        if not self._records:
            raise MonitorUsageError("no readings ingested yet")
        return dict(self._records[-1])

    @_open_only
    def history(self) -> list[dict]:
        """All probability records so far, one per ingested reading."""
        if self._engine is None:
            raise MonitorUsageError("history applies to P-bounded formulas")
        return [dict(record) for record in self._records]

    # ---- lifecycle -----------------------------------------------------------

    def close(self) -> None:
        self._closed = True

    def __enter__(self) -> "Monitor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
