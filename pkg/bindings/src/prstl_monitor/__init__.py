"""Scripting facade over the prstl engine.

A :class:`Monitor` wraps one specification plus its evaluation
configuration. Deterministic formulas accumulate a trace and report
per-timestamp robustness records; probability-bounded formulas lift each
reading through a noise model and report probability records. Records carry
exactly the fields of the engine CLI's JSON lines, and for a fixed seed the
values are identical to a CLI run over the same inputs.

``add_signals`` ingests arrays in one call; crossing the facade boundary per
sample is the slow way to feed 10^5 samples.
"""

from .monitor import Monitor, MonitorClosedError, MonitorUsageError

__all__ = ["Monitor", "MonitorClosedError", "MonitorUsageError"]

__version__ = "0.1.0"
