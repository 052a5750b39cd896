"""Runtime verification for Probabilistic Signal Temporal Logic.

Parse PrSTL specifications, evaluate quantitative robustness over timestamped
signals with streaming sliding-window algorithms, lift deterministic sensor
readings into stochastic trajectory ensembles through learned noise models,
and estimate satisfaction probabilities with rigorous confidence intervals,
sequential hypothesis tests, and rare-event splitting.
"""

__version__ = "0.1.0"

from .formula import (
    Comparison, Interval, Formula, FormulaError, ParseError, IntervalError,
    ProbabilityError, parse_formula, format_formula, eval_expression,
    free_variables, formula_to_json, formula_from_json,
)
from .signals import Sample, Trace, TraceEnsemble, TraceError, DISCRETE, DENSE
from .robustness import (
    MonotonicDeque, RobustnessSeries, sliding_extremum, eval_robustness, eval_all,
)
from .noise import (
    InteractionMode, NoiseModel, compute_residuals, fit_model,
    sample_trajectories, save_model, load_model,
)
from .stats import (
    required_samples, wilson_interval, clopper_pearson_interval, normal_quantile,
)
from .smc import (
    SmcConfig, ProbabilityEstimate, estimate_probability, SprtConfig, SprtVerdict,
    run_sprt, AmsResult, run_ams, GaussianTailSimulator, StreamingMonitor,
    monitor_stream, Verdict,
)

__all__ = [name for name in dir() if not name.startswith("_")]
