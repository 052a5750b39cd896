"""Statistical model checking over trajectory ensembles.

Satisfaction is the strict event rho > 0. Point estimates carry Wilson or
Clopper-Pearson intervals, verdicts are three-valued (satisfied / violated /
inconclusive) by comparing the whole interval against the probability bound,
sequential decisions use Wald's SPRT, and rare-event probabilities come from
adaptive multilevel splitting with quantile-placed levels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Protocol

import numpy as np

from .formula import Comparison, Formula, Prob, contains_prob, free_variables, parse_formula
from .noise import NoiseModel, derive_seed, sample_trajectories
from .robustness import _GridEvaluator
from .signals import DISCRETE, DENSE, TraceEnsemble, TraceError
from .stats import clopper_pearson_interval, wilson_interval

__all__ = [
    "SmcError", "SmcConfig", "ProbabilityEstimate", "estimate_probability",
    "evaluate_ensemble",
    "SprtConfig", "SprtVerdict", "run_sprt",
    "AmsError", "DegenerateLevelError", "AmsResult", "run_ams",
    "GaussianTailSimulator", "naive_monte_carlo",
    "Verdict", "decide_verdict", "MonitorRecord", "StreamingMonitor",
    "monitor_stream",
]

WILSON = "wilson"
CLOPPER_PEARSON = "clopper_pearson"


class SmcError(ValueError):
    pass


@dataclass(frozen=True)
class SmcConfig:
    samples: int = 1000
    confidence: float = 0.95
    interval: str = WILSON
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise SmcError("sample count must be at least 1")
        if not 0.0 < self.confidence < 1.0:
            raise SmcError("confidence level must lie in (0, 1)")
        if self.interval not in (WILSON, CLOPPER_PEARSON):
            raise SmcError(f"unknown interval method {self.interval!r}")


@dataclass(frozen=True)
class ProbabilityEstimate:
    estimate: float
    lower: float
    upper: float
    confidence: float
    samples: int
    successes: int

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.estimate <= self.upper <= 1.0:
            raise SmcError("estimate must be nested inside its interval within [0, 1]")


def estimate_probability(robustness_values, config: SmcConfig) -> ProbabilityEstimate:
    """Empirical satisfaction probability of the strict event rho > 0."""
    values = np.asarray(robustness_values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise SmcError("need at least one robustness value")
    if np.isnan(values).any():
        raise SmcError("robustness values must not be NaN")
    n = values.size
    successes = int(np.count_nonzero(values > 0.0))
    if config.interval == WILSON:
        lower, upper = wilson_interval(successes, n, config.confidence)
    else:
        lower, upper = clopper_pearson_interval(successes, n, config.confidence)
    return ProbabilityEstimate(successes / n, lower, upper,
                               config.confidence, n, successes)


def evaluate_ensemble(formula: Formula, ensemble: TraceEnsemble, t: float = 0.0) -> np.ndarray:
    """Robustness of a prob-free formula at time t for every ensemble member."""
    from .robustness import eval_robustness

    return np.array([eval_robustness(formula, trace, t) for trace in ensemble])


# --------------------------------------------------------------------------
# Wald's sequential probability ratio test
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SprtConfig:
    p0: float
    p1: float
    alpha: float = 0.05
    beta: float = 0.05
    max_samples: int = 1_000_000

    def __post_init__(self):
        if not 0.0 < self.p0 < self.p1 < 1.0:
            raise SmcError("thresholds must satisfy 0 < p0 < p1 < 1")
        if not (0.0 < self.alpha < 0.5 and 0.0 < self.beta < 0.5):
            raise SmcError("error bounds must lie in (0, 0.5)")
        if self.max_samples < 1:
            raise SmcError("max_samples must be at least 1")


@dataclass(frozen=True)
class SprtVerdict:
    outcome: str  # "accept_H0" | "accept_H1" | "undecided"
    samples: int
    log_likelihood_ratio: float


def run_sprt(observations: Iterable[bool], config: SprtConfig) -> SprtVerdict:
    """Sequentially test H0: p <= p0 against H1: p >= p1 on Bernoulli outcomes.

    The log-likelihood ratio gains log(p1/p0) per success and
    log((1-p1)/(1-p0)) per failure; H1 is accepted at log((1-beta)/alpha),
    H0 at log(beta/(1-alpha)). Exhausting max_samples leaves the test
    undecided.
    """
    gain_success = math.log(config.p1 / config.p0)
    gain_failure = math.log((1.0 - config.p1) / (1.0 - config.p0))
    accept_h1_at = math.log((1.0 - config.beta) / config.alpha)
    accept_h0_at = math.log(config.beta / (1.0 - config.alpha))

    llr = 0.0
    n = 0
    for outcome in observations:
        n += 1
        llr += gain_success if outcome else gain_failure
        if llr >= accept_h1_at:
            return SprtVerdict("accept_H1", n, llr)
        if llr <= accept_h0_at:
            return SprtVerdict("accept_H0", n, llr)
        if n >= config.max_samples:
            break
    return SprtVerdict("undecided", n, llr)


# --------------------------------------------------------------------------
# Adaptive multilevel splitting
# --------------------------------------------------------------------------

class AmsError(SmcError):
    pass


class DegenerateLevelError(AmsError):
    pass


class AmsSimulator(Protocol):
    """Vectorized trajectory source for splitting.

    ``sample`` draws fresh states from the base law, ``score`` maps states to
    importance scores, and ``mutate`` proposes moves from a Markov kernel
    that leaves the base law invariant (proposals falling below the current
    level are rejected by the splitting loop, which restricts the kernel to
    the level set).
    """

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray: ...
    def score(self, states: np.ndarray) -> np.ndarray: ...
    def mutate(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


class GaussianTailSimulator:
    """Reference simulator: states are standard normal scores, mutated by an
    autoregressive kernel that preserves N(0, 1)."""

    def __init__(self, correlation: float = 0.8):
        if not 0.0 < correlation < 1.0:
            raise AmsError("correlation must lie in (0, 1)")
        self.correlation = correlation
        self._noise_scale = math.sqrt(1.0 - correlation * correlation)

    def sample(self, rng, count):
        return rng.standard_normal(count)

    def score(self, states):
        return states

    def mutate(self, states, rng):
        return self.correlation * states + self._noise_scale * rng.standard_normal(states.size)


@dataclass(frozen=True)
class AmsResult:
    probability: float
    levels: tuple[float, ...]
    level_count: int
    particles: int
    capped: bool = False

    def __post_init__(self):
        if not 0.0 < self.probability <= 1.0:
            raise AmsError("splitting estimate must lie in (0, 1]")
        if self.level_count < 1:
            raise AmsError("splitting uses at least one level")


def run_ams(simulator: AmsSimulator, target: float, *, particles: int = 1000,
            survivor_fraction: float = 0.5, seed: int = 0,
            max_levels: int = 100, mutation_sweeps: int = 5) -> AmsResult:
    """Estimate P(score >= target) by quantile-placed multilevel splitting.

    Each round places the next level at the empirical (1 - survivor_fraction)
    quantile of the particle scores, multiplies the running estimate by the
    survival fraction, and rebuilds the population from clones of survivors
    decorrelated by rejection-mutation sweeps. Terminates when the level
    reaches the target (or ``max_levels`` is hit, which flags the partial
    estimate as capped).
    """
    if particles < 10:
        raise AmsError("splitting needs at least 10 particles")
    if not 0.0 < survivor_fraction < 1.0:
        raise AmsError("survivor fraction must lie in (0, 1)")
    if not math.isfinite(target):
        raise AmsError("target threshold must be finite")
    if max_levels < 1 or mutation_sweeps < 0:
        raise AmsError("invalid level cap or sweep count")

    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 128) - 1)))
    states = np.asarray(simulator.sample(rng, particles))
    scores = np.asarray(simulator.score(states), dtype=np.float64)
    if scores.shape != (particles,):
        raise AmsError("simulator must produce one score per particle")

    keep = max(1, int(round(particles * survivor_fraction)))
    estimate = 1.0
    levels: list[float] = []

    for _ in range(max_levels):
        order = np.sort(scores)
        level = float(order[particles - keep])
        if level >= target:
            fraction = float(np.count_nonzero(scores >= target)) / particles
            levels.append(target)
            return AmsResult(estimate * fraction, tuple(levels), len(levels), particles)
        if levels and level <= levels[-1]:
            raise DegenerateLevelError(
                f"level stalled at {level}; the target score {target} appears unreachable")
        fraction = float(np.count_nonzero(scores >= level)) / particles
        if fraction >= 1.0:
            raise DegenerateLevelError("no particles fall below the proposed level")
        estimate *= fraction
        levels.append(level)

        survivors = states[scores >= level]
        reps = particles // survivors.size
        extra = particles - reps * survivors.size
        clones = [np.tile(survivors, reps)] if reps else []
        if extra:
            clones.append(survivors[rng.choice(survivors.size, extra, replace=False)])
        states = np.concatenate(clones)
        scores = np.asarray(simulator.score(states), dtype=np.float64)

        for _ in range(mutation_sweeps):
            proposals = np.asarray(simulator.mutate(states, rng))
            new_scores = np.asarray(simulator.score(proposals), dtype=np.float64)
            accept = new_scores >= level
            states = np.where(accept, proposals, states)
            scores = np.where(accept, new_scores, scores)

    return AmsResult(estimate, tuple(levels), len(levels), particles, capped=True)


def naive_monte_carlo(simulator: AmsSimulator, target: float, count: int,
                      seed: int = 0) -> tuple[float, float]:
    """Direct estimate of P(score >= target) with its standard error."""
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 128) - 1)))
    scores = np.asarray(simulator.score(simulator.sample(rng, count)), dtype=np.float64)
    p = float(np.count_nonzero(scores >= target)) / count
    se = math.sqrt(max(p * (1.0 - p), 1.0 / count) / count)
    return p, se


# --------------------------------------------------------------------------
# Streaming monitor (per-reading lifting, evaluation, aggregation)
# --------------------------------------------------------------------------

class Verdict:
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


def decide_verdict(estimate: ProbabilityEstimate, comparison: Comparison,
                   threshold: float) -> str:
    """Compare the whole confidence interval against the probability bound."""
    lo, hi = estimate.lower, estimate.upper
    if comparison is Comparison.GE:
        if lo >= threshold:
            return Verdict.SATISFIED
        if hi < threshold:
            return Verdict.VIOLATED
    elif comparison is Comparison.GT:
        if lo > threshold:
            return Verdict.SATISFIED
        if hi <= threshold:
            return Verdict.VIOLATED
    elif comparison is Comparison.LE:
        if hi <= threshold:
            return Verdict.SATISFIED
        if lo > threshold:
            return Verdict.VIOLATED
    else:  # LT
        if hi < threshold:
            return Verdict.SATISFIED
        if lo >= threshold:
            return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class MonitorRecord:
    time: float
    estimate: ProbabilityEstimate
    verdict: str


class _RowTrace:
    """Trace facade over one ensemble row sharing the reading timestamps."""

    __slots__ = ("semantics", "_variable", "_times", "_values")

    def __init__(self, variable: str, times: np.ndarray, values: np.ndarray,
                 semantics: str):
        self.semantics = semantics
        self._variable = variable
        self._times = times
        self._values = values

    def series(self, variable: str):
        if variable != self._variable:
            raise TraceError(f"unknown variable '{variable}'")
        return self._times, self._values


class StreamingMonitor:
    """Algorithm-2-style monitor: lift each reading into an ensemble, extend
    the per-trajectory traces, and re-estimate the satisfaction probability.

    The formula must be a top-level probability bound over a prob-free
    subformula with exactly one free variable (the lifted reading).
    """

    def __init__(self, formula: Formula | str, model: NoiseModel, config: SmcConfig,
                 semantics: str = DISCRETE, workers: int = 1):
        if isinstance(formula, str):
            formula = parse_formula(formula)
        if not isinstance(formula, Prob):
            raise SmcError("streaming monitoring needs a top-level probability bound")
        if contains_prob(formula.child):
            raise SmcError("nested probability operators are not supported; "
                           "the probabilistic semantics is defined only at the top level")
        names = free_variables(formula.child)
        if len(names) != 1:
            raise SmcError("the lifted subformula must reference exactly one variable")
        if semantics not in (DISCRETE, DENSE):
            raise SmcError(f"unknown time semantics {semantics!r}")
        if workers < 1:
            raise SmcError("worker count must be at least 1")
        self.formula = formula
        self.variable = next(iter(names))
        self.model = model
        self.config = config
        self.semantics = semantics
        self.workers = workers
        self._times: list[float] = []
        self._columns: list[np.ndarray] = []

    @property
    def readings(self) -> int:
        return len(self._times)

    def feed(self, time: float, reading: float) -> MonitorRecord:
        """Ingest one sensor reading and return the updated estimate."""
        if self._times and time <= self._times[-1]:
            raise TraceError(
                f"t={time} does not advance past t={self._times[-1]}")
        index = len(self._times)
        column = self._lift(reading, index)
        self._times.append(float(time))
        self._columns.append(column)
        rho = self._evaluate()
        estimate = estimate_probability(rho, self.config)
        verdict = decide_verdict(estimate, self.formula.comparison, self.formula.threshold)
        return MonitorRecord(float(time), estimate, verdict)

    def _lift(self, reading: float, index: int) -> np.ndarray:
        n = self.config.samples
        seed = derive_seed(self.config.seed, index)
        if self.workers == 1:
            return sample_trajectories(self.model, reading, n, seed)
        bounds = _chunks(n, self.workers)
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            parts = list(pool.map(
                lambda se: sample_trajectories(self.model, reading, se[1] - se[0],
                                               seed, start=se[0]),
                bounds))
        return np.concatenate(parts)

    def _evaluate(self) -> np.ndarray:
        times = np.asarray(self._times)
        matrix = np.stack(self._columns, axis=1)  # (samples, readings)
        child = self.formula.child

        def eval_rows(bounds: tuple[int, int]) -> np.ndarray:
            lo, hi = bounds
            out = np.empty(hi - lo)
            for i in range(lo, hi):
                row = _RowTrace(self.variable, times, matrix[i], self.semantics)
                ev = _GridEvaluator(row, times, strict_horizon=False)
                values, _ = ev.run(child)
                out[i - lo] = values[0]
            return out

        if self.workers == 1:
            return eval_rows((0, matrix.shape[0]))
        bounds = _chunks(matrix.shape[0], self.workers)
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            parts = list(pool.map(eval_rows, bounds))
        return np.concatenate(parts)


def _chunks(total: int, parts: int) -> list[tuple[int, int]]:
    size = (total + parts - 1) // parts
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def monitor_stream(formula: Formula | str, model: NoiseModel,
                   readings: Iterable[tuple[float, float]], config: SmcConfig,
                   semantics: str = DISCRETE, workers: int = 1) -> Iterator[MonitorRecord]:
    """Run the streaming monitor over (time, reading) pairs."""
    monitor = StreamingMonitor(formula, model, config, semantics, workers)
    for time, reading in readings:
        yield monitor.feed(time, reading)
