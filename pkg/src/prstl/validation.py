"""Statistical self-validation: interval coverage tables and SPRT error rates.

The coverage protocol simulates Bernoulli experiments with a known success
probability, builds an interval per trial, and reports how often the interval
contains the truth, alongside a chi-squared goodness-of-fit p-value checking
the simulated success counts against the exact binomial law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .noise import derive_seed
from .smc import SprtConfig, run_sprt
from .stats import clopper_pearson_interval, wilson_interval

__all__ = [
    "CoverageCell", "coverage_validation", "binomial_chi_squared",
    "SprtValidation", "sprt_validation",
]

DEFAULT_P_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_CONFIDENCE_GRID = (0.80, 0.90, 0.95, 0.99)


@dataclass(frozen=True)
class CoverageCell:
    p: float
    confidence: float
    n: int
    trials: int
    wilson_coverage: float
    clopper_pearson_coverage: float
    chi_squared_p: float


def binomial_chi_squared(counts: np.ndarray, n: int, p: float, trials: int) -> float:
    """Chi-squared goodness-of-fit p-value of success counts vs Binomial(n, p).

    Adjacent bins are pooled until every expected count reaches 5, the usual
    validity rule for the chi-squared approximation.
    """
    expected = _sps.binom.pmf(np.arange(n + 1), n, p) * trials
    pooled_obs: list[float] = []
    pooled_exp: list[float] = []
    acc_o = 0.0
    acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += float(o)
        acc_e += float(e)
        if acc_e >= 5.0:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
            acc_o = 0.0
            acc_e = 0.0
    if acc_e > 0.0:
        if pooled_exp:
            pooled_obs[-1] += acc_o
            pooled_exp[-1] += acc_e
        else:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
    obs = np.asarray(pooled_obs)
    exp = np.asarray(pooled_exp)
    if obs.size < 2:
        return 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    return float(_sps.chi2.sf(stat, dof))


def coverage_validation(p_grid=DEFAULT_P_GRID, confidence_grid=DEFAULT_CONFIDENCE_GRID,
                        trials: int = 10_000, n: int = 100,
                        seed: int = 0) -> list[CoverageCell]:
    """Simulated coverage of both interval methods over a (p, confidence) grid."""
    cells: list[CoverageCell] = []
    for cell_index, p in enumerate(p_grid):
        rng = np.random.Generator(np.random.Philox(key=derive_seed(seed, cell_index)))
        ks = rng.binomial(n, p, size=trials)
        counts = np.bincount(ks, minlength=n + 1)
        chi_p = binomial_chi_squared(counts, n, p, trials)
        for confidence in confidence_grid:
            wilson_covers = np.array([
                lo <= p <= hi
                for lo, hi in (wilson_interval(k, n, confidence) for k in range(n + 1))
            ])
            cp_covers = np.array([
                lo <= p <= hi
                for lo, hi in (clopper_pearson_interval(k, n, confidence) for k in range(n + 1))
            ])
            cells.append(CoverageCell(
                p=p, confidence=confidence, n=n, trials=trials,
                wilson_coverage=float(np.mean(wilson_covers[ks])),
                clopper_pearson_coverage=float(np.mean(cp_covers[ks])),
                chi_squared_p=chi_p,
            ))
    return cells


@dataclass(frozen=True)
class SprtValidation:
    config: SprtConfig
    trials: int
    type_i_rate: float
    type_ii_rate: float
    undecided_rate: float
    mean_samples_h0: float
    mean_samples_h1: float


def _bernoulli_stream(rng: np.random.Generator, p: float):
    while True:
        yield bool(rng.random() < p)


def sprt_validation(config: SprtConfig | None = None, trials: int = 5000,
                    seed: int = 0) -> SprtValidation:
    """Empirical Type-I/II rates of the SPRT at the hypothesis boundaries.

    Data are generated at p0 (measuring false H1 acceptances) and at p1
    (measuring false H0 acceptances).
    """
    if config is None:
        config = SprtConfig(p0=0.3, p1=0.5)

    rng0 = np.random.Generator(np.random.Philox(key=derive_seed(seed, 0)))
    rng1 = np.random.Generator(np.random.Philox(key=derive_seed(seed, 1)))

    type_i = 0
    undecided = 0
    samples_h0 = 0
    for _ in range(trials):
        verdict = run_sprt(_bernoulli_stream(rng0, config.p0), config)
        samples_h0 += verdict.samples
        if verdict.outcome == "accept_H1":
            type_i += 1
        elif verdict.outcome == "undecided":
            undecided += 1

    type_ii = 0
    samples_h1 = 0
    for _ in range(trials):
        verdict = run_sprt(_bernoulli_stream(rng1, config.p1), config)
        samples_h1 += verdict.samples
        if verdict.outcome == "accept_H0":
            type_ii += 1
        elif verdict.outcome == "undecided":
            undecided += 1

    return SprtValidation(
        config=config, trials=trials,
        type_i_rate=type_i / trials, type_ii_rate=type_ii / trials,
        undecided_rate=undecided / (2 * trials),
        mean_samples_h0=samples_h0 / trials, mean_samples_h1=samples_h1 / trials,
    )
