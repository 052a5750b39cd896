"""Residual noise models: calibration, fitting, and trajectory lifting.

Calibration pairs a ground-truth sequence with the corresponding sensor
readings, producing residuals under an additive (r = y - x) or multiplicative
(r = y / x) interaction. The residual set is fitted as a parametric family,
an empirical bootstrap distribution, or a Gaussian mixture, and at monitoring
time one deterministic reading q is lifted into an ensemble of candidate true
values by drawing residuals and inverting the interaction.

Randomness uses the Philox counter-based generator. Trajectory i consumes
uniforms from its own counter block derived from (seed, i), so an ensemble is
bit-identical no matter how the index range is partitioned across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _sps

from .stats import normal_quantile

__all__ = [
    "InteractionMode", "NoiseError", "DegenerateComponentError",
    "ParametricModel", "EmpiricalModel", "GmmModel", "NoiseModel",
    "compute_residuals", "fit_model", "sample_trajectories",
    "model_to_json", "model_from_json", "save_model", "load_model",
    "trajectory_uniforms", "derive_seed",
    "PARAMETRIC_FAMILIES", "VARIANCE_FLOOR",
]

VARIANCE_FLOOR = 1e-12
_EM_TOL = 1e-8
_EM_MAX_ITER = 500
_WEIGHT_FLOOR = 1e-6

PARAMETRIC_FAMILIES = ("gaussian", "lognormal", "exponential", "gamma", "beta", "uniform")

_MASK64 = (1 << 64) - 1


class NoiseError(ValueError):
    pass


class DegenerateComponentError(NoiseError):
    pass


class InteractionMode(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


# --------------------------------------------------------------------------
# Counter-based substreams
# --------------------------------------------------------------------------

def derive_seed(seed: int, index: int) -> int:
    """Stable 128-bit Philox key for stream ``index`` of a run seed."""
    return (seed & _MASK64) | ((index & _MASK64) << 64)


def trajectory_uniforms(seed: int, count: int, start: int = 0) -> np.ndarray:
    """(count, 4) uniforms; row i belongs to absolute trajectory start + i.

    Philox emits four 64-bit words per counter block and ``advance`` steps in
    whole blocks, so giving each trajectory one block (four uniforms, of
    which at most two are used) makes any chunking of the index range
    reproduce the unchunked draw exactly.
    """
    bitgen = np.random.Philox(key=seed & ((1 << 128) - 1))
    if start:
        bitgen.advance(start)
    gen = np.random.Generator(bitgen)
    return gen.random(4 * count).reshape(count, 4)


# --------------------------------------------------------------------------
# Residual calibration
# --------------------------------------------------------------------------

def compute_residuals(truth, measured, mode: InteractionMode | str) -> np.ndarray:
    """Residuals of sensor readings against ground truth."""
    mode = InteractionMode(mode)
    x = np.asarray(truth, dtype=np.float64)
    y = np.asarray(measured, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise NoiseError("ground truth and sensor sequences must have equal length")
    if x.size < 2:
        raise NoiseError("calibration needs at least 2 paired observations")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise NoiseError("calibration data must be finite")
    if mode is InteractionMode.ADDITIVE:
        return y - x
    if np.any(x == 0.0):
        raise NoiseError("multiplicative residuals are undefined where ground truth is 0")
    return y / x


# --------------------------------------------------------------------------
# Models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricModel:
    family: str
    params: tuple[tuple[str, float], ...]
    interaction: InteractionMode

    def __post_init__(self):
        if self.family not in PARAMETRIC_FAMILIES:
            raise NoiseError(f"unknown parametric family {self.family!r}")
        object.__setattr__(self, "params", tuple(sorted(self.params)))

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    # one uniform per draw
    draws_per_trajectory = 1

    def residuals_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        p = dict(self.params)
        f = self.family
        if f == "gaussian":
            return p["mean"] + math.sqrt(p["variance"]) * normal_quantile(u)
        if f == "lognormal":
            return np.exp(p["mu"] + math.sqrt(p["sigma2"]) * normal_quantile(u))
        if f == "exponential":
            return -np.log1p(-u) / p["rate"]
        if f == "gamma":
            return _sps.gamma.ppf(u, p["shape"], scale=p["scale"])
        if f == "beta":
            return _sps.beta.ppf(u, p["alpha"], p["beta"])
        # uniform
        return p["low"] + (p["high"] - p["low"]) * u


@dataclass(frozen=True)
class EmpiricalModel:
    residuals: tuple[float, ...]
    interaction: InteractionMode

    draws_per_trajectory = 1

    def residuals_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        pool = np.asarray(self.residuals)
        idx = np.minimum((u * pool.size).astype(np.int64), pool.size - 1)
        return pool[idx]


@dataclass(frozen=True)
class GmmModel:
    weights: tuple[float, ...]
    means: tuple[float, ...]
    variances: tuple[float, ...]
    interaction: InteractionMode
    log_likelihoods: tuple[float, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights)
        if abs(float(w.sum()) - 1.0) > 1e-9 or np.any(w <= 0.0):
            raise NoiseError("mixture weights must be positive and sum to 1")
        if np.any(np.asarray(self.variances) <= 0.0):
            raise NoiseError("mixture variances must be positive")

    @property
    def k(self) -> int:
        return len(self.weights)

    # one uniform picks the component, one drives the Gaussian draw
    draws_per_trajectory = 2

    def residuals_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        cum = np.cumsum(self.weights)
        comp = np.searchsorted(cum, u[:, 0], side="right")
        comp = np.minimum(comp, self.k - 1)
        means = np.asarray(self.means)[comp]
        sigmas = np.sqrt(np.asarray(self.variances))[comp]
        return means + sigmas * normal_quantile(u[:, 1])


NoiseModel = ParametricModel | EmpiricalModel | GmmModel


# --------------------------------------------------------------------------
# Fitting
# --------------------------------------------------------------------------

def _check_residuals(r) -> np.ndarray:
    arr = np.asarray(r, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise NoiseError("a residual set needs at least 2 values")
    if not np.isfinite(arr).all():
        raise NoiseError("residuals must be finite")
    return arr


def _fit_parametric(r: np.ndarray, family: str) -> tuple[tuple[str, float], ...]:
    if family == "gaussian":
        mean = float(np.mean(r))
        var = float(np.var(r, ddof=1))  # unbiased n-1 divisor, kept consistent with tests
        return (("mean", mean), ("variance", max(var, VARIANCE_FLOOR)))
    if family == "lognormal":
        if np.any(r <= 0.0):
            raise NoiseError("lognormal residuals must be positive")
        logs = np.log(r)
        return (("mu", float(np.mean(logs))),
                ("sigma2", max(float(np.var(logs, ddof=1)), VARIANCE_FLOOR)))
    if family == "exponential":
        if np.any(r <= 0.0):
            raise NoiseError("exponential residuals must be positive")
        return (("rate", float(1.0 / np.mean(r))),)
    if family == "gamma":
        if np.any(r <= 0.0):
            raise NoiseError("gamma residuals must be positive")
        shape, _, scale = _sps.gamma.fit(r, floc=0.0)
        return (("shape", float(shape)), ("scale", float(scale)))
    if family == "beta":
        if np.any((r <= 0.0) | (r >= 1.0)):
            raise NoiseError("beta residuals must lie strictly inside (0, 1)")
        a, b, _, _ = _sps.beta.fit(r, floc=0.0, fscale=1.0)
        return (("alpha", float(a)), ("beta", float(b)))
    if family == "uniform":
        return (("low", float(np.min(r))), ("high", float(np.max(r))))
    raise NoiseError(f"unknown parametric family {family!r}")


def _gmm_log_likelihood(r, weights, means, variances):
    # log sum_k w_k N(r | mu_k, var_k), computed stably per point
    log_w = np.log(weights)
    diffs = r[:, None] - means[None, :]
    log_comp = (log_w[None, :]
                - 0.5 * np.log(2.0 * math.pi * variances)[None, :]
                - 0.5 * diffs * diffs / variances[None, :])
    m = np.max(log_comp, axis=1, keepdims=True)
    return log_comp, m[:, 0] + np.log(np.sum(np.exp(log_comp - m), axis=1))


def _fit_gmm(r: np.ndarray, k: int) -> GmmModel:
    if k < 1:
        raise NoiseError("mixture needs at least one component")
    if r.size < 3 * k:
        raise NoiseError(f"fitting a {k}-component mixture needs at least {3 * k} residuals")

    # Deterministic initialization: k contiguous blocks of the sorted residuals.
    srt = np.sort(r)
    blocks = np.array_split(srt, k)
    means = np.array([float(np.mean(b)) for b in blocks])
    variances = np.array([max(float(np.var(b)), VARIANCE_FLOOR) for b in blocks])
    weights = np.full(k, 1.0 / k)

    history: list[float] = []
    for _ in range(_EM_MAX_ITER):
        log_comp, log_px = _gmm_log_likelihood(r, weights, means, variances)
        ll = float(np.sum(log_px))
        history.append(ll)
        if len(history) > 1 and ll - history[-2] < _EM_TOL:
            break
        resp = np.exp(log_comp - log_px[:, None])
        totals = resp.sum(axis=0)
        weights = totals / r.size
        if np.any(weights < _WEIGHT_FLOOR):
            raise DegenerateComponentError(
                f"component weight collapsed below {_WEIGHT_FLOOR}")
        means = (resp * r[:, None]).sum(axis=0) / totals
        diffs = r[:, None] - means[None, :]
        variances = (resp * diffs * diffs).sum(axis=0) / totals
        if np.any(variances < VARIANCE_FLOOR):
            raise DegenerateComponentError(
                f"component variance collapsed below {VARIANCE_FLOOR}")
    return GmmModel(tuple(float(w) for w in weights),
                    tuple(float(m) for m in means),
                    tuple(float(v) for v in variances),
                    InteractionMode.ADDITIVE, tuple(history))


def fit_model(residuals, kind: str, *, family: str | None = None,
              components: int | None = None,
              interaction: InteractionMode | str = InteractionMode.ADDITIVE) -> NoiseModel:
    """Fit a noise model to a residual set.

    kind: "parametric" (with ``family``), "empirical", or "gmm" (with
    ``components``).
    """
    r = _check_residuals(residuals)
    interaction = InteractionMode(interaction)
    if kind == "parametric":
        if family is None:
            raise NoiseError("parametric fitting needs a family")
        return ParametricModel(family, _fit_parametric(r, family), interaction)
    if kind == "empirical":
        return EmpiricalModel(tuple(float(v) for v in r), interaction)
    if kind == "gmm":
        if components is None:
            raise NoiseError("gmm fitting needs a component count")
        fitted = _fit_gmm(r, components)
        return GmmModel(fitted.weights, fitted.means, fitted.variances,
                        interaction, fitted.log_likelihoods)
    raise NoiseError(f"unknown model kind {kind!r}")


# --------------------------------------------------------------------------
# Trajectory lifting
# --------------------------------------------------------------------------

def sample_trajectories(model: NoiseModel, reading: float, count: int, seed: int,
                        start: int = 0) -> np.ndarray:
    """Lift one deterministic reading into ``count`` candidate true values.

    ``start`` is the absolute index of the first trajectory, so partitioned
    calls concatenate to exactly the full ensemble for the same seed.
    """
    if count < 1:
        raise NoiseError("ensemble size must be at least 1")
    if not math.isfinite(reading):
        raise NoiseError("sensor reading must be finite")
    u = trajectory_uniforms(seed, count, start)
    if model.draws_per_trajectory == 1:
        r = model.residuals_from_uniforms(u[:, 0])
    else:
        r = model.residuals_from_uniforms(u)
    if model.interaction is InteractionMode.ADDITIVE:
        return reading - r
    if np.any(r == 0.0):
        raise NoiseError("drawn residual of 0 cannot invert a multiplicative interaction")
    return reading / r


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

_SCHEMA_VERSION = 1


def model_to_json(model: NoiseModel) -> dict:
    if isinstance(model, ParametricModel):
        return {"schema_version": _SCHEMA_VERSION, "variant": "parametric",
                "family": model.family, "params": dict(model.params),
                "interaction": model.interaction.value}
    if isinstance(model, EmpiricalModel):
        return {"schema_version": _SCHEMA_VERSION, "variant": "empirical",
                "residuals": list(model.residuals),
                "interaction": model.interaction.value}
    return {"schema_version": _SCHEMA_VERSION, "variant": "gmm",
            "weights": list(model.weights), "means": list(model.means),
            "variances": list(model.variances),
            "interaction": model.interaction.value}


def model_from_json(data: dict) -> NoiseModel:
    variant = data.get("variant")
    interaction = InteractionMode(data.get("interaction", "additive"))
    if variant == "parametric":
        family = data["family"]
        if family not in PARAMETRIC_FAMILIES:
            raise NoiseError(f"unknown parametric family {family!r}")
        params = tuple(sorted((str(k), float(v)) for k, v in data["params"].items()))
        return ParametricModel(family, params, interaction)
    if variant == "empirical":
        residuals = tuple(float(v) for v in data["residuals"])
        if len(residuals) < 1:
            raise NoiseError("empirical model needs stored residuals")
        return EmpiricalModel(residuals, interaction)
    if variant == "gmm":
        return GmmModel(tuple(float(v) for v in data["weights"]),
                        tuple(float(v) for v in data["means"]),
                        tuple(float(v) for v in data["variances"]),
                        interaction)
    raise NoiseError(f"unknown noise model variant {variant!r}")


def save_model(model: NoiseModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> NoiseModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
