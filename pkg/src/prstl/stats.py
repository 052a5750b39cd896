"""Binomial interval constructions and the scalar special functions behind them.

The normal quantile and the regularized incomplete beta function are
implemented here directly (rational approximation plus Newton polish, and a
modified Lentz continued fraction plus bisection, respectively) so that the
interval code does not depend on a statistics library for its core numerics.
The test suite cross-checks both against SciPy.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr  # forward normal CDF, used only to polish the inverse

__all__ = [
    "normal_quantile",
    "regularized_incomplete_beta",
    "beta_quantile",
    "required_samples",
    "wilson_interval",
    "clopper_pearson_interval",
]

# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: np.ndarray) -> np.ndarray:
    out = np.empty_like(p)

    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r) + 1.0
        out[mid] = q * num / den
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q) + 1.0
        out[lo] = num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q) + 1.0
        out[hi] = -(num / den)
    return out


def normal_quantile(p):
    """Inverse standard normal CDF, accurate to better than 1e-12 absolute.

    Accepts a scalar or an array in the open interval (0, 1). The rational
    approximation is polished with one Newton step against the forward CDF.
    """
    arr = np.asarray(p, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("normal_quantile requires p in the open interval (0, 1)")

    # Work in the lower half only: 1 - p is exact there (Sterbenz), and the
    # forward CDF keeps full relative precision in the lower tail, so the
    # Newton correction does not cancel for p near 1.
    upper = arr > 0.5
    q = np.where(upper, 1.0 - arr, arr)
    x = _acklam(q)
    # One Newton step: x <- x - (Phi(x) - q) / phi(x).
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    x = x - (ndtr(x) - q) / pdf
    x = np.where(upper, -x, x)
    return float(x[0]) if scalar else x


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_continued_fraction(x: float, a: float, b: float, max_iter: int = 300) -> float:
    # Modified Lentz evaluation of the continued fraction for I_x(a, b).
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) via the symmetry-transformed continued fraction."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("beta parameters must be positive")
    if x < 0.0 or x > 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(x, a, b) / a
    return 1.0 - front * _beta_continued_fraction(1.0 - x, b, a) / b


def beta_quantile(q: float, a: float, b: float, tol: float = 1e-10) -> float:
    """Inverse of the regularized incomplete beta, by bisection to ``tol``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("quantile level must lie in [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if regularized_incomplete_beta(mid, a, b) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def required_samples(epsilon: float, delta: float) -> int:
    """Sample count guaranteeing |p_hat - p| <= epsilon with probability 1 - delta.

    Evaluates ceil(ln(2/delta) / (2 epsilon^2)). Results within one part in
    1e9 of an integer are snapped to it before the ceiling, so analytically
    integral bounds are not inflated by floating-point round-off.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    raw = math.log(2.0 / delta) / (2.0 * epsilon * epsilon)
    nearest = round(raw)
    if nearest >= 1 and abs(raw - nearest) <= 1e-9 * max(1.0, nearest):
        return int(nearest)
    return int(math.ceil(raw))


def _check_counts(successes: int, trials: int) -> None:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")


def _check_confidence(confidence: float) -> None:
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")


def wilson_interval(successes: int, trials: int, confidence: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    The boundary cases successes == 0 and successes == trials pin the
    corresponding endpoint to exactly 0 or 1; the score formula forces those
    values analytically and the special case keeps them exact in floats.
    """
    _check_counts(successes, trials)
    _check_confidence(confidence)
    z = normal_quantile(1.0 - (1.0 - confidence) / 2.0)
    n = float(trials)
    p_hat = successes / n
    denom = 1.0 + z * z / n
    center = (p_hat + z * z / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n))
    lower = 0.0 if successes == 0 else max(0.0, center - half)
    upper = 1.0 if successes == trials else min(1.0, center + half)
    return lower, upper


def clopper_pearson_interval(successes: int, trials: int, confidence: float) -> tuple[float, float]:
    """Exact (conservative) binomial interval from beta quantiles."""
    _check_counts(successes, trials)
    _check_confidence(confidence)
    alpha = 1.0 - confidence
    if successes == 0:
        lower = 0.0
    else:
        lower = beta_quantile(alpha / 2.0, successes, trials - successes + 1)
    if successes == trials:
        upper = 1.0
    else:
        upper = beta_quantile(1.0 - alpha / 2.0, successes + 1, trials - successes)
    return lower, upper
