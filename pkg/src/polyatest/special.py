"""Standard normal distribution helpers and the Bayes factor to probability link."""

import math

import numpy as np
from scipy.special import erfc, expit

from .errors import DomainError

__all__ = [
    "gaussian_cdf",
    "gaussian_quantile",
    "gaussian_quantile_array",
    "posterior_null_probability",
]

# Rational approximation coefficients (P. J. Acklam), relative error 1.15e-9.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671324505934e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def gaussian_cdf(x):
    """Standard normal CDF, computed through ``erfc`` so the lower tail keeps
    full relative precision."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def _poly(coefs, t):
    out = np.full_like(t, coefs[0])
    for c in coefs[1:]:
        out = out * t + c
    return out


def _lower_half_quantile(p):
    # p in (0, 0.5]
    x = np.empty_like(p)
    tail = p < _P_LOW
    if tail.any():
        q = np.sqrt(-2.0 * np.log(p[tail]))
        x[tail] = _poly(_C, q) / (_poly(_D, q) * q + 1.0)
    mid = ~tail
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        x[mid] = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)
    # one Halley step on the CDF
    e = gaussian_cdf(x) - p
    u = e * _SQRT2PI * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def gaussian_quantile_array(p):
    """Vectorised inverse standard normal CDF for an array of probabilities
    strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError("quantile probabilities must lie strictly inside (0, 1)")
    flat = p.ravel()
    upper = flat > 0.5
    # 1 - p is exact for p >= 0.5, so the upper half reuses the lower tail
    lower_arg = np.where(upper, 1.0 - flat, flat)
    x = _lower_half_quantile(lower_arg)
    x = np.where(upper, -x, x)
    return x.reshape(p.shape)


def gaussian_quantile(p: float) -> float:
    """Inverse standard normal CDF, absolute error below 1e-9.

    Raises
    ------
    DomainError
        If ``p`` is not strictly between 0 and 1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"gaussian_quantile needs 0 < p < 1, got {p!r}")
    return float(gaussian_quantile_array(np.array([p]))[0])


def posterior_null_probability(log_bf01):
    """Map ln BF01 to P(H0 | data) = 1 - 1/(1 + BF01) under equal prior odds.

    The logistic form never overflows. Results are kept strictly inside
    (0, 1) even where the logistic saturates in double precision.
    """
    p = expit(log_bf01)
    return np.clip(p, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
