"""Standard normal distribution function and its inverse."""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

from .errors import ParameterDomainError

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)

# Acklam's rational approximation (relative error below 1.2e-9 before polishing)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(x):
    """``Phi(x)`` computed from ``erfc`` (accurate in the lower tail)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def _poly(coef, x):
    out = np.zeros_like(x)
    for c in coef:
        out = out * x + c
    return out


def _lower_quantile(q):
    """Quantile for ``q`` in (0, 0.5]; returns values <= 0."""
    x = np.empty_like(q)
    tail = q < _P_LOW
    if np.any(tail):
        r = np.sqrt(-2.0 * np.log(q[tail]))
        x[tail] = _poly(_C, r) / (_poly(_D, r) * r + 1.0)
    mid = ~tail
    if np.any(mid):
        t = q[mid] - 0.5
        r = t * t
        x[mid] = _poly(_A, r) * t / (_poly(_B, r) * r + 1.0)
    # one Newton step against the erfc-based forward CDF; skipped where the
    # density underflows (subnormal q), leaving the rational approximation
    err = normal_cdf(x) - q
    with np.errstate(over="ignore", invalid="ignore"):
        step = err * _SQRT2PI * np.exp(0.5 * x * x)
    return np.where(np.isfinite(step), x - step, x)


def inverse_normal_cdf(p):
    """``Phi^{-1}(p)`` for ``p`` in the open interval (0, 1).

    Upper-half arguments are reflected through ``1 - p`` (exact for
    ``p >= 0.5``), so both tails keep full relative precision.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ParameterDomainError("inverse normal CDF needs p in (0, 1)")
    flat = np.atleast_1d(arr).ravel()
    upper = flat > 0.5
    q = np.where(upper, 1.0 - flat, flat)
    x = _lower_quantile(q)
    x = np.where(upper, -x, x)
    x[flat == 0.5] = 0.0
    if arr.ndim == 0:
        return float(x[0])
    return x.reshape(arr.shape)
