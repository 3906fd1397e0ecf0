"""Comparison residuals: Pearson, deviance, randomized quantile, Li-Shepherd
and the Liu-Zhang surrogate.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, gammaln, logit, xlogy

from . import families as fam
from .dpit import _resolve
from .errors import DegenerateDataError, NumericalError, UnsupportedOperationError
from .normal import inverse_normal_cdf

KINDS = ("pearson", "deviance", "randomized-quantile", "li-shepherd", "liu-zhang")


def _stream(seed: int) -> np.random.Generator:
    # Counter-based: draw i is a fixed function of (seed, i), whatever the
    # order in which observations are later consumed.
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _cdf_pair(params, y):
    """``F(y-1|x)`` and ``F(y|x)`` per row, read from the shared tables."""
    tables = params.cdf_tables(min_len=y + 1)
    upper = np.array([t[k] for t, k in zip(tables, y)])
    lower = np.array([t[k - 1] if k > 0 else 0.0 for t, k in zip(tables, y)])
    return lower, upper


def pearson(fitted, data) -> np.ndarray:
    """``(Y - mu) / sqrt(V)`` with the family's variance function."""
    params, y = _resolve(fitted, data)
    var = params.variance()
    if np.any(var <= 0):
        raise DegenerateDataError("fitted variance is zero for some observation")
    return (y - params.mean()) / np.sqrt(var)


def _saturated_loglik(params, y):
    y = y.astype(float)
    if params.family in ("poisson", "zip"):
        # zip: saturated Poisson model
        return xlogy(y, y) - y - gammaln(y + 1.0)
    if params.family == "negbin":
        th = params.size
        return (gammaln(y + th) - gammaln(th) - gammaln(y + 1.0)
                + xlogy(th, th) + xlogy(y, y) - xlogy(y + th, y + th))
    # Bernoulli and ordinal: the saturated model predicts the outcome exactly
    return np.zeros_like(y)


def deviance(fitted, data) -> np.ndarray:
    """Signed deviance residuals ``sign(Y - mu) * sqrt(2 (l_sat - l_fit))``."""
    params, y = _resolve(fitted, data)
    d = 2.0 * (_saturated_loglik(params, y) - params.logpmf(y))
    if np.any(d < -1e-10):
        raise NumericalError(f"negative deviance component {d.min():.3g}")
    return np.sign(y - params.mean()) * np.sqrt(np.maximum(d, 0.0))


def randomized_quantile(fitted, data, seed: int, scale: str = "normal") -> np.ndarray:
    """Randomized quantile residuals.

    ``u_i`` is uniform on ``(F(Y_i - 1|X_i), F(Y_i|X_i)]``; the normal scale
    returns ``Phi^{-1}(u_i)``.
    """
    params, y = _resolve(fitted, data)
    lower, upper = _cdf_pair(params, y)
    v = _stream(seed).random(y.size)
    u = upper - (upper - lower) * v
    u = np.maximum(u, np.nextafter(lower, 1.0))
    if scale == "uniform":
        return u
    out = np.full(u.size, np.inf)
    inside = u < 1.0
    out[inside] = inverse_normal_cdf(u[inside])
    return out


def li_shepherd(fitted, data) -> np.ndarray:
    """``F(Y - 1|X) + F(Y|X) - 1``, in ``[-1, 1]``."""
    params, y = _resolve(fitted, data)
    lower, upper = _cdf_pair(params, y)
    return lower + upper - 1.0


def liu_zhang_surrogate(fitted, data, seed: int, centered: bool = False) -> np.ndarray:
    """Surrogate residuals from the latent logistic variable.

    The latent ``A_i = eta_i + e_i`` (``e_i`` standard logistic) satisfies
    ``Y_i <= k`` iff ``A_i <= alpha_k`` (binary: ``alpha_0 = 0``).  ``A_i`` is
    drawn by inverse CDF from its law truncated to the cutpoint interval of
    the observed category.  With ``centered`` the location ``eta_i`` is
    subtracted, which is standard logistic under the true model.
    """
    params, y = _resolve(fitted, data)
    if isinstance(params, fam.OrdinalLogit):
        loc = params.eta
    elif isinstance(params, fam.Bernoulli):
        loc = logit(params.prob)
    else:
        raise UnsupportedOperationError(
            f"surrogate residuals need an ordinal or binary model, not {params.family}"
        )
    # P(A_i - eta_i <= alpha_k - eta_i) = F(k | X_i), so the truncated draw
    # of A_i - eta_i is logit(u) with u uniform on (F(Y_i - 1), F(Y_i)].
    lower, upper = _cdf_pair(params, y)
    v = _stream(seed).random(y.size)
    u = upper - (upper - lower) * v
    u = np.clip(u, np.nextafter(lower, 1.0), np.nextafter(1.0, 0.0))
    e = logit(u)
    return e if centered else loc + e


def logistic_cdf(x):
    return expit(np.asarray(x, dtype=float))


def compute(kind: str, fitted, data, seed: int | None = None) -> np.ndarray:
    """Dispatch by residual kind name (see ``KINDS``)."""
    if kind == "pearson":
        return pearson(fitted, data)
    if kind == "deviance":
        return deviance(fitted, data)
    if kind == "li-shepherd":
        return li_shepherd(fitted, data)
    if kind in ("randomized-quantile", "liu-zhang"):
        if seed is None:
            raise ValueError(f"{kind} residuals are randomized and need a seed")
        if kind == "randomized-quantile":
            return randomized_quantile(fitted, data, seed)
        return liu_zhang_surrogate(fitted, data, seed, centered=True)
    raise ValueError(f"unknown residual kind {kind!r}; expected one of {', '.join(KINDS)}")
