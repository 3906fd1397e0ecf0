"""Double probability integral transform (DPIT) residuals.

For observation ``i`` the residual is ``G_i(a_i)`` where ``a_i = F(Y_i|X_i)``
is the fitted PIT value and

    G_i(s) = 1/(n-1) * sum_{j != i} F(F^(-1)(s|X_j) | X_j)

is the leave-one-out estimate of the distribution of the PIT.  Bounded
outcomes (binary, ordinal) use the altered transform for observations at the
top category, where the standard residual clumps at 1.

Two evaluation paths are provided.  ``reference`` is the literal double loop
over ``(i, j)``.  ``fast`` sorts the targets once and sweeps each ``j``'s step
function over all of them with vectorised table lookups.  Both accumulate in
ascending ``j`` with the same compensated summation and skip the ``j == i``
term, so they agree bit for bit.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace

import numpy as np

from . import families as fam
from .data import Dataset
from .errors import InsufficientDataError, ParameterDomainError, UnsupportedOperationError
from .families import NEG_INF, POS_INF
from .normal import inverse_normal_cdf

STANDARD = "standard"
ALTERED = "altered"
PATHS = ("reference", "fast")
EMPTY_INVERSE = ("minus-one", "neg-inf")


@dataclass(frozen=True, eq=False)
class ResidualSet:
    """Uniform-scale residuals with per-observation provenance.

    ``index`` lists the observations the values belong to when the set is
    partial (altered residuals); ``None`` means all observations in order.
    ``normal`` holds the normal-scale values once computed, with ``-inf`` /
    ``inf`` markers when unclamped residuals hit 0 or 1.
    """

    uniform: np.ndarray
    flags: np.ndarray
    family: str
    normal: np.ndarray | None = None
    index: np.ndarray | None = None
    clamped: bool | None = None

    @property
    def n(self) -> int:
        return int(self.uniform.size)


def _resolve(fitted, data):
    """Per-row parameters and outcomes from ``(FittedModel|FamilyParams, Dataset|y)``."""
    y = data.y if isinstance(data, Dataset) else np.asarray(data)
    if isinstance(fitted, fam.FamilyParams):
        params = fitted
    else:
        params = fitted.conditional_params(data)
    y = np.asarray(y, dtype=np.int64)
    if len(params) != y.size:
        raise ParameterDomainError(f"{len(params)} parameter rows for {y.size} outcomes")
    if params.bounded and np.any(y > params.kmax):
        raise ParameterDomainError(f"outcomes exceed the top category {params.kmax}")
    return params, y


def _tables(params, y):
    return params.cdf_tables(min_len=y + 1)


def _kahan_add(acc, comp, value):
    yv = value - comp
    t = acc + yv
    comp = (t - acc) - yv
    return t, comp


def pit_values(fitted, data) -> np.ndarray:
    """Fitted PIT (Cox-Snell) values ``a_i = F(Y_i | X_i)``."""
    params, y = _resolve(fitted, data)
    tables = _tables(params, y)
    return np.array([tables[i][y[i]] for i in range(y.size)])


def g_hat_loo(i: int, s: float, fitted, data) -> float:
    """Leave-one-out estimate ``G_i(s)`` evaluated at a single point.

    Evaluated literally through :func:`families.cdf_lower_inverse` and
    :func:`families.cdf` for every ``j != i``.
    """
    params, y = _resolve(fitted, data)
    n = y.size
    if n < 2:
        raise InsufficientDataError("the leave-one-out estimate needs n >= 2")
    if not 0.0 <= s <= 1.0:
        raise ParameterDomainError("s must lie in [0, 1]")
    acc = comp = 0.0
    for j in range(n):
        if j == i:
            continue
        row = params.row(j)
        b = fam.cdf_lower_inverse(row, s)
        acc, comp = _kahan_add(acc, comp, fam.cdf(row, b))
    return acc / (n - 1)


# ----------------------------------------------------------------------
# Standard DPIT
# ----------------------------------------------------------------------


def _loo_reference(targets, tables, bounded, shift=0, empty=NEG_INF):
    """Literal double loop: ``c_ij = F(F^(-1)(s_i|X_j) + shift | X_j)``.

    ``empty`` is the inverse used when no support point has ``F(k) <= s``.
    """
    n = len(targets)
    lists = [t.tolist() for t in tables]
    out = np.empty(n)
    for i in range(n):
        s = float(targets[i])
        acc = comp = 0.0
        for j in range(n):
            if j == i:
                continue
            tab = lists[j]
            if s >= 1.0:
                b = float(len(tab) - 1) if bounded else POS_INF
            else:
                k = bisect_right(tab, s)
                b = empty if k == 0 else float(k - 1)
            b = b + shift
            if b == NEG_INF or b < 0:
                c = 0.0
            elif b == POS_INF or int(b) >= len(tab):
                c = 1.0 if (bounded or b == POS_INF) else tab[-1]
            else:
                c = tab[int(b)]
            yv = c - comp
            t = acc + yv
            comp = (t - acc) - yv
            acc = t
        out[i] = acc / (n - 1)
    return out


def _loo_fast(targets, tables, shift=0, empty=NEG_INF):
    """Per-``j`` sweep of the step function over the sorted targets.

    Bounded tables only when ``shift > 0``.
    """
    n = len(targets)
    order = np.argsort(targets, kind="stable")
    s_sorted = targets[order]
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    at_one = s_sorted >= 1.0
    acc = np.zeros(n)
    comp = np.zeros(n)
    for j in range(n):
        tab = tables[j]
        k = np.searchsorted(tab, s_sorted, side="right")
        if shift:
            top = len(tab) - 1
            c = tab[np.minimum(k - 1 + shift, top)]
            if empty == NEG_INF:
                c = np.where(k > 0, c, 0.0)
        else:
            c = np.where(k > 0, tab[np.maximum(k - 1, 0)], 0.0)
        c[at_one] = 1.0
        own = rank[j]
        keep_acc, keep_comp = acc[own], comp[own]
        yv = c - comp
        t = acc + yv
        comp = (t - acc) - yv
        acc = t
        acc[own], comp[own] = keep_acc, keep_comp
    return acc[rank] / (n - 1)


def dpit_residuals(fitted, data, path: str = "fast") -> ResidualSet:
    """Standard DPIT residuals ``G_i(F(Y_i|X_i))`` for every observation.

    Parameters
    ----------
    fitted : FittedModel or FamilyParams
    data : Dataset or outcome vector
    path : ``"fast"`` or ``"reference"``
    """
    if path not in PATHS:
        raise ParameterDomainError(f"path must be one of {PATHS}")
    params, y = _resolve(fitted, data)
    if y.size < 2:
        raise InsufficientDataError("DPIT residuals need n >= 2")
    tables = _tables(params, y)
    a = np.array([tables[i][y[i]] for i in range(y.size)])
    if path == "reference":
        r = _loo_reference(a, tables, params.bounded)
    else:
        r = _loo_fast(a, tables)
    flags = np.full(y.size, STANDARD, dtype=object)
    return ResidualSet(np.clip(r, 0.0, 1.0), flags, params.family)


# ----------------------------------------------------------------------
# Altered residuals for the top category of bounded outcomes
# ----------------------------------------------------------------------


def altered_residuals(fitted, data, path: str = "fast", empty_inverse: str = "minus-one") -> ResidualSet:
    """Altered residuals ``H_i(F(Y_i - k_max | X_i))`` for ``Y_i = k_max``.

    ``H_i(s) = 1/(n-1) * sum_{j != i} F(F^(-1)(s|X_j) + k_max | X_j)``
    estimates ``H(s) = P(F(Y - k_max|X) <= s)``.  When ``s < F(0|X_j)`` the
    inverse has no support point; ``empty_inverse="minus-one"`` takes the
    supremum over all integers (``-1``, so the term is ``F(k_max - 1|X_j)``),
    which is what makes the combined residuals uniform under the true model.
    ``"neg-inf"`` uses ``-inf + k_max = -inf`` and the term is 0.

    The returned set is partial: ``index`` holds the observations at the top
    category.
    """
    if path not in PATHS:
        raise ParameterDomainError(f"path must be one of {PATHS}")
    if empty_inverse not in EMPTY_INVERSE:
        raise ParameterDomainError(f"empty_inverse must be one of {EMPTY_INVERSE}")
    params, y = _resolve(fitted, data)
    if not params.bounded:
        raise UnsupportedOperationError(
            f"altered residuals need a bounded outcome; {params.family} is unbounded"
        )
    n = y.size
    if n < 2:
        raise InsufficientDataError("altered residuals need n >= 2")
    kmax = params.kmax
    tables = _tables(params, y)
    top = np.flatnonzero(y == kmax)
    empty = -1.0 if empty_inverse == "minus-one" else NEG_INF
    # F(Y_i - k_max | X_i) = F(0 | X_i) at the top category
    s_all = np.array([t[0] for t in tables])
    if path == "reference":
        full = _loo_reference(s_all, tables, True, shift=kmax, empty=empty)
    else:
        full = _loo_fast(s_all, tables, shift=kmax, empty=empty)
    vals = np.clip(full[top], 0.0, 1.0)
    flags = np.full(top.size, ALTERED, dtype=object)
    return ResidualSet(vals, flags, params.family, index=top)


def combined_residuals(fitted, data, path: str = "fast", empty_inverse: str = "minus-one") -> ResidualSet:
    """Standard residuals below the top category, altered residuals at it.

    For unbounded (count) families this is :func:`dpit_residuals`.
    ``empty_inverse`` is passed to :func:`altered_residuals`.
    """
    params, y = _resolve(fitted, data)
    std = dpit_residuals(params, y, path=path)
    if not params.bounded:
        return std
    alt = altered_residuals(params, y, path=path, empty_inverse=empty_inverse)
    uniform = std.uniform.copy()
    flags = std.flags.copy()
    uniform[alt.index] = alt.uniform
    flags[alt.index] = ALTERED
    return ResidualSet(uniform, flags, params.family)


# ----------------------------------------------------------------------
# Normal scale
# ----------------------------------------------------------------------


def to_normal_scale(residuals: ResidualSet, clamp: bool = True) -> ResidualSet:
    """Attach ``Phi^{-1}`` of the uniform residuals.

    With ``clamp`` the residuals are first clipped to
    ``[1/(n+1), n/(n+1)]``; otherwise 0 and 1 map to ``-inf`` and ``inf``.
    """
    u = np.asarray(residuals.uniform, dtype=float)
    n = u.size
    if clamp:
        lo, hi = 1.0 / (n + 1), n / (n + 1.0)
        z = inverse_normal_cdf(np.clip(u, lo, hi)) if n else u.copy()
    else:
        z = np.empty(n)
        interior = (u > 0.0) & (u < 1.0)
        z[interior] = inverse_normal_cdf(u[interior]) if interior.any() else []
        z[u <= 0.0] = -math.inf
        z[u >= 1.0] = math.inf
    return replace(residuals, normal=np.atleast_1d(z), clamped=clamp)
