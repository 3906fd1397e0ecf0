"""Conditional discrete distributions used by the regression families.

Every family is a frozen dataclass holding per-observation parameter arrays
(scalars broadcast to a single row).  Outcomes are represented as floats so
that the extended values ``NEG_INF`` and ``POS_INF`` compose with ordinary
arithmetic: ``NEG_INF + k_max`` stays ``NEG_INF``.

The distribution function of each row is materialised once as a cumulative
table ``F(0), F(1), ..., F(K)``.  All CDF evaluations, generalized inverses
and samples read from that table, so that a value computed on one side of a
comparison is bit-identical to the value used on the other side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np
from scipy.special import expit, gammaln, xlogy

from .errors import ParameterDomainError

NEG_INF = -math.inf
POS_INF = math.inf

# Truncation point for unbounded support: stop once the remaining tail mass
# falls below this.
TAIL_MASS = 1e-14

FAMILIES = ("poisson", "negbin", "bernoulli", "ordinal", "zip")


def _as_float_array(name, value):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise ParameterDomainError(f"{name} must be a scalar or a 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ParameterDomainError(f"{name} must be finite")
    return arr


def _broadcast(*arrays):
    try:
        return np.broadcast_arrays(*arrays)
    except ValueError as exc:
        raise ParameterDomainError(f"parameter lengths do not match: {exc}") from None


def _count_table(log_increment, log_p0, mean, sd, min_len):
    """Cumulative table of an unbounded count law from a log-pmf recurrence.

    ``log_increment(k)`` returns ``log p(k) - log p(k-1)`` for ``k = 1..m``.
    """
    m = max(int(mean + 12.0 * sd + 30.0), min_len)
    while True:
        k = np.arange(1, m + 1, dtype=float)
        logp = np.empty(m + 1)
        logp[0] = log_p0
        logp[1:] = log_p0 + np.cumsum(log_increment(k))
        pmf = np.exp(logp)
        cum = np.minimum(np.cumsum(pmf), 1.0)
        # geometric bound on the remaining tail once the pmf ratio is below 1;
        # it guards against rounding in the running sum stalling near 1
        ratio = np.exp(np.minimum(np.diff(logp, prepend=logp[0]), 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(ratio < 1.0, pmf * ratio / (1.0 - ratio), np.inf)
        past_mean = np.arange(m + 1) >= mean
        done = past_mean & ((1.0 - cum < TAIL_MASS) | (tail < TAIL_MASS * 1e-2))
        hit = np.flatnonzero(done)
        if hit.size:
            stop = max(int(hit[0]) + 1, min_len)
            return cum[:stop]
        if m > 50_000_000:
            return cum
        m *= 2


@dataclass(frozen=True, eq=False)
class FamilyParams:
    """Per-observation parameters of a discrete conditional distribution.

    Subclasses define ``family``, ``kmax`` (``None`` for unbounded support),
    ``_table_row`` and the moment formulas.
    """

    family: ClassVar[str] = ""
    _table_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __len__(self):
        return self.size_n

    @property
    def size_n(self) -> int:
        raise NotImplementedError

    @property
    def kmax(self) -> int | None:
        return None

    @property
    def bounded(self) -> bool:
        return self.kmax is not None

    def row(self, i: int) -> "FamilyParams":
        raise NotImplementedError

    def row_columns(self) -> tuple[np.ndarray, ...]:
        """Per-row parameter arrays; rows with equal entries share a distribution."""
        raise NotImplementedError

    def _table_row(self, i: int, min_len: int) -> np.ndarray:
        raise NotImplementedError

    def table(self, i: int, min_len: int = 0) -> np.ndarray:
        """Cumulative probabilities ``F(0|x_i), ..., F(K|x_i)`` of row ``i``.

        The table has at least ``min_len`` entries.  Unbounded families stop
        once the tail mass drops below ``TAIL_MASS``; bounded families end
        with exactly 1.0 at ``k_max``.
        """
        cached = self._table_cache.get(i)
        if cached is not None and len(cached) >= min_len:
            return cached
        tab = self._table_row(i, min_len)
        if cached is None or len(tab) > len(cached):
            self._table_cache[i] = tab
        return tab

    def cdf_tables(self, min_len=None) -> list[np.ndarray]:
        """Tables for every row; ``min_len`` may be a per-row array."""
        n = self.size_n
        if min_len is None:
            lens = np.zeros(n, dtype=int)
        else:
            lens = np.broadcast_to(np.asarray(min_len, dtype=int), (n,))
        return [self.table(i, int(lens[i])) for i in range(n)]

    # Moments ------------------------------------------------------------

    def mean(self) -> np.ndarray:
        raise NotImplementedError

    def variance(self) -> np.ndarray:
        raise NotImplementedError

    def logpmf(self, y) -> np.ndarray:
        """Vectorised log-probabilities of integer outcomes ``y`` (one per row)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Poisson(FamilyParams):
    rate: np.ndarray = 1.0
    family: ClassVar[str] = "poisson"

    def __post_init__(self):
        rate = _as_float_array("rate", self.rate)
        if np.any(rate <= 0):
            raise ParameterDomainError("Poisson rate must be positive")
        object.__setattr__(self, "rate", rate)

    @property
    def size_n(self):
        return self.rate.shape[0]

    def row(self, i):
        return Poisson(self.rate[i])

    def row_columns(self):
        return (self.rate,)

    def _table_row(self, i, min_len):
        lam = float(self.rate[i])
        log_lam = math.log(lam)
        return _count_table(
            lambda k: log_lam - np.log(k), -lam, lam, math.sqrt(lam), min_len
        )

    def mean(self):
        return self.rate.copy()

    def variance(self):
        return self.rate.copy()

    def logpmf(self, y):
        y = np.asarray(y, dtype=float)
        return xlogy(y, self.rate) - self.rate - gammaln(y + 1.0)


@dataclass(frozen=True, eq=False)
class NegBinomial(FamilyParams):
    """Negative binomial with mean ``mu`` and size ``size``.

    Variance is ``mu + mu**2 / size``.
    """

    mu: np.ndarray = 1.0
    size: np.ndarray = 1.0
    family: ClassVar[str] = "negbin"

    def __post_init__(self):
        mu = _as_float_array("mean", self.mu)
        theta = _as_float_array("size", self.size)
        if np.any(mu <= 0):
            raise ParameterDomainError("negative binomial mean must be positive")
        if np.any(theta <= 0):
            raise ParameterDomainError("negative binomial size must be positive")
        mu, theta = _broadcast(mu, theta)
        object.__setattr__(self, "mu", np.array(mu))
        object.__setattr__(self, "size", np.array(theta))

    @property
    def size_n(self):
        return self.mu.shape[0]

    def row(self, i):
        return NegBinomial(self.mu[i], self.size[i])

    def row_columns(self):
        return (self.mu, self.size)

    def _table_row(self, i, min_len):
        mu = float(self.mu[i])
        theta = float(self.size[i])
        log_ratio = math.log(mu) - math.log(theta + mu)
        log_p0 = -theta * math.log1p(mu / theta)
        sd = math.sqrt(mu + mu * mu / theta)
        return _count_table(
            lambda k: np.log(k - 1.0 + theta) - np.log(k) + log_ratio,
            log_p0,
            mu,
            sd,
            min_len,
        )

    def mean(self):
        return self.mu.copy()

    def variance(self):
        return self.mu + self.mu**2 / self.size

    def logpmf(self, y):
        y = np.asarray(y, dtype=float)
        mu, theta = self.mu, self.size
        return (
            gammaln(y + theta)
            - gammaln(theta)
            - gammaln(y + 1.0)
            - theta * np.log1p(mu / theta)
            + xlogy(y, mu)
            - xlogy(y, theta + mu)
        )


@dataclass(frozen=True, eq=False)
class Bernoulli(FamilyParams):
    prob: np.ndarray = 0.5
    family: ClassVar[str] = "bernoulli"

    def __post_init__(self):
        p = _as_float_array("prob", self.prob)
        if np.any((p <= 0) | (p >= 1)):
            raise ParameterDomainError("Bernoulli probability must lie in (0, 1)")
        object.__setattr__(self, "prob", p)

    @property
    def size_n(self):
        return self.prob.shape[0]

    @property
    def kmax(self):
        return 1

    def row(self, i):
        return Bernoulli(self.prob[i])

    def row_columns(self):
        return (self.prob,)

    def _table_row(self, i, min_len):
        return np.array([1.0 - self.prob[i], 1.0])

    def mean(self):
        return self.prob.copy()

    def variance(self):
        return self.prob * (1.0 - self.prob)

    def logpmf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y == 1, np.log(self.prob), np.log1p(-self.prob))


@dataclass(frozen=True, eq=False)
class OrdinalLogit(FamilyParams):
    """Cumulative-logit law: ``P(Y <= k | x) = expit(cutpoints[k] - eta)``.

    Categories are coded ``0..k_max`` with ``k_max = len(cutpoints)``.  No
    cutpoints is the degenerate single-category law.
    """

    eta: np.ndarray = 0.0
    cutpoints: np.ndarray = (0.0,)
    family: ClassVar[str] = "ordinal"

    def __post_init__(self):
        eta = _as_float_array("eta", self.eta)
        cut = _as_float_array("cutpoints", self.cutpoints)
        if np.any(np.diff(cut) <= 0):
            raise ParameterDomainError("cutpoints must be strictly increasing")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "cutpoints", cut)

    @property
    def size_n(self):
        return self.eta.shape[0]

    @property
    def kmax(self):
        return int(self.cutpoints.size)

    def row(self, i):
        return OrdinalLogit(self.eta[i], self.cutpoints)

    def row_columns(self):
        return (self.eta,)

    def _table_row(self, i, min_len):
        return np.append(expit(self.cutpoints - self.eta[i]), 1.0)

    @cached_property
    def _cum(self):
        return np.hstack(
            [expit(self.cutpoints[None, :] - self.eta[:, None]), np.ones((self.size_n, 1))]
        )

    @cached_property
    def probs(self) -> np.ndarray:
        """``n x (k_max + 1)`` category probabilities."""
        return np.diff(self._cum, axis=1, prepend=0.0)

    def mean(self):
        return self.probs @ np.arange(self.kmax + 1, dtype=float)

    def variance(self):
        k = np.arange(self.kmax + 1, dtype=float)
        return self.probs @ k**2 - self.mean() ** 2

    def logpmf(self, y):
        y = np.asarray(y, dtype=int)
        return np.log(self.probs[np.arange(self.size_n), y])


@dataclass(frozen=True, eq=False)
class ZeroInflatedPoisson(FamilyParams):
    zero_prob: np.ndarray = 0.0
    rate: np.ndarray = 1.0
    family: ClassVar[str] = "zip"

    def __post_init__(self):
        p0 = _as_float_array("zero_prob", self.zero_prob)
        rate = _as_float_array("rate", self.rate)
        if np.any((p0 < 0) | (p0 >= 1)):
            raise ParameterDomainError("excess-zero probability must lie in [0, 1)")
        if np.any(rate <= 0):
            raise ParameterDomainError("Poisson rate must be positive")
        p0, rate = _broadcast(p0, rate)
        object.__setattr__(self, "zero_prob", np.array(p0))
        object.__setattr__(self, "rate", np.array(rate))

    @property
    def size_n(self):
        return self.rate.shape[0]

    def row(self, i):
        return ZeroInflatedPoisson(self.zero_prob[i], self.rate[i])

    def row_columns(self):
        return (self.zero_prob, self.rate)

    def _table_row(self, i, min_len):
        p0 = float(self.zero_prob[i])
        base = Poisson(self.rate[i])._table_row(0, min_len)
        return np.minimum(p0 + (1.0 - p0) * base, 1.0)

    def mean(self):
        return (1.0 - self.zero_prob) * self.rate

    def variance(self):
        return (1.0 - self.zero_prob) * self.rate * (1.0 + self.rate * self.zero_prob)

    def logpmf(self, y):
        y = np.asarray(y, dtype=float)
        p0, lam = self.zero_prob, self.rate
        pois = xlogy(y, lam) - lam - gammaln(y + 1.0)
        zero = np.log(p0 + (1.0 - p0) * np.exp(-lam))
        return np.where(y == 0, zero, np.log1p(-p0) + pois)


# ----------------------------------------------------------------------
# Table lookups shared by every caller
# ----------------------------------------------------------------------


def table_cdf(tab: np.ndarray, y: float, bounded: bool) -> float:
    """``F(y)`` read from a cumulative table, for extended outcomes ``y``."""
    if y == NEG_INF or y < 0:
        return 0.0
    if y == POS_INF:
        return 1.0
    k = int(math.floor(y))
    if k < len(tab):
        return float(tab[k])
    return 1.0 if bounded else float(tab[-1])


def _row_pairs(params, values):
    values = np.asarray(values, dtype=float)
    n = len(params)
    if values.ndim == 0:
        return np.arange(n), np.full(n, float(values)), True
    if n == 1:
        return np.zeros(values.shape[0], dtype=int), values, False
    if values.shape[0] != n:
        raise ParameterDomainError(
            f"got {values.shape[0]} values for {n} parameter rows"
        )
    return np.arange(n), values, False


def _squeeze(out, scalar_input, n):
    if scalar_input and n == 1:
        return float(out[0])
    return out


def cdf(params: FamilyParams, y):
    """Distribution function ``F(y | x)`` at extended outcomes ``y``.

    ``y`` is a scalar (broadcast over rows) or one value per row.  Returns 0
    at ``NEG_INF`` and any negative ``y``, 1 at ``POS_INF``.
    """
    rows, ys, scalar = _row_pairs(params, y)
    if np.any(np.isnan(ys)):
        raise ParameterDomainError("outcome must not be NaN")
    out = np.empty(ys.shape[0])
    for idx, (i, v) in enumerate(zip(rows, ys)):
        if math.isfinite(v) and v >= 0:
            tab = params.table(int(i), int(v) + 1)
        else:
            tab = params.table(int(i))
        out[idx] = table_cdf(tab, v, params.bounded)
    return _squeeze(out, scalar, len(params))


def pmf(params: FamilyParams, k):
    """``P(Y = k | x) = F(k) - F(k - 1)`` for nonnegative integers ``k``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0) or np.any(k != np.floor(k)):
        raise ParameterDomainError("pmf needs nonnegative integers")
    diff = np.asarray(cdf(params, k)) - np.asarray(cdf(params, k - 1.0))
    out = np.maximum(diff, 0.0)
    return float(out) if out.ndim == 0 else out


def table_lower_inverse(tab: np.ndarray, s: float, bounded: bool) -> float:
    """``sup{k : F(k) <= s}`` over a table, ``NEG_INF`` if empty."""
    if s >= 1.0:
        return float(len(tab) - 1) if bounded else POS_INF
    count = int(np.searchsorted(tab, s, side="right"))
    return NEG_INF if count == 0 else float(count - 1)


def cdf_lower_inverse(params: FamilyParams, s):
    """Lower generalized inverse ``sup{k in N : F(k|x) <= s}``.

    Returns ``NEG_INF`` when no support point qualifies (in particular at
    ``s = 0``), ``POS_INF`` for unbounded families at ``s = 1`` and ``k_max``
    for bounded families at ``s = 1``.
    """
    rows, ss, scalar = _row_pairs(params, s)
    if np.any(np.isnan(ss)) or np.any((ss < 0) | (ss > 1)):
        raise ParameterDomainError("s must lie in [0, 1]")
    out = np.empty(ss.shape[0])
    for idx, (i, v) in enumerate(zip(rows, ss)):
        tab = params.table(int(i))
        if not params.bounded and v < 1.0:
            # extend past the truncation point when s sits in the far tail
            while tab[-1] <= v and tab[-1] < 1.0:
                longer = params.table(int(i), 2 * len(tab))
                if len(longer) == len(tab):
                    break
                tab = longer
        out[idx] = table_lower_inverse(tab, float(v), params.bounded)
    return _squeeze(out, scalar, len(params))


def mean(params: FamilyParams) -> np.ndarray:
    """Conditional means; ordinal categories use their integer codes."""
    return params.mean()


def sample(params: FamilyParams, rng: np.random.Generator) -> np.ndarray:
    """One inverse-CDF draw per row.

    Rows with identical parameters share one table lookup pass.
    """
    n = len(params)
    u = rng.random(n)
    out = np.empty(n, dtype=np.int64)
    cols = np.column_stack([np.broadcast_to(c, (n,)) for c in params.row_columns()])
    _, first, inverse = np.unique(cols, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    order = np.argsort(inverse, kind="stable")
    bounds = np.flatnonzero(np.diff(inverse[order])) + 1
    for g, members in enumerate(np.split(order, bounds)):
        tab = params.table(int(first[g]))
        out[members] = np.searchsorted(tab, u[members], side="left")
    return out
