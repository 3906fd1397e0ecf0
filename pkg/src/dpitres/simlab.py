"""Simulation lab: data generators, a scenario runner and uniformity summaries.

Every scenario draws covariates and outcomes from independent counter-based
streams keyed by ``(base seed, replicate, purpose)``.  Scenarios that share
a generator and seed therefore see identical data, which is how true and
misspecified fits are compared on the same replicates.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import families as fam
from .curve import ordered_curve, threshold_from
from .data import Dataset, ModelSpec
from .dpit import combined_residuals, to_normal_scale
from .errors import DpitError, ParameterDomainError, ScenarioError
from .fit import fit_mle

FAILURE_LIMIT = 0.2
ECDF_POINTS = (0.1, 0.9)


# ----------------------------------------------------------------------
# Random streams
# ----------------------------------------------------------------------


def stream(seed: int, replicate: int, purpose: str) -> np.random.Generator:
    """Philox stream for one ``(seed, replicate, purpose)`` triple.

    The key is a hash of the triple, so adding a new purpose never shifts
    the draws of an existing one.
    """
    if seed < 0 or replicate < 0:
        raise ParameterDomainError("seeds and replicate indices must be nonnegative")
    digest = hashlib.blake2b(f"{seed}:{replicate}:{purpose}".encode(), digest_size=16).digest()
    key = np.frombuffer(digest, dtype="<u8")
    return np.random.Generator(np.random.Philox(key=key))


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Covariate:
    """Law of one generated covariate: ``normal(loc, scale)`` or ``bernoulli(prob)``."""

    name: str
    law: str
    args: tuple[float, ...]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.law == "normal":
            return rng.normal(self.args[0], self.args[1], n)
        if self.law == "bernoulli":
            return (rng.random(n) < self.args[0]).astype(float)
        raise ParameterDomainError(f"unknown covariate law {self.law!r}")


@dataclass(frozen=True)
class Generator:
    """True data-generating model.

    ``family`` is one of ``poisson``, ``negbin``, ``zip``, ``bernoulli``,
    ``ordinal`` or ``ordinal-nonprop``.  ``terms`` index the covariate
    columns multiplying ``beta`` (``a:b`` for products); count and binary
    models add an intercept.  ``zero_terms``/``zero_beta`` give the
    excess-zero logit, ``alpha`` the ordinal cutpoints and ``beta_upper``
    the slope of the upper cumulative logit in the non-proportional model.
    """

    family: str
    beta: tuple[float, ...]
    terms: tuple[str, ...]
    size: float | None = None
    zero_beta: tuple[float, ...] = ()
    zero_terms: tuple[str, ...] = ()
    alpha: tuple[float, ...] = ()
    beta_upper: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    """A named simulation design.

    ``fits`` maps a label to the model fitted on every replicate.
    ``outliers`` lists offsets added to that many distinct, randomly chosen
    observations.  ``thresholds`` are ordered-curve threshold sources
    (``fitted``, ``column:NAME`` or ``noise`` for an irrelevant standard
    normal variable).
    """

    id: str
    description: str
    generator: Generator
    covariates: tuple[Covariate, ...]
    fits: tuple[tuple[str, ModelSpec], ...]
    n: int = 500
    reps: int = 100
    seed: int = 0
    outliers: tuple[float, ...] = ()
    thresholds: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 10:
            raise ParameterDomainError("scenarios need n >= 10")
        if self.reps < 1:
            raise ParameterDomainError("scenarios need at least one replicate")
        if self.seed < 0:
            raise ParameterDomainError("seeds must be nonnegative")
        if len(self.outliers) > self.n:
            raise ParameterDomainError("more outliers than observations")
        if not self.fits:
            raise ParameterDomainError("a scenario needs at least one fitted model")

    def with_overrides(self, n=None, reps=None, seed=None) -> "ScenarioConfig":
        kw = {k: v for k, v in (("n", n), ("reps", reps), ("seed", seed)) if v is not None}
        return replace(self, **kw)


# ----------------------------------------------------------------------
# Built-in scenarios
# ----------------------------------------------------------------------

_COUNT_COVS = (Covariate("x1", "normal", (0.0, 1.0)), Covariate("x2", "bernoulli", (0.7,)))
_COUNT_BETA = (-2.0, 2.0, 1.0)
_ORD_COVS = (Covariate("x1", "normal", (2.0, 1.0)),)
_BIN_COVS = (Covariate("x1", "normal", (1.0, 1.0)), Covariate("x2", "bernoulli", (0.7,)))
_BIN_GEN = Generator("bernoulli", (-5.0, 2.0, 1.0, 3.0), ("x1", "x2", "x1:x2"))
_CURVE_COVS = (Covariate("x1", "normal", (0.0, 1.0)), Covariate("x2", "normal", (0.0, 1.0)))


def _spec(family, *terms, zero_terms=None):
    return ModelSpec(family, terms, zero_terms=zero_terms)


_NB_GEN = Generator("negbin", _COUNT_BETA, ("x1", "x2"), size=2.0)
_POIS_GEN = Generator("poisson", _COUNT_BETA, ("x1", "x2"))
_ZIP_GEN = Generator("zip", _COUNT_BETA, ("x1", "x2"), zero_beta=(-2.0, 2.0), zero_terms=("x1",))
_ORD_GEN = Generator("ordinal", (3.0,), ("x1",), alpha=(1.0, 4.0))
_ORD_NP_GEN = Generator("ordinal-nonprop", (3.0,), ("x1",), alpha=(1.0, 4.0), beta_upper=1.0)

SCENARIOS: dict[str, ScenarioConfig] = {
    s.id: s
    for s in (
        ScenarioConfig("nb-true", "negative binomial data, negative binomial fit",
                       _NB_GEN, _COUNT_COVS, (("negbin", _spec("negbin", "x1", "x2")),)),
        ScenarioConfig("nb-poisson", "negative binomial data, Poisson fit (overdispersion)",
                       _NB_GEN, _COUNT_COVS, (("poisson", _spec("poisson", "x1", "x2")),)),
        ScenarioConfig("nb-missing", "negative binomial data, fit without x2",
                       _NB_GEN, _COUNT_COVS, (("negbin", _spec("negbin", "x1")),)),
        ScenarioConfig("poisson-true", "Poisson data, Poisson fit",
                       _POIS_GEN, _COUNT_COVS, (("poisson", _spec("poisson", "x1", "x2")),)),
        ScenarioConfig("zip-true", "zero-inflated Poisson data, zero-inflated Poisson fit",
                       _ZIP_GEN, _COUNT_COVS,
                       (("zip", _spec("zip", "x1", "x2", zero_terms=("x1",))),)),
        ScenarioConfig("zip-poisson", "zero-inflated Poisson data, Poisson fit",
                       _ZIP_GEN, _COUNT_COVS, (("poisson", _spec("poisson", "x1", "x2")),)),
        ScenarioConfig("ordinal-true", "proportional-odds data, proportional-odds fit",
                       _ORD_GEN, _ORD_COVS, (("ordinal", _spec("ordinal", "x1")),)),
        ScenarioConfig("ordinal-nonprop", "non-proportional ordinal data, proportional-odds fit",
                       _ORD_NP_GEN, _ORD_COVS, (("ordinal", _spec("ordinal", "x1")),)),
        ScenarioConfig("binary-true", "logistic data with interaction, full fit",
                       _BIN_GEN, _BIN_COVS,
                       (("bernoulli", _spec("bernoulli", "x1", "x2", "x1:x2")),)),
        ScenarioConfig("binary-missing", "logistic data, fit without x2 and the interaction",
                       _BIN_GEN, _BIN_COVS, (("bernoulli", _spec("bernoulli", "x1")),)),
        ScenarioConfig("poisson-outliers", "Poisson data with three inflated outcomes",
                       _POIS_GEN, _COUNT_COVS, (("poisson", _spec("poisson", "x1", "x2")),),
                       outliers=(10.0, 15.0, 20.0)),
        ScenarioConfig("poisson-curve", "Poisson data, ordered curves of full and reduced fits",
                       Generator("poisson", (0.0, 2.0, 1.0), ("x1", "x2")), _CURVE_COVS,
                       (("true", _spec("poisson", "x1", "x2")), ("missing", _spec("poisson", "x1"))),
                       thresholds=("fitted", "column:x2", "noise")),
        ScenarioConfig("binary-curve", "logistic data, ordered curves of full and reduced fits",
                       _BIN_GEN, _BIN_COVS,
                       (("true", _spec("bernoulli", "x1", "x2", "x1:x2")),
                        ("missing", _spec("bernoulli", "x1"))),
                       thresholds=("fitted", "column:x2", "noise")),
    )
}


def get_scenario(scenario) -> ScenarioConfig:
    if isinstance(scenario, ScenarioConfig):
        return scenario
    try:
        return SCENARIOS[scenario]
    except KeyError:
        raise ParameterDomainError(
            f"unknown scenario {scenario!r}; built-in ids: {', '.join(SCENARIOS)}"
        ) from None


# ----------------------------------------------------------------------
# Generation
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Replicate:
    """A generated dataset with its ground truth.

    ``truth`` is ``None`` for generators outside the fitted families
    (non-proportional ordinal).  ``outlier_index`` lists the inflated rows
    in the order of ``ScenarioConfig.outliers``; ``clipped`` counts rows
    whose cumulative probabilities crossed and were clipped.
    """

    data: Dataset
    truth: fam.FamilyParams | None
    outlier_index: np.ndarray
    clipped: int = 0


def _linear(data: Dataset, terms, beta, intercept=True):
    X, _ = data.design(terms, intercept=intercept)
    return X @ np.asarray(beta, dtype=float)


def _outcomes(gen: Generator, data: Dataset, rng):
    """Draw outcomes; returns ``(y, truth, clipped)``."""
    if gen.family == "ordinal-nonprop":
        x = data.column(gen.terms[0])
        low = expit(gen.alpha[0] - gen.beta[0] * x)
        high = expit(gen.alpha[1] - gen.beta_upper * x)
        crossed = high < low
        high = np.maximum(high, low)
        u = rng.random(data.n)
        y = (u > low).astype(np.int64) + (u > high).astype(np.int64)
        return y, None, int(crossed.sum())
    if gen.family == "ordinal":
        truth = fam.OrdinalLogit(_linear(data, gen.terms, gen.beta, False), np.asarray(gen.alpha))
    elif gen.family == "bernoulli":
        truth = fam.Bernoulli(expit(_linear(data, gen.terms, gen.beta)))
    elif gen.family == "poisson":
        truth = fam.Poisson(np.exp(_linear(data, gen.terms, gen.beta)))
    elif gen.family == "negbin":
        truth = fam.NegBinomial(np.exp(_linear(data, gen.terms, gen.beta)), gen.size)
    elif gen.family == "zip":
        p0 = expit(_linear(data, gen.zero_terms, gen.zero_beta))
        truth = fam.ZeroInflatedPoisson(p0, np.exp(_linear(data, gen.terms, gen.beta)))
    else:
        raise ParameterDomainError(f"unknown generator family {gen.family!r}")
    return fam.sample(truth, rng), truth, 0


def generate_replicate(scenario, replicate: int) -> Replicate:
    """Dataset plus truth for one replicate; deterministic in ``(seed, replicate)``."""
    cfg = get_scenario(scenario)
    n, seed = cfg.n, cfg.seed
    cov_rng = stream(seed, replicate, "covariates")
    cols = {c.name: c.draw(cov_rng, n) for c in cfg.covariates}
    if any(t == "noise" for t in cfg.thresholds):
        cols["noise"] = stream(seed, replicate, "noise").normal(0.0, 1.0, n)
    data = Dataset.from_columns(np.zeros(n, dtype=np.int64), **cols)
    y, truth, clipped = _outcomes(cfg.generator, data, stream(seed, replicate, "outcome"))
    idx = np.empty(0, dtype=np.int64)
    if cfg.outliers:
        idx = stream(seed, replicate, "outliers").choice(n, size=len(cfg.outliers), replace=False)
        y = y.copy()
        y[idx] += np.asarray(cfg.outliers, dtype=np.int64)
    data = Dataset(y, data.X, data.names)
    return Replicate(data, truth, idx, clipped)


def generate(scenario, replicate: int) -> Dataset:
    """The dataset of one replicate."""
    return generate_replicate(scenario, replicate).data


# ----------------------------------------------------------------------
# Summaries
# ----------------------------------------------------------------------


def ks_uniform(residuals) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and U(0, 1)."""
    u = np.sort(np.asarray(residuals, dtype=float))
    n = u.size
    if n == 0:
        raise ParameterDomainError("the KS distance needs at least one value")
    if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
        raise ParameterDomainError("KS distance to U(0,1) needs values in [0, 1]")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def ecdf_deviation(residuals, s: float) -> float:
    """``ECDF(s) - s``."""
    u = np.asarray(residuals, dtype=float)
    return float(np.count_nonzero(u <= s) / u.size - s)


def tail_deviations(residuals) -> tuple[float, float]:
    """Sorted residual minus plotting position at ranks ``ceil(0.05 n)`` and ``floor(0.95 n)``."""
    u = np.sort(np.asarray(residuals, dtype=float))
    n = u.size
    out = []
    for k in (math.ceil(0.05 * n), math.floor(0.95 * n)):
        k = min(max(k, 1), n)
        out.append(float(u[k - 1] - (k - 0.5) / n))
    return out[0], out[1]


def auxiliary_residuals(truth: fam.FamilyParams, fitted, data) -> np.ndarray:
    """Residuals transformed by the true PIT distribution instead of its estimate.

    ``r_i = 1/n * sum_j F(F_hat^(-1)(a_i|X_j) | X_j)`` with ``a_i`` the fitted
    PIT value and ``F`` the true conditional CDF; all rows are averaged
    since no estimation bias arises from the true ``F``.
    """
    if not isinstance(truth, fam.FamilyParams):
        raise ParameterDomainError("auxiliary residuals need the true per-row parameters")
    fparams = fitted if isinstance(fitted, fam.FamilyParams) else fitted.conditional_params(data)
    y = data.y if isinstance(data, Dataset) else np.asarray(data, dtype=np.int64)
    n = y.size
    if len(truth) != n or len(fparams) != n:
        raise ParameterDomainError("true and fitted parameters need one row per observation")
    ftabs = fparams.cdf_tables(min_len=y + 1)
    a = np.array([ftabs[i][y[i]] for i in range(n)])
    at_one = a >= 1.0
    acc = np.zeros(n)
    for j in range(n):
        ftab = ftabs[j]
        ttab = truth.table(j, min_len=len(ftab))
        k = np.searchsorted(ftab, a, side="right")
        c = np.where(k > 0, ttab[np.maximum(k - 1, 0)], 0.0)
        c[at_one] = 1.0
        acc += c
    return np.clip(acc / n, 0.0, 1.0)


# ----------------------------------------------------------------------
# Runner
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Per-replicate summaries of one scenario run.

    ``records`` holds one dict per successful ``(replicate, fit)`` pair,
    sorted by replicate then fit order; ``failures`` one dict per failed
    fit.  ``seeds`` records the base seed and replicate indices used.
    """

    config: ScenarioConfig
    records: list[dict]
    failures: list[dict]
    seeds: dict = field(default_factory=dict)

    def values(self, key: str, fit: str | None = None) -> np.ndarray:
        """Column ``key`` over the records of ``fit`` (default: the first fit)."""
        label = fit if fit is not None else self.config.fits[0][0]
        return np.array([r[key] for r in self.records if r["fit"] == label], dtype=float)

    def summary(self) -> dict:
        """Aggregate statistics per fit, JSON-serialisable."""
        out = {
            "scenario": self.config.id,
            "n": self.config.n,
            "reps": self.config.reps,
            "seed": self.config.seed,
            "failures": len(self.failures),
            "fits": {},
        }
        for label, _ in self.config.fits:
            recs = [r for r in self.records if r["fit"] == label]
            agg = {"replicates": len(recs)}
            if recs:
                keys = [k for k, v in recs[0].items() if isinstance(v, float)]
                for k in keys:
                    agg[f"mean_{k}"] = float(np.mean([r[k] for r in recs]))
                agg["grand_mean"] = agg.pop("mean_mean")
                agg["grand_variance"] = float(
                    np.mean([r["var"] + (r["mean"] - agg["grand_mean"]) ** 2 for r in recs])
                )
            out["fits"][label] = agg
        return out


def _summarise(cfg: ScenarioConfig, rep: Replicate, label: str, spec: ModelSpec, replicate: int):
    data = rep.data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fitted = fit_mle(data, spec)
    if not fitted.converged:
        raise DpitError(f"fit did not converge (score norm {fitted.grad_norm:.3g})")
    res = to_normal_scale(combined_residuals(fitted, data), clamp=False)
    u = res.uniform
    rec = {
        "replicate": replicate,
        "fit": label,
        "n_iter": int(fitted.n_iter),
        "grad_norm": float(fitted.grad_norm),
        "mean": float(np.mean(u)),
        "var": float(np.var(u)),
        "ks": ks_uniform(u),
        "ecdf_dev_0.1": ecdf_deviation(u, ECDF_POINTS[0]),
        "ecdf_dev_0.9": ecdf_deviation(u, ECDF_POINTS[1]),
    }
    rec["tail_dev_low"], rec["tail_dev_high"] = tail_deviations(u)
    se = fitted.coef_std_errors
    for name, b, s in zip(fitted.names, fitted.coef, se):
        rec[f"coef[{name}]"] = float(b)
        rec[f"se[{name}]"] = float(s)
    if fitted.size is not None:
        rec["size"] = float(fitted.size)
    if rep.outlier_index.size:
        # rank 1 is the largest residual; ties share the best rank
        order = -u
        ranks = [int(np.count_nonzero(order < order[i])) + 1 for i in rep.outlier_index]
        rec["outlier_max_rank"] = max(ranks)
    if cfg.thresholds:
        lam = fitted.fitted_means(data)
        for source in cfg.thresholds:
            z = data.column("noise") if source == "noise" else threshold_from(source, fitted, data)[0]
            rec[f"curve_D[{source}]"] = ordered_curve(data.y, lam, z).max_deviation
    if rep.clipped:
        rec["clipped"] = rep.clipped
    return rec


def run_scenario(scenario, n=None, reps=None, seed=None) -> ScenarioResult:
    """Generate, fit and summarise every replicate of a scenario.

    Fit failures are recorded and skipped; more than 20% failed fits raise
    :class:`ScenarioError`.
    """
    cfg = get_scenario(scenario).with_overrides(n=n, reps=reps, seed=seed)
    records, failures = [], []
    for r in range(cfg.reps):
        rep = generate_replicate(cfg, r)
        for label, spec in cfg.fits:
            try:
                records.append(_summarise(cfg, rep, label, spec, r))
            except (DpitError, np.linalg.LinAlgError) as exc:
                failures.append({"replicate": r, "fit": label, "error": f"{type(exc).__name__}: {exc}"})
    attempts = cfg.reps * len(cfg.fits)
    if len(failures) > FAILURE_LIMIT * attempts:
        raise ScenarioError(
            f"scenario {cfg.id}: {len(failures)} of {attempts} fits failed; first: {failures[0]['error']}"
        )
    return ScenarioResult(cfg, records, failures, {"seed": cfg.seed, "replicates": list(range(cfg.reps))})
