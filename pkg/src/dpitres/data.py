"""Datasets and model specifications."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterDomainError
from .families import FAMILIES


@dataclass
class Dataset:
    """Outcome vector plus named, already-encoded covariate columns.

    Parameters
    ----------
    y : array of nonnegative integers
    X : ``n x p`` covariate matrix
    names : column names of ``X``
    factors : maps a categorical variable to the dummy columns encoding it,
        so a model term naming the variable expands to all of its dummies.
    outcome : name of the outcome column (used for reporting only).
    """

    y: np.ndarray
    X: np.ndarray
    names: list[str]
    factors: dict[str, list[str]] = field(default_factory=dict)
    outcome: str = "y"

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1:
            raise ParameterDomainError("outcome must be one-dimensional")
        if y.size and (not np.all(np.isfinite(y)) or np.any(y != np.floor(y))):
            raise ParameterDomainError("outcome must contain integers only")
        if np.any(y < 0):
            raise ParameterDomainError("outcome must be nonnegative")
        self.y = y.astype(np.int64)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.size == 0:
            X = np.zeros((self.y.size, 0))
        if X.shape[0] != self.y.size:
            raise ParameterDomainError("covariates and outcome differ in length")
        if not np.all(np.isfinite(X)):
            raise ParameterDomainError("covariates contain missing or non-finite values")
        if len(self.names) != X.shape[1]:
            raise ParameterDomainError("one name per covariate column is required")
        self.X = X
        self.names = list(self.names)

    @classmethod
    def from_columns(cls, y, outcome="y", **columns) -> "Dataset":
        names = list(columns)
        X = np.column_stack([np.asarray(columns[c], dtype=float) for c in names]) if names else None
        return cls(y=y, X=X if X is not None else np.zeros((len(y), 0)), names=names, outcome=outcome)

    @property
    def n(self) -> int:
        return int(self.y.size)

    def column(self, name: str) -> np.ndarray:
        """A single column, or the elementwise product for ``a:b`` terms."""
        if ":" in name:
            out = np.ones(self.n)
            for part in name.split(":"):
                out = out * self.column(part.strip())
            return out
        try:
            return self.X[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"unknown column {name!r}") from None

    def expand(self, term: str) -> list[str]:
        """Encoded column names a model term refers to."""
        if ":" in term:
            parts = [self.expand(p.strip()) for p in term.split(":")]
            combos = [""]
            for cols in parts:
                combos = [f"{a}:{b}" if a else b for a in combos for b in cols]
            return combos
        if term in self.factors:
            return list(self.factors[term])
        if term not in self.names:
            raise KeyError(f"unknown column {term!r}")
        return [term]

    def design(self, terms, intercept=True) -> tuple[np.ndarray, list[str]]:
        """Model matrix for ``terms`` with an optional leading intercept."""
        names = ["(Intercept)"] if intercept else []
        cols = [np.ones(self.n)] if intercept else []
        for term in terms:
            for col in self.expand(term):
                names.append(col)
                cols.append(self.column(col))
        if not cols:
            return np.zeros((self.n, 0)), names
        return np.column_stack(cols), names

    def subset(self, index) -> "Dataset":
        return Dataset(self.y[index], self.X[index], self.names, dict(self.factors), self.outcome)


@dataclass(frozen=True)
class ModelSpec:
    """Family plus covariate terms.

    Links are fixed per family: log for Poisson, negative binomial and the
    zero-inflated count part; logit for Bernoulli, the ordinal model and the
    excess-zero part.  Ordinal models carry no intercept (the cutpoints take
    its place).
    """

    family: str
    terms: tuple[str, ...] = ()
    zero_terms: tuple[str, ...] | None = None
    intercept: bool = True
    zero_intercept: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterDomainError(
                f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}"
            )
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.family == "zip":
            zt = () if self.zero_terms is None else tuple(self.zero_terms)
            object.__setattr__(self, "zero_terms", zt)
        elif self.zero_terms:
            raise ParameterDomainError("zero-model terms only apply to the zip family")

    def mean_design(self, data: Dataset):
        return data.design(self.terms, intercept=self.intercept and self.family != "ordinal")

    def zero_design(self, data: Dataset):
        return data.design(self.zero_terms or (), intercept=self.zero_intercept)
