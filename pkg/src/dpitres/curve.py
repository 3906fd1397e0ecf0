"""Ordered curves: cumulative outcomes against cumulative fitted means.

Observations are sorted by a threshold variable ``Z``; the ``k``-th point is
the share of total fitted mean and the share of total outcome accumulated by
the first ``k`` observations.  A curve near the diagonal indicates an
adequate mean structure; above the diagonal, the mean is underestimated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DegenerateDataError, ParameterDomainError

TIE_BREAK = "stable: ties in Z keep original observation order"


@dataclass(frozen=True, eq=False)
class OrderedCurve:
    """``points[k] = (L2, L1)`` after the first ``k + 1`` sorted observations."""

    points: np.ndarray
    label: str
    max_deviation: float
    order: np.ndarray
    tie_break: str = TIE_BREAK

    @property
    def L2(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def L1(self) -> np.ndarray:
        return self.points[:, 1]

    def with_origin(self) -> np.ndarray:
        """Points with the ``(0, 0)`` anchor prepended, for drawing."""
        return np.vstack([[0.0, 0.0], self.points])


def ordered_curve(y, fitted_means, z, label: str = "Z") -> OrderedCurve:
    """Build the ordered curve of outcomes ``y`` against means under ``z``."""
    y = np.asarray(y, dtype=float)
    lam = np.asarray(fitted_means, dtype=float)
    z = np.asarray(z, dtype=float)
    if not (y.ndim == lam.ndim == z.ndim == 1) or not (y.size == lam.size == z.size):
        raise ParameterDomainError("y, fitted means and threshold must be equal-length vectors")
    if y.size == 0:
        raise ParameterDomainError("the ordered curve needs at least one observation")
    if np.any(np.isnan(z)):
        raise ParameterDomainError("threshold variable contains NaN")
    total_y, total_lam = y.sum(), lam.sum()
    if total_y <= 0 or total_lam <= 0:
        raise DegenerateDataError("sum of outcomes and sum of fitted means must be positive")
    order = np.argsort(z, kind="stable")
    L2 = np.cumsum(lam[order]) / total_lam
    L1 = np.cumsum(y[order]) / total_y
    L2[-1] = L1[-1] = 1.0
    points = np.column_stack([L2, L1])
    dev = float(np.max(np.abs(L1 - L2)))
    return OrderedCurve(points, label, dev, order)


def threshold_from(source, fitted=None, data: Dataset | None = None) -> tuple[np.ndarray, str]:
    """Resolve a threshold variable.

    ``source`` is ``"fitted"`` (the linear predictor of ``fitted``),
    ``"column:NAME"`` (a covariate of ``data``) or an explicit vector.
    Returns ``(z, label)``.
    """
    if isinstance(source, str):
        if source in ("fitted", "fitted_values"):
            if fitted is None or data is None:
                raise ParameterDomainError("fitted-value thresholds need a fitted model and data")
            return fitted.linear_predictor(data), "fitted values"
        if source.startswith("column:"):
            name = source.split(":", 1)[1]
            if data is None:
                raise ParameterDomainError("column thresholds need data")
            try:
                return data.column(name).copy(), name
            except KeyError:
                raise KeyError(f"unknown threshold column {name!r}") from None
        raise ParameterDomainError(f"unrecognised threshold source {source!r}")
    return np.asarray(source, dtype=float), "external"
