"""QQ data and SVG figures for residuals and ordered curves.

Figures are drawn on a bare :class:`matplotlib.figure.Figure` (no pyplot
state) with a fixed SVG hash salt and no date metadata, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import matplotlib
from matplotlib.figure import Figure

from .curve import OrderedCurve
from .errors import ParameterDomainError
from .normal import inverse_normal_cdf

SCALES = ("uniform", "normal")

_SVG_RC = {
    "svg.hashsalt": "dpitres",
    "svg.fonttype": "none",
    "path.simplify": False,
}


@dataclass(frozen=True, eq=False)
class QQData:
    """Sorted residuals against theoretical quantiles of the plotting positions."""

    sample: np.ndarray
    theoretical: np.ndarray
    scale: str

    @property
    def n(self) -> int:
        return int(self.sample.size)


def plotting_positions(n: int) -> np.ndarray:
    """``(i - 0.5) / n`` for ``i = 1..n``."""
    return (np.arange(1, n + 1) - 0.5) / n


def qq_data(values, scale: str = "uniform") -> QQData:
    """QQ coordinates for residuals already on ``scale``.

    Uniform-scale theoretical quantiles are the plotting positions; normal
    ones are ``Phi^{-1}`` of them.
    """
    if scale not in SCALES:
        raise ParameterDomainError(f"scale must be one of {SCALES}")
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ParameterDomainError("QQ data needs at least one residual")
    pos = plotting_positions(v.size)
    theo = pos if scale == "uniform" else inverse_normal_cdf(pos)
    return QQData(v, np.atleast_1d(theo), scale)


def _svg_bytes(fig: Figure) -> bytes:
    buf = io.BytesIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _save(fig: Figure, path=None, fmt: str = "svg") -> bytes | None:
    if fmt == "svg":
        data = _svg_bytes(fig)
        if path is None:
            return data
        with open(path, "wb") as fh:
            fh.write(data)
        return None
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format=fmt, metadata={"Software": None} if fmt == "png" else None)
    return None


def qq_figure(qq: QQData, title: str = "", note: str = "") -> Figure:
    """Scatter of sample against theoretical quantiles with a dashed diagonal."""
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot()
    finite = np.isfinite(qq.sample)
    ax.scatter(qq.theoretical[finite], qq.sample[finite], s=8, color="black")
    if qq.scale == "uniform":
        lo, hi = 0.0, 1.0
    else:
        vals = np.concatenate([qq.theoretical, qq.sample[finite]])
        lo, hi = float(vals.min()), float(vals.max())
    ax.plot([lo, hi], [lo, hi], linestyle="--", color="grey", linewidth=1)
    label = "uniform" if qq.scale == "uniform" else "normal"
    ax.set_xlabel(f"theoretical {label} quantiles")
    ax.set_ylabel("sample quantiles")
    if title:
        ax.set_title(title)
    dropped = int((~finite).sum())
    if dropped:
        note = (note + "; " if note else "") + f"{dropped} infinite values not drawn"
    if note:
        fig.text(0.01, 0.01, note, fontsize=7)
    fig.tight_layout(rect=(0, 0.04, 1, 1))
    return fig


def curve_figure(curves: list[OrderedCurve], labels: list[str] | None = None, title: str = "") -> Figure:
    """Ordered curves (each anchored at the origin) with the dashed diagonal."""
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot()
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=1)
    styles = ["-", ":", "-.", "--"]
    for k, c in enumerate(curves):
        pts = c.with_origin()
        lab = labels[k] if labels else c.label
        ax.plot(pts[:, 0], pts[:, 1], linestyle=styles[k % len(styles)], color="black",
                label=f"{lab} (D = {c.max_deviation:.4f})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("cumulative share of fitted means")
    ax.set_ylabel("cumulative share of outcomes")
    ax.legend(loc="upper left", fontsize=7, frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def save_figure(fig: Figure, path=None, fmt: str = "svg"):
    """Write ``fig`` to ``path``; with ``path=None`` return SVG bytes."""
    return _save(fig, path, fmt)
