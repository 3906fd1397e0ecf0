"""CSV ingestion, delimited/JSON output and flat key/value config files."""

from __future__ import annotations

import configparser
import csv
import json
import math
from typing import Iterable

import numpy as np

from .data import Dataset
from .errors import ParameterDomainError, ParseError

MISSING = {"", "NA", "NaN", "nan", "null", "NULL"}


def format_number(value) -> str:
    """Shortest round-trip decimal for floats; integers verbatim."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def _parse_float(text: str, row: int, col: str) -> float:
    if text.strip() in MISSING:
        raise ParseError(f"row {row}, column {col}: missing value")
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col}: cannot parse {text!r} as a number") from None


def _parse_outcome(text: str, row: int, col: str) -> int:
    v = _parse_float(text, row, col)
    if not math.isfinite(v) or v < 0 or v != math.floor(v):
        raise ParseError(f"row {row}, column {col}: outcome {text!r} is not a nonnegative integer")
    return int(v)


def ingest_csv(path, outcome: str = "y", categorical: Iterable[str] = (), columns=None) -> Dataset:
    """Read a headed CSV into a :class:`Dataset`.

    Rows are numbered from 1 after the header.  ``categorical`` columns are
    dummy-encoded as ``name[level]`` with the alphabetically first level as
    reference; other non-outcome columns must be numeric.  ``columns``
    restricts the covariates kept (default: all).
    """
    categorical = list(categorical)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    if not rows:
        raise ParseError(f"{path}: empty file, header required")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicate column names in header")
    body = [r for r in rows[1:] if r]
    for k, r in enumerate(body, start=1):
        if len(r) != len(header):
            raise ParseError(f"row {k}: expected {len(header)} fields, found {len(r)}")
    if outcome not in header:
        raise ParseError(f"outcome column {outcome!r} not in header")
    for c in categorical:
        if c not in header:
            raise ParseError(f"categorical column {c!r} not in header")
    keep = [h for h in header if h != outcome and (columns is None or h in columns)]
    if columns is not None:
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"columns not in header: {', '.join(missing)}")
    pos = {h: i for i, h in enumerate(header)}
    yi = pos[outcome]
    y = np.array([_parse_outcome(r[yi], k, outcome) for k, r in enumerate(body, start=1)],
                 dtype=np.int64)
    names, cols, factors = [], [], {}
    for h in keep:
        raw = [r[pos[h]].strip() for r in body]
        if h in categorical:
            for k, v in enumerate(raw, start=1):
                if v in MISSING:
                    raise ParseError(f"row {k}, column {h}: missing value")
            levels = sorted(set(raw))
            dummies = []
            for level in levels[1:]:
                name = f"{h}[{level}]"
                names.append(name)
                dummies.append(name)
                cols.append(np.array([1.0 if v == level else 0.0 for v in raw]))
            factors[h] = dummies
        else:
            names.append(h)
            cols.append(np.array([_parse_float(v, k, h) for k, v in enumerate(raw, start=1)]))
    X = np.column_stack(cols) if cols else np.zeros((y.size, 0))
    return Dataset(y, X, names, factors, outcome=outcome)


# ----------------------------------------------------------------------
# Tables
# ----------------------------------------------------------------------


def table_text(columns: dict, fmt: str = "csv", footer: dict | None = None) -> str:
    """Render equal-length columns as CSV or JSON text.

    CSV footers are written as ``# key=value`` lines; JSON output is an
    object with ``columns``, ``rows`` and ``footer``.  Non-finite numbers are
    written as ``inf``, ``-inf`` and ``nan`` (strings in JSON).
    """
    names = list(columns)
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ParameterDomainError("output columns differ in length")
    n = lengths.pop() if lengths else 0
    if fmt == "json":
        def cell(v):
            if isinstance(v, (float, np.floating)) and not math.isfinite(v):
                return format_number(v)
            if isinstance(v, np.generic):
                return v.item()
            return v
        doc = {
            "columns": names,
            "rows": [[cell(columns[c][i]) for c in names] for i in range(n)],
        }
        if footer:
            doc["footer"] = {k: cell(v) for k, v in footer.items()}
        return json.dumps(doc, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ParameterDomainError(f"unknown table format {fmt!r}")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_csv_cell(columns[c][i]) for c in names))
    for k, v in (footer or {}).items():
        lines.append(f"# {k}={format_number(v)}")
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    s = format_number(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def read_table(path) -> tuple[dict, dict]:
    """Read a CSV written by :func:`table_text`; returns ``(columns, footer)``.

    Numeric cells become floats (integers when written as such); other cells
    stay strings.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    footer = {}
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, val = line[2:].partition("=")
            footer[key] = _cell_value(val)
        elif line:
            body.append(line)
    if not body:
        raise ParseError(f"{path}: empty table")
    rows = list(csv.reader(body))
    header = rows[0]
    cols = {h: [] for h in header}
    for k, r in enumerate(rows[1:], start=1):
        if len(r) != len(header):
            raise ParseError(f"row {k}: expected {len(header)} fields, found {len(r)}")
        for h, v in zip(header, r):
            cols[h].append(_cell_value(v))
    return cols, footer


def _cell_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ----------------------------------------------------------------------
# Config files
# ----------------------------------------------------------------------


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` comments, optional section headers ignored.

    Keys are normalised to underscores (``zero-terms`` -> ``zero_terms``).
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc.strerror}") from None
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ParseError(f"config {path}: {exc}") from None
    out = {}
    for section in parser.sections():
        for k, v in parser.items(section):
            out[k.replace("-", "_")] = v.strip()
    return out


def split_list(text) -> list[str]:
    """Comma-separated list; empty or ``None`` gives ``[]``."""
    if text is None:
        return []
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t.strip() for t in str(text).split(",") if t.strip()]


def parse_fixed_params(text: str) -> dict:
    """``coef=a,b,...;size=t;cutpoints=c0,c1;zero_coef=z0,...`` into arrays."""
    out = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, val = part.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in ("coef", "size", "cutpoints", "zero_coef"):
            raise ParseError(f"bad fixed-parameter entry {part!r}")
        try:
            nums = [float(v) for v in split_list(val)]
        except ValueError:
            raise ParseError(f"bad number in fixed-parameter entry {part!r}") from None
        out[key] = nums[0] if key == "size" else np.array(nums)
    if "coef" not in out:
        raise ParseError("fixed parameters need coef=...")
    return out
