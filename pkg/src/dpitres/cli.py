"""Command-line front end: ``dpitres residuals|qq|ordered-curve|simulate``.

Exit codes: 0 success, 2 usage, 3 parse, 4 fit or convergence failure,
5 domain or degenerate-data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, plotting
from . import io as dio
from .curve import TIE_BREAK, ordered_curve, threshold_from
from .data import ModelSpec
from .dpit import PATHS, ResidualSet, combined_residuals, pit_values, to_normal_scale
from .errors import DpitError, FitError, ParseError, ScenarioError
from .fit import fit_mle, fixed_model
from .simlab import SCENARIOS, get_scenario, run_scenario

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_FIT, EXIT_DOMAIN = 0, 2, 3, 4, 5

BASELINE_CHOICES = ("cox-snell",) + baselines.KINDS


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def _model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data and model")
    g.add_argument("--config", help="flat key = value file; command-line flags take precedence")
    g.add_argument("--data", help="input CSV with a header row")
    g.add_argument("--family", choices=("poisson", "negbin", "bernoulli", "ordinal", "zip"))
    g.add_argument("--outcome", help="outcome column (default: y)")
    g.add_argument("--terms", help="comma-separated model terms, e.g. x1,x2,x1:x2")
    g.add_argument("--zero-terms", help="comma-separated excess-zero terms (zip)")
    g.add_argument("--categorical", help="comma-separated columns to dummy-encode")
    g.add_argument("--fixed-params",
                   help="skip fitting: 'coef=b0,b1;size=t;cutpoints=a0,a1;zero_coef=g0,g1'")
    g.add_argument("--out", help="output file (default: standard output)")
    g.add_argument("--format", choices=("csv", "json", "svg"), help="output format (default: csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpitres",
        description="Residual diagnostics and ordered curves for discrete-outcome regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("residuals", help="fit a model and write DPIT residuals")
    _model_args(p)
    p.add_argument("--baseline", action="append", choices=BASELINE_CHOICES,
                   help="add a comparison residual column (repeatable)")
    p.add_argument("--seed", type=int, help="seed for randomized baselines")
    p.add_argument("--scale", choices=("uniform", "normal"),
                   help="uniform omits the normal-scale column (default: normal)")
    p.add_argument("--clamp", dest="clamp", action="store_true", default=None,
                   help="clip to [1/(n+1), n/(n+1)] before the normal transform (default)")
    p.add_argument("--no-clamp", dest="clamp", action="store_false",
                   help="keep -inf/inf for residuals at 0 or 1")
    p.add_argument("--path", choices=PATHS, help="evaluation path (default: fast)")

    p = sub.add_parser("qq", help="QQ data (and optional SVG) of DPIT residuals")
    _model_args(p)
    p.add_argument("--residuals", help="residual CSV from the residuals command instead of fitting")
    p.add_argument("--scale", choices=("uniform", "normal"), help="default: uniform")
    p.add_argument("--clamp", dest="clamp", action="store_true", default=None)
    p.add_argument("--no-clamp", dest="clamp", action="store_false")
    p.add_argument("--figure", help="also write an SVG QQ plot to this path")

    p = sub.add_parser("ordered-curve", help="ordered-curve points (and optional SVG)")
    _model_args(p)
    p.add_argument("--threshold", help="fitted | column:NAME | file:PATH (default: fitted)")
    p.add_argument("--figure", help="also write an SVG of the curve to this path")

    p = sub.add_parser("simulate", help="run a built-in simulation scenario")
    p.add_argument("--config", help="flat key = value file with scenario, n, reps, seed")
    p.add_argument("--scenario", help="scenario id, or 'list' to print the ids")
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory for replicates.csv and summary.json")
    return parser


# ----------------------------------------------------------------------
# Option merging
# ----------------------------------------------------------------------


_INT_KEYS = {"n", "reps", "seed"}
_BOOL_KEYS = {"clamp"}


def _merge_config(args) -> argparse.Namespace:
    """Fill unset flags from ``--config``."""
    if not getattr(args, "config", None):
        return args
    conf = dio.read_config(args.config)
    for key, val in conf.items():
        if not hasattr(args, key):
            raise ParseError(f"config {args.config}: unknown key {key!r}")
        if getattr(args, key) is not None:
            continue
        if key in _INT_KEYS:
            try:
                val = int(val)
            except ValueError:
                raise ParseError(f"config {args.config}: {key} must be an integer") from None
        elif key in _BOOL_KEYS:
            val = val.lower() in ("1", "true", "yes", "on")
        elif key == "baseline":
            val = dio.split_list(val)
            bad = [v for v in val if v not in BASELINE_CHOICES]
            if bad:
                raise ParseError(f"config {args.config}: unknown baseline {bad[0]!r}")
        setattr(args, key, val)
    return args


def _require(args, *keys):
    for k in keys:
        if getattr(args, k, None) in (None, ""):
            raise UsageError(f"--{k.replace('_', '-')} is required (flag or config key)")


def _load_model(args):
    """Dataset plus fitted (or fixed) model from the merged options."""
    _require(args, "data", "family")
    outcome = args.outcome or "y"
    data = dio.ingest_csv(args.data, outcome=outcome, categorical=dio.split_list(args.categorical))
    spec = ModelSpec(
        args.family,
        tuple(dio.split_list(args.terms)),
        zero_terms=tuple(dio.split_list(args.zero_terms)) if args.family == "zip" else None,
    )
    if args.fixed_params:
        fixed = dio.parse_fixed_params(args.fixed_params)
        names = spec.mean_design(data)[1]
        if len(fixed["coef"]) != len(names):
            raise ParseError(
                f"fixed coef has {len(fixed['coef'])} entries, the model has {len(names)} ({', '.join(names)})"
            )
        coef = fixed.pop("coef")
        fitted = fixed_model(spec, coef, names, **fixed)
        if spec.family == "zip" and fitted.zero_coef is None:
            raise ParseError("zip fixed parameters need zero_coef=...")
    else:
        fitted = fit_mle(data, spec)
    return data, fitted


def _emit(args, text: str | bytes) -> None:
    if args.out:
        mode = "wb" if isinstance(text, bytes) else "w"
        with open(args.out, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(text)
    else:
        if isinstance(text, bytes):
            sys.stdout.buffer.write(text)
        else:
            sys.stdout.write(text)
        sys.stdout.flush()


def _table_format(args) -> str:
    fmt = args.format or "csv"
    if fmt == "svg":
        raise UsageError("--format svg applies to qq and ordered-curve only")
    return fmt


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def cmd_residuals(args) -> int:
    fmt = _table_format(args)
    data, fitted = _load_model(args)
    clamp = True if args.clamp is None else args.clamp
    res = combined_residuals(fitted, data, path=args.path or "fast")
    cols = {
        "index": np.arange(1, data.n + 1),
        "y": data.y,
        "fitted_mean": fitted.fitted_means(data),
        "linear_predictor": fitted.linear_predictor(data),
        "uniform": res.uniform,
    }
    if (args.scale or "normal") == "normal":
        cols["normal"] = to_normal_scale(res, clamp=clamp).normal
    cols["flag"] = list(res.flags)
    for kind in args.baseline or []:
        if kind == "cox-snell":
            cols[kind] = pit_values(fitted, data)
            continue
        if kind in ("randomized-quantile", "liu-zhang") and args.seed is None:
            raise UsageError(f"--baseline {kind} needs --seed")
        cols[kind] = baselines.compute(kind, fitted, data, seed=args.seed)
    footer = {"family": fitted.family, "converged": fitted.converged, "clamp": clamp}
    _emit(args, dio.table_text(cols, fmt, footer))
    return EXIT_OK


def _qq_values(args):
    """Residuals on the requested scale plus a figure note."""
    scale = args.scale or "uniform"
    clamp = True if args.clamp is None else args.clamp
    if args.residuals:
        cols, _ = dio.read_table(args.residuals)
        if "uniform" not in cols:
            raise ParseError(f"{args.residuals}: no 'uniform' column")
        try:
            u = np.array(cols["uniform"], dtype=float)
        except ValueError:
            raise ParseError(f"{args.residuals}: non-numeric 'uniform' column") from None
        res = ResidualSet(u, np.array(cols.get("flag", ["standard"] * u.size), dtype=object), "")
    else:
        data, fitted = _load_model(args)
        res = combined_residuals(fitted, data)
    if scale == "uniform":
        return res.uniform, scale, ""
    z = to_normal_scale(res, clamp=clamp).normal
    n = z.size
    note = (f"normal scale; residuals clamped to [1/{n + 1}, {n}/{n + 1}] before the transform"
            if clamp else "normal scale; unclamped")
    return z, scale, note


def cmd_qq(args) -> int:
    values, scale, note = _qq_values(args)
    qq = plotting.qq_data(values, scale)
    if args.format == "svg":
        fig = plotting.qq_figure(qq, note=note)
        _emit(args, plotting.save_figure(fig))
    else:
        cols = {"i": np.arange(1, qq.n + 1), "theoretical": qq.theoretical, "sample": qq.sample}
        footer = {"scale": scale, "n": qq.n}
        if note:
            footer["note"] = note
        _emit(args, dio.table_text(cols, args.format or "csv", footer))
    if args.figure:
        plotting.save_figure(plotting.qq_figure(qq, note=note), args.figure)
    return EXIT_OK


def _read_threshold_file(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    vals = []
    for k, ln in enumerate(lines, start=1):
        cell = ln.split(",")[0]
        try:
            vals.append(float(cell))
        except ValueError:
            if k == 1:  # header
                continue
            raise ParseError(f"{path}: line {k}: cannot parse {cell!r} as a number") from None
    return np.array(vals)


def cmd_ordered_curve(args) -> int:
    data, fitted = _load_model(args)
    source = args.threshold or "fitted"
    if source.startswith("file:"):
        path = source.split(":", 1)[1]
        z, label = _read_threshold_file(path), os.path.basename(path)
    else:
        z, label = threshold_from(source, fitted, data)
    curve = ordered_curve(data.y, fitted.fitted_means(data), z, label)
    if args.format == "svg":
        _emit(args, plotting.save_figure(plotting.curve_figure([curve])))
    else:
        cols = {"k": np.arange(1, data.n + 1), "L2": curve.L2, "L1": curve.L1}
        footer = {"threshold": label, "D": curve.max_deviation, "tie_break": TIE_BREAK}
        _emit(args, dio.table_text(cols, args.format or "csv", footer))
    if args.figure:
        plotting.save_figure(plotting.curve_figure([curve]), args.figure)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _require(args, "scenario")
    if args.scenario == "list":
        width = max(len(k) for k in SCENARIOS)
        for sid, cfg in SCENARIOS.items():
            sys.stdout.write(f"{sid:<{width}}  {cfg.description}\n")
        return EXIT_OK
    cfg = get_scenario(args.scenario)
    result = run_scenario(cfg, n=args.n, reps=args.reps, seed=args.seed)
    keys = []
    for r in result.records:
        for k in r:
            if k not in keys:
                keys.append(k)
    cols = {k: [r.get(k, float("nan")) for r in result.records] for k in keys}
    table = dio.table_text(cols, "csv")
    summary = result.summary()
    summary["failed_fits"] = result.failures
    text = json.dumps(summary, indent=1, sort_keys=True) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        dio.write_text(os.path.join(args.out, "replicates.csv"), table)
        dio.write_text(os.path.join(args.out, "summary.json"), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "residuals": cmd_residuals,
    "qq": cmd_qq,
    "ordered-curve": cmd_ordered_curve,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    def fail(code, msg):
        sys.stderr.write(f"dpitres {args.command}: {msg}\n")
        return code

    try:
        args = _merge_config(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return fail(EXIT_USAGE, exc)
    except ParseError as exc:
        return fail(EXIT_PARSE, exc)
    except OSError as exc:
        return fail(EXIT_PARSE, f"{exc.filename}: {exc.strerror}")
    except (FitError, ScenarioError) as exc:
        return fail(EXIT_FIT, f"{type(exc).__name__}: {exc}")
    except (DpitError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        return fail(EXIT_DOMAIN, f"{type(exc).__name__}: {msg}")


if __name__ == "__main__":
    sys.exit(main())
