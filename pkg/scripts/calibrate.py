"""Freeze the ordered-curve null bands used by the acceptance suite.

For each curve scenario the correctly specified model is fitted on 1000
replicates drawn with a calibration seed that the tests never use, and the
99th percentile of the maximum deviation D is stored per threshold source.

Usage: python scripts/calibrate.py [--reps 1000] [--seed 1000]
"""

from __future__ import annotations

import argparse
import json
import pathlib

import numpy as np

from dpitres.simlab import run_scenario

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "bands.json"
QUANTILE = 0.99


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1000)
    args = parser.parse_args()
    bands = {"quantile": QUANTILE, "reps": args.reps, "seed": args.seed, "curve_null_D": {}}
    for scenario in ("poisson-curve", "binary-curve"):
        result = run_scenario(scenario, reps=args.reps, seed=args.seed)
        per = {}
        for source in result.config.thresholds:
            d = result.values(f"curve_D[{source}]", "true")
            per[source] = float(np.quantile(d, QUANTILE))
        bands["curve_null_D"][scenario] = per
        print(scenario, per, f"failures={len(result.failures)}")
    OUT.write_text(json.dumps(bands, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
