"""Exact M_Sz recognition profile for pooled replicate populations.

Prints the maximal plateau(s) from per-probe exact intervals and the rate on
a log grid, for a growing number of pooled replicates.
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from sensorprint.config import ExperimentConfig
from sensorprint.experiments import analyze, simulate_dataset

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--replicates", type=int, nargs="+", default=[1, 5, 20])
    args = ap.parse_args()
    base = ExperimentConfig.load(ROOT / "configs" / "msz_sweep.json", args.seed)
    grid = tuple(float(m) for m in np.logspace(0, 4, 17))
    for reps in args.replicates:
        cfg = dataclasses.replace(base, accel=dataclasses.replace(
            base.accel, replicates=reps, m_sz_values=grid))
        res = analyze(cfg, simulate_dataset(cfg))
        m = res["metrics"]
        plateaus = ", ".join(f"({lo:.1f}, {hi:.1f})" for lo, hi, _ in res["tables"]["plateaus"]["rows"])
        print(f"replicates={reps:3d} probes={m['probes']} best={m['best_rate']:.3f} plateaus: {plateaus}")
        print("  " + " ".join(f"{row[0]:.0f}:{row[1]:.2f}" for row in res["tables"]["sweep"]["rows"]))


if __name__ == "__main__":
    main()
