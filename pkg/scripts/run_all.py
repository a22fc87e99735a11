"""Run every config in configs/ and write result records and CSV tables.

    python scripts/run_all.py [--seed N] [--out results/]
"""

import argparse
import json
import time
from pathlib import Path

from sensorprint.config import ExperimentConfig
from sensorprint.experiments import run_experiment
from sensorprint.report import emit_report

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for path in sorted((ROOT / "configs").glob("*.json")):
        cfg = ExperimentConfig.load(path, args.seed)
        t = time.perf_counter()
        result = run_experiment(cfg)
        (args.out / f"{path.stem}.json").write_text(json.dumps(result, sort_keys=True, indent=1))
        (args.out / f"{path.stem}.csv").write_text(emit_report(result, "csv"))
        print(f"== {path.stem} ({time.perf_counter() - t:.1f} s)")
        print(emit_report(result, "text"))


if __name__ == "__main__":
    main()
