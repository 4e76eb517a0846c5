"""Run the full experiment for one or more config files and write artifacts.

Usage: python scripts/run_experiment.py configs/default_main.json [more.json ...] [--out DIR]
"""
import argparse
import sys
from pathlib import Path

from psharp.harness import ExperimentConfig, run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--out", default="runs", help="parent directory for artifacts")
    args = ap.parse_args(argv)
    status = 0
    for path in args.configs:
        out = Path(args.out) / Path(path).stem
        report = run_experiment(ExperimentConfig.from_file(path), out)
        print(report.to_text())
        print(f"artifacts in {out}\n")
        status |= not report.passed
    return status


if __name__ == "__main__":
    sys.exit(main())
