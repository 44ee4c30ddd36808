"""Sweep the placebo family on synthetic data and print mean +/- std per grid point.

Usage: python3 scripts/run_synthetic_sweep.py [family] [repeats]
"""
import sys

from perfpac.experiment import SweepConfig, run_sweep

family = sys.argv[1] if len(sys.argv) > 1 else "placebo"
repeats = int(sys.argv[2]) if len(sys.argv) > 2 else 10
res = run_sweep(SweepConfig(family=family, repeats=repeats))
print(f"{'a':>5} {'method':>6} {'mean':>7} {'std':>7}")
for s in res["summary"]:
    print(f"{s['a']:>5.2f} {s['method']:>6} {s['mean']:>7.4f} {s['std']:>7.4f}")
