"""Best-value traces of a few K10 runs with and without mutations, as one CSV.

    python scripts/dump_traces.py --runs 4 --out traces.csv

Columns: generation, then one column per (preset, seed).
"""
import argparse
import csv

from reconplan import library
from reconplan.genetic import ABLATIONS, GaConfig, run_ga


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--instance", default="k10")
    ap.add_argument("--runs", type=int, default=4)
    ap.add_argument("--presets", nargs="+", default=["none", "combination"], choices=sorted(ABLATIONS))
    ap.add_argument("--out", default="traces.csv")
    args = ap.parse_args()

    m = library.mission(args.instance)
    columns = {}
    for preset in args.presets:
        for seed in range(args.runs):
            res = run_ga(m, GaConfig(seed=seed, **ABLATIONS[preset]))
            columns[f"{preset}_{seed}"] = res.trace.best_values()
            print(f"{preset:<12} seed {seed}: {res.value:.6f}")
    length = max(len(c) for c in columns.values())
    with open(args.out, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["generation", *columns])
        for g in range(length):
            out.writerow([g, *(repr(c[g]) if g < len(c) else "" for c in columns.values())])


if __name__ == "__main__":
    main()
