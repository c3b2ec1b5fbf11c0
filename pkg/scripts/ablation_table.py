"""Success rates of the mutation presets on K10 (plus the two-drone cells).

    python scripts/ablation_table.py --runs 100 --csv ablation.csv
"""
import argparse
import os

from reconplan.cli import format_bench_table, reference_suite, run_bench, write_bench_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed-base", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--single-only", action="store_true", help="skip the two-drone cells")
    ap.add_argument("--csv")
    args = ap.parse_args()
    cells = reference_suite()
    if args.single_only:
        cells = [c for c in cells if c.config.drones == 1]
    rows = run_bench(cells, args.runs, args.seed_base, args.workers)
    print(format_bench_table(rows))
    if args.csv:
        write_bench_csv(rows, args.csv)


if __name__ == "__main__":
    main()
