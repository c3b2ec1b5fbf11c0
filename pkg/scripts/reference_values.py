"""Recompute the reference values of the bundled instances.

Evaluates every bundled plan, solves fig1 and the small path instances
exactly, and (optionally, slower) solves K10 exactly at horizon n^2 - 1.

    python scripts/reference_values.py [--k10]
"""
import argparse
import time

from reconplan import expected_value_multi, library, make_path_instance
from reconplan.exact import solve_exact


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--k10", action="store_true", help="also solve K10 exactly (about a minute, ~1 GB)")
    args = ap.parse_args()
    for name, entry in library.manifest().items():
        m = library.mission(name)
        for which in entry["plans"]:
            value = expected_value_multi(m, library.plan(name, which))
            print(f"{name:<10} {which:<9} plan value {value:.9f}  (reference {entry['reference']})")
    for name, horizon in [("fig1", 7), ("k6-multi", 12)]:
        start = time.perf_counter()
        plan, value = solve_exact(library.mission(name), horizon)
        print(f"{name:<10} exact, one drone, T={horizon}: {value:.9f} {plan.route} "
              f"({time.perf_counter() - start:.2f} s)")
    for n in (3, 4, 5):
        plan, value = solve_exact(make_path_instance(n))
        print(f"path{n}      exact: {value!r} with {plan.crossings} crossings")
    if args.k10:
        start = time.perf_counter()
        plan, value = solve_exact(library.mission("k10"))
        print(f"k10        exact, T=99: {value:.9f} {plan.route} ({time.perf_counter() - start:.1f} s)")


if __name__ == "__main__":
    main()
