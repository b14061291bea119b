#!/usr/bin/env python3
"""Batch experiment: many random solvable robots, derive + one solve each.

Prints how many classified as solvable, how many passed a single-pose FK
round trip, and the total wall time.
"""

import argparse

from autoik import bench


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    solvable, ok, elapsed = bench.batch_random(args.count, args.seed)
    print(f"robots:              {args.count}")
    print(f"classified solvable: {solvable}")
    print(f"roundtrip ok:        {ok}")
    print(f"elapsed:             {elapsed:.2f} s "
          f"({elapsed / max(1, args.count) * 1e3:.2f} ms/robot)")


if __name__ == "__main__":
    main()
