#!/usr/bin/env python3
"""Round-trip study over the five named test robots.

For each robot: derive once, solve FK-generated poses, and print a table of
derivation time, solve-time percentiles, recovery rate and error statistics.
"""

import argparse

from autoik import bench


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=5000, help="poses per robot")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    for name, chain in bench.named_robots().items():
        rows.append(bench.roundtrip(chain, args.n, args.seed, name=name))

    hdr = (f"{'robot':14s} {'recov':>6s} {'derive_us':>10s} {'p50_us':>8s} "
           f"{'p95_us':>8s} {'max_us':>8s} {'pos_max':>10s} {'rot_max':>10s}")
    print(hdr)
    for r in rows:
        print(f"{r.name:14s} {r.recovery_rate:6.3f} {r.derive_us:10.1f} "
              f"{r.solve_us_p50:8.1f} {r.solve_us_p95:8.1f} "
              f"{r.solve_us_max:8.1f} {r.pos_err_max:10.2e} "
              f"{r.rot_err_max:10.2e}")


if __name__ == "__main__":
    main()
