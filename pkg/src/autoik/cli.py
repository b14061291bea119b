"""Command-line front end: derive, solve, roundtrip, bench.

Exit codes: 0 success (for solve: at least one exact solution), 1 parse or
I/O errors, 2 unsolvable chain (or a 7R chain without --lock), 3 solve
found only least-squares solutions, 4 roundtrip/bench thresholds missed.
All diagnostics go to stderr; stdout carries the machine-readable output.

The environment variable IK_TOL_OVERRIDE scales the exactness tolerances
(position and rotation) by the given factor, for experimentation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from .chain import KinematicChain
from .geom import Pose
from .remodel import LockRequired, UnsupportedJointCount, classify
from .robot_io import (
    ParseError,
    PathNotFound,
    UnsupportedJointType,
    ValidationError,
    parse_native,
    parse_urdf,
    serialize_solutions,
)
from .solver import DEFAULT_TOL, IKTarget, Tolerances, UnsolvableClass, solve
from . import bench

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSOLVABLE = 2
EXIT_INEXACT = 3
EXIT_THRESHOLD = 4


def _tolerances() -> Tolerances:
    raw = os.environ.get("IK_TOL_OVERRIDE")
    if raw is None:
        return DEFAULT_TOL
    try:
        return DEFAULT_TOL.scaled(float(raw))
    except ValueError:
        print(f"warning: ignoring bad IK_TOL_OVERRIDE={raw!r}", file=sys.stderr)
        return DEFAULT_TOL


def _load_chain(path: str, fmt: str, base: Optional[str],
                tip: Optional[str]) -> KinematicChain:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if fmt == "auto":
        fmt = "urdf" if path.endswith((".urdf", ".xml")) else "native"
    if fmt == "urdf":
        if not base or not tip:
            raise ParseError("URDF input needs --base and --tip link names")
        return parse_urdf(text, base, tip)
    return parse_native(text)


def _parse_pose(text: str) -> Pose:
    vals = [float(t) for t in text.replace(",", " ").split()]
    if len(vals) == 7:
        px, py, pz, qw, qx, qy, qz = vals
        n = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        if n < 1e-12:
            raise ValueError("zero quaternion")
        if abs(n - 1.0) > 1e-6:
            print(f"warning: quaternion norm {n:.9f} deviates from 1; "
                  "normalizing", file=sys.stderr)
        qw, qx, qy, qz = qw / n, qx / n, qy / n, qz / n
        r = np.array([
            [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw),
             2 * (qx * qz + qy * qw)],
            [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz),
             2 * (qy * qz - qx * qw)],
            [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw),
             1 - 2 * (qx * qx + qy * qy)],
        ])
        return Pose(r, [px, py, pz])
    if len(vals) == 12:
        r = np.array(vals[:9]).reshape(3, 3)
        return Pose(r, vals[9:])
    raise ValueError(
        "--pose takes 7 reals (px py pz qw qx qy qz) or 12 reals "
        "(rotation rows then translation)")


def _parse_lock(text: str) -> tuple[int, float]:
    try:
        j, theta = text.split("=")
        return int(j), float(theta)
    except ValueError as exc:
        raise ValueError("--lock expects J=THETA, e.g. 3=0.5") from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_derive(args) -> int:
    chain = _load_chain(args.file, args.format, args.base, args.tip)
    try:
        plan = classify(chain)
    except LockRequired as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    lines = [
        f"class: {plan.cls.tag.value}",
        f"inverted: {str(plan.cls.inverted).lower()}",
        f"derivation_us: {plan.derivation_time * 1e6:.3f}",
        "remodeled_axes:",
    ]
    for i, j in enumerate(plan.remodeled.joints):
        h = " ".join(format(x, ".12g") for x in j.h)
        p = " ".join(format(x, ".12g") for x in j.p)
        lines.append(f"  joint {i + 1}: h [{h}]  p [{p}]")
    _emit("\n".join(lines) + "\n", None)
    return EXIT_OK if plan.cls.solvable() else EXIT_UNSOLVABLE


def cmd_solve(args) -> int:
    chain = _load_chain(args.file, args.format, args.base, args.tip)
    target = IKTarget(_parse_pose(args.pose))
    lock = _parse_lock(args.lock) if args.lock else None
    try:
        plan = classify(chain, lock=lock)
    except LockRequired as exc:
        print(f"error: {exc} (use --lock J=THETA)", file=sys.stderr)
        return EXIT_UNSOLVABLE
    if not plan.cls.solvable():
        print("error: chain has no known decomposition", file=sys.stderr)
        return EXIT_UNSOLVABLE
    try:
        sol = solve(plan, target, _tolerances())
    except UnsolvableClass as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    fmt = "csv" if args.csv else "json"
    _emit(serialize_solutions(sol, fmt, n_joints=chain.n), args.out)
    return EXIT_OK if any(s.exact for s in sol.solutions) else EXIT_INEXACT


def _report_text(rows, fmt: str) -> str:
    cols = ["name", "n_poses", "recovery_rate", "pos_err_mean", "pos_err_max",
            "rot_err_mean", "rot_err_max", "derive_us", "solve_us_p50",
            "solve_us_p95", "solve_us_max"]
    if fmt == "json":
        return json.dumps([{c: getattr(r, c) for c in cols} for r in rows],
                          indent=2)
    lines = [",".join(cols)]
    for r in rows:
        vals = []
        for c in cols:
            v = getattr(r, c)
            vals.append(str(v) if isinstance(v, (int, str))
                        else format(v, ".17g"))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_roundtrip(args) -> int:
    chain = _load_chain(args.file, args.format, args.base, args.tip)
    tol = _tolerances()
    row = bench.roundtrip(chain, args.n, args.seed, name=args.file, tol=tol)
    _emit(_report_text([row], "csv" if args.csv else "json"), args.out)
    scale = chain.characteristic_length()
    ok = (row.recovery_rate == 1.0
          and row.pos_err_max <= tol.fk_pos * scale
          and row.rot_err_max <= tol.fk_rot)
    return EXIT_OK if ok else EXIT_THRESHOLD


def cmd_bench(args) -> int:
    if args.what != "random":
        print("error: only 'bench random' is supported", file=sys.stderr)
        return EXIT_ERROR
    solvable, ok, elapsed = bench.batch_random(args.count, args.seed,
                                               _tolerances())
    doc = {
        "count": args.count,
        "classified_solvable": solvable,
        "roundtrip_ok": ok,
        "elapsed_s": elapsed,
    }
    _emit(json.dumps(doc, indent=2), args.out)
    if args.count == 0:
        return EXIT_OK
    good = solvable == args.count and ok >= math.ceil(0.999 * args.count)
    return EXIT_OK if good else EXIT_THRESHOLD


def _add_input_args(p) -> None:
    p.add_argument("file", help="robot description file")
    p.add_argument("--format", choices=["auto", "native", "urdf"],
                   default="auto")
    p.add_argument("--base", help="URDF base link name")
    p.add_argument("--tip", help="URDF tip link name")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="autoik",
        description="Analytical inverse kinematics with automatic derivation")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="classify a chain and show its plan")
    _add_input_args(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("solve", help="solve IK for one pose")
    _add_input_args(p)
    p.add_argument("--pose", required=True,
                   help="'px py pz qw qx qy qz' or 12 reals (R rows + t)")
    p.add_argument("--lock", help="freeze joint J at THETA radians (J=THETA)")
    p.add_argument("--out", help="write output to this path")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", default=True)
    g.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("roundtrip", help="FK round-trip study on one robot")
    _add_input_args(p)
    p.add_argument("-n", type=int, default=1000, help="number of poses")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write report to this path")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", default=True)
    g.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("bench", help="random-robot batch experiment")
    p.add_argument("what", choices=["random"])
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write report to this path")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, UnsupportedJointType, PathNotFound,
            UnsupportedJointCount, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
