"""Class-specific IK decompositions and solution assembly.

Each kinematic class maps the pose equations onto a short cascade of
geometric subproblems. Branching subproblems (two roots) are enumerated in
full Cartesian fashion; simplifications such as norm preservation can
introduce extraneous candidates, so every candidate is substituted back into
the full pose equation and filtered. Candidates from least-squares
subproblem fallbacks ride along, which yields a best-effort answer for
unreachable targets and keeps solutions continuous near singularities.

A derivation plan is immutable; one plan serves unlimited concurrent solves.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chain import KinematicChain, fk_batch
from .geom import PARALLEL_EPS, Pose, normalize_angle, rotate
from .remodel import ClassTag, DecompositionPlan, KinematicClass
from . import subproblems as sp


class UnsolvableClass(ValueError):
    """solve() called with an Unsolvable plan."""


class DegenerateWrist(ValueError):
    """Consecutive wrist axes are parallel; the orientation cascade is void."""


class DegenerateChain(ValueError):
    """3R solver called on a chain it cannot handle."""


@dataclass(frozen=True)
class Tolerances:
    """Exactness thresholds; fk_pos is relative to the characteristic length."""

    fk_pos: float = 1e-8
    fk_rot: float = 1e-8
    dedup: float = 1e-6

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(self.fk_pos * factor, self.fk_rot * factor, self.dedup)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class IKTarget:
    pose: Pose


@dataclass(frozen=True)
class IKSolution:
    q: tuple[float, ...]
    exact: bool
    pos_err: float
    rot_err: float


@dataclass(frozen=True)
class IKSolutionSet:
    solutions: tuple[IKSolution, ...]
    class_used: KinematicClass
    timing: float

    def __len__(self) -> int:
        return len(self.solutions)

    def configs(self) -> list[tuple[float, ...]]:
        return [s.q for s in self.solutions]

    def exact_solutions(self) -> list[IKSolution]:
        return [s for s in self.solutions if s.exact]


def compute_r06(target: IKTarget, chain: KinematicChain) -> np.ndarray:
    """Target rotation of the last joint frame: strip the static tail offset."""
    return target.pose.rotation @ chain.ee_offset.rotation.T


def _normal_to(h: np.ndarray) -> np.ndarray:
    """A unit vector normal to h: cross with the least-aligned coordinate axis."""
    ax, ay, az = abs(float(h[0])), abs(float(h[1])), abs(float(h[2]))
    if ax <= ay and ax <= az:
        v = np.array([0.0, float(h[2]), -float(h[1])])
    elif ay <= az:
        v = np.array([-float(h[2]), 0.0, float(h[0])])
    else:
        v = np.array([float(h[1]), -float(h[0]), 0.0])
    return v / math.sqrt(float(v @ v))


def _joint_targets(schain: KinematicChain, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """Rotation of the last joint frame and the joint-1-to-joint-n translation."""
    r_last = pose.rotation @ schain.ee_offset.rotation.T
    p = pose.translation - schain.joints[0].p - r_last @ schain.ee_offset.translation
    return r_last, p


# ---------------------------------------------------------------------------
# Spherical wrist: position cascades for (t1, t2, t3), orientation for the rest
# ---------------------------------------------------------------------------


def solve_spherical_position_23intersect(p16, chain: KinematicChain,
                                         ) -> list[tuple[float, float, float]]:
    """Position angles when axes 2 and 3 meet (offset 2-3 remodeled to zero).

    Norm preservation removes t2, t3: the distance from the back-rotated
    wrist target to the joint-2 offset must equal the fixed elbow-to-wrist
    length, a single-angle distance subproblem for t1. The residual vector
    equation then couples t2 and t3 as a two-circle subproblem. The t1 roots
    form a superset; downstream filtering removes extraneous combinations.
    """
    h1, h2, h3 = (chain.joints[i].h for i in range(3))
    p12 = chain.displacement(0)
    p34 = chain.displacement(2)
    out = []
    for t1 in sp._sp3_angles(p16, p12, -h1, float(np.linalg.norm(p34))):
        v = rotate(h1, -t1, p16) - p12
        for t2, t3 in sp._sp2_pairs(v, p34, -h2, h3):
            out.append((t1, t2, t3))
    return out


def solve_spherical_position_12parallel(p16, chain: KinematicChain,
                                        ) -> list[tuple[float, float, float]]:
    """Position angles when axes 1 and 2 share a direction.

    Projecting the position equation onto the shared direction eliminates
    t1 and t2 and pins t3; norm preservation then gives t1; the remaining
    vector alignment yields t2.
    """
    h = chain.joints[0].h
    h3 = chain.joints[2].h
    p12 = chain.displacement(0)
    p23 = chain.displacement(1)
    p34 = chain.displacement(2)
    d3 = float(np.dot(h, p16 - p12 - p23))
    out = []
    for t3 in sp._sp4_angles(h, p34, h3, d3):
        w = p23 + rotate(h3, t3, p34)
        for t1 in sp._sp3_angles(p16, p12, -h, float(np.linalg.norm(w))):
            rhs = rotate(h, -t1, p16) - p12
            t2 = sp._sp1_angle(w, rhs, h)
            out.append((t1, t2, t3))
    return out


def solve_spherical_position_general(p16, chain: KinematicChain,
                                     ) -> list[tuple[float, float, float]]:
    """Position angles for a generic spherical wrist via the three-circle
    subproblem on the rearranged position equation."""
    h1, h2, h3 = (chain.joints[i].h for i in range(3))
    p12 = chain.displacement(0)
    p23 = chain.displacement(1)
    p34 = chain.displacement(2)
    if float(np.linalg.norm(p34)) < 1e-12:
        # Wrist center sits on axis 3: t3 is free, pick 0 and solve the rest.
        out = []
        for t1 in sp._sp3_angles(p16, p12, -h1, float(np.linalg.norm(p23))):
            rhs = rotate(h1, -t1, p16) - p12
            t2 = sp._sp1_angle(p23, rhs, h2)
            out.append((t1, t2, 0.0))
        return out
    if float(np.linalg.norm(p16)) < 1e-12:
        # Wrist target at the base point: t1 is free, pick 0.
        out = []
        for t3 in sp._sp3_angles(p34, -p23, h3, float(np.linalg.norm(p12))):
            w = p23 + rotate(h3, t3, p34)
            t2 = sp._sp1_angle(w, -p12, h2)
            out.append((0.0, t2, t3))
        return out
    res = sp.sp5(-p12, p16, p23, p34, -h1, h2, h3)
    return [(t1, t2, t3) for t1, t2, t3 in res.angle_tuples()]


def solve_spherical_orientation(r36, h4, h5, h6) -> list[tuple[float, float, float]]:
    """Wrist angles realizing the 3-4-5-6 rotation r36.

    The projection of the rotated axis-6 direction onto axis 4 is invariant
    to t4 and t6, which pins t5 (two branches); each branch leaves two
    single-angle alignments for t4 and t6.
    """
    if 1.0 - abs(float(np.dot(h4, h5))) < PARALLEL_EPS \
            or 1.0 - abs(float(np.dot(h5, h6))) < PARALLEL_EPS:
        raise DegenerateWrist("consecutive wrist axes are parallel")
    r36 = np.asarray(r36, dtype=float)
    return _orientation_triples(r36 @ h6, h4, h5, h6, lambda v: r36 @ v)


def _orientation_triples(v6, h4, h5, h6, apply_r36,
                         ) -> list[tuple[float, float, float]]:
    """Wrist angles from the image v6 = r36 h6 and the full rotation map.

    The projection of v6 onto axis 4 pins t5 (two branches); aligning the
    rotated axis 6 gives t4. The final angle comes from the leftover
    rotation (r34 r45)^T r36, measured about axis 6 on a normal vector;
    this stays well conditioned through wrist folds (where t4 is only
    determined jointly with t6 and its flat tie-break picks zero) because
    whatever t4 absorbs, t6 compensates exactly.
    """
    hn6 = _normal_to(h6)
    out = []
    for t5 in sp._sp4_angles(h4, h6, h5, float(np.dot(h4, v6))):
        t4 = sp._sp1_angle(rotate(h5, t5, h6), v6, h4)
        w = rotate(h5, -t5, rotate(h4, -t4, apply_r36(hn6)))
        t6 = sp._sp1_angle(hn6, w, h6)
        out.append((t4, t5, t6))
    return out


def _spherical_candidates(schain: KinematicChain, r06, p16, tag: ClassTag,
                          ) -> list[list[float]]:
    if tag is ClassTag.SPHERICAL_23_INTERSECT:
        position = solve_spherical_position_23intersect(p16, schain)
    elif tag is ClassTag.SPHERICAL_12_PARALLEL:
        position = solve_spherical_position_12parallel(p16, schain)
    else:
        position = solve_spherical_position_general(p16, schain)
    h1, h2, h3 = (schain.joints[i].h for i in range(3))
    h4, h5, h6 = (schain.joints[i].h for i in range(3, 6))
    if 1.0 - abs(float(np.dot(h4, h5))) < PARALLEL_EPS \
            or 1.0 - abs(float(np.dot(h5, h6))) < PARALLEL_EPS:
        raise DegenerateWrist("consecutive wrist axes are parallel")
    w6 = r06 @ h6
    cands = []
    for t1, t2, t3 in position:
        # r36 v applied as a rotation chain instead of matrix products.
        def apply_r36(v, a=t1, b=t2, c=t3):
            return rotate(h3, -c, rotate(h2, -b, rotate(h1, -a, r06 @ v)))

        v6 = rotate(h3, -t3, rotate(h2, -t2, rotate(h1, -t1, w6)))
        for t4, t5, t6 in _orientation_triples(v6, h4, h5, h6, apply_r36):
            cands.append([t1, t2, t3, t4, t5, t6])
    return cands


# ---------------------------------------------------------------------------
# Three parallel axes
# ---------------------------------------------------------------------------


def _three_parallel_123_candidates(schain: KinematicChain, r06, p16,
                                   ) -> list[list[float]]:
    """Axes 1,2,3 share direction h; axes 5,6 meet (offset 5-6 is zero).

    Projection onto h removes the first three rotations and pins t4; a
    further projection of the orientation equation pins t6, and the combined
    rotation t123 = t1+t2+t3 follows from one more projection. A vector
    normal to axis 5 then fixes t5. Norm preservation on the position
    equation gives t2, alignment gives t1, and t3 closes the sum t123.
    """
    h = schain.joints[0].h
    h4, h5, h6 = (schain.joints[i].h for i in range(3, 6))
    p12 = schain.displacement(0)
    p23 = schain.displacement(1)
    p34 = schain.displacement(2)
    p45 = schain.displacement(3)
    hn = _normal_to(h5)
    hn2 = _normal_to(h)
    d4 = float(np.dot(h, p16 - p12 - p23 - p34))
    d45 = float(np.dot(h4, h5))
    r06hn = r06 @ hn
    r06t_h = r06.T @ h
    cands = []
    for t4 in sp._sp4_angles(h, p45, h4, d4):
        d6 = float(np.dot(h5, rotate(h4, -t4, h)))
        for t6 in sp._sp4_angles(h5, r06t_h, h6, d6):
            w = r06 @ rotate(h6, -t6, h5)
            for t123 in sp._sp4_angles(h4, w, -h, d45):
                t5 = sp._sp1_angle(rotate(h6, t6, hn),
                                   rotate(h4, -t4, rotate(h, -t123, r06hn)), h5)
                delta = p34 + rotate(h4, t4, p45)
                rhs = p16 - rotate(h, t123, delta)
                for t2 in sp._sp3_angles(p23, -p12, h, float(np.linalg.norm(rhs))):
                    w1 = p12 + rotate(h, t2, p23)
                    t1 = sp._sp1_angle(w1, rhs, h)
                    x32 = rotate(h, t1 + t2 - t123, hn2)
                    t3 = sp._sp1_angle(hn2, x32, -h)
                    cands.append([t1, t2, t3, t4, t5, t6])
    return cands


def _three_parallel_234_candidates(schain: KinematicChain, r06, p16,
                                   ) -> list[list[float]]:
    """Axes 2,3,4 share direction h.

    Projecting both the orientation and position equations onto h leaves a
    pair of coupled equations in t1 and t5 alone (a four-circle subproblem).
    For each root pair, alignments pin t6 and the lumped rotation
    t234 = t2+t3+t4; norm preservation and one alignment then split t2 and
    t3, and t4 closes the sum.
    """
    h1 = schain.joints[0].h
    h = schain.joints[1].h
    h5, h6 = schain.joints[4].h, schain.joints[5].h
    p12 = schain.displacement(0)
    p23 = schain.displacement(1)
    p34 = schain.displacement(2)
    p45 = schain.displacement(3)
    p56 = schain.displacement(4)
    hn = _normal_to(h)
    psum = float(np.dot(h, p12 + p23 + p34 + p45))
    res = sp.sp6(h, -h1, h5, r06 @ h6, -h6, p16, -p56, 0.0, psum)
    cands = []
    for t1, t5 in res.angle_tuples():
        t6 = sp._sp1_angle(rotate(h5, -t5, h), r06.T @ rotate(h1, t1, h), -h6)
        # R(h, t234) hn = R01^T R06 R56^T R45^T hn, applied as a chain.
        w_hn = rotate(h1, -t1, r06 @ rotate(h6, -t6, rotate(h5, -t5, hn)))
        t234 = sp._sp1_angle(hn, w_hn, h)
        u = (rotate(h1, -t1, p16) - p12
             - rotate(h, t234, p45 + rotate(h5, t5, p56)))
        for t3 in sp._sp3_angles(p34, -p23, h, float(np.linalg.norm(u))):
            w2 = p23 + rotate(h, t3, p34)
            t2 = sp._sp1_angle(w2, u, h)
            t4 = normalize_angle(t234 - t2 - t3)
            cands.append([t1, t2, t3, t4, t5, t6])
    return cands


# ---------------------------------------------------------------------------
# 3R chains
# ---------------------------------------------------------------------------


def _three_r_candidates(schain: KinematicChain, r03, p13, first_two_meet: bool,
                        ) -> list[list[float]]:
    """Two position constraints plus one orientation constraint.

    With the first two axes meeting (offset 1-2 zero) the position equation
    is a two-circle subproblem in t1, t2; otherwise norm preservation pins
    t2 and an alignment gives t1. One orientation projection on a normal to
    axis 3 then yields t3; full-pose filtering prunes the superset.
    """
    h1, h2, h3 = (schain.joints[i].h for i in range(3))
    p12 = schain.displacement(0)
    p23 = schain.displacement(1)
    pairs: list[tuple[float, float]] = []
    if first_two_meet:
        pairs.extend(sp._sp2_pairs(p13, p23, -h1, h2))
    else:
        for t2 in sp._sp3_angles(p23, -p12, h2, float(np.linalg.norm(p13))):
            w = p12 + rotate(h2, t2, p23)
            t1 = sp._sp1_angle(w, p13, h1)
            pairs.append((t1, t2))
    hn = _normal_to(h3)
    cands = []
    for t1, t2 in pairs:
        x = rotate(h2, -t2, rotate(h1, -t1, r03 @ hn))
        t3 = sp._sp1_angle(hn, x, h3)
        cands.append([t1, t2, t3])
    return cands


def solve_3r(target: IKTarget, chain: KinematicChain,
             tol: Tolerances = DEFAULT_TOL) -> IKSolutionSet:
    """Standalone 3R solver: classify, decompose, filter against the full pose."""
    from .remodel import classify

    if chain.n != 3:
        raise DegenerateChain(f"solve_3r needs a 3R chain, got n={chain.n}")
    plan = classify(chain)
    return solve(plan, target, tol)


# ---------------------------------------------------------------------------
# Filtering, assembly, dispatch
# ---------------------------------------------------------------------------


def filter_candidates(candidates: Sequence[Sequence[float]],
                      chain: KinematicChain, target: IKTarget,
                      tol: Tolerances = DEFAULT_TOL,
                      cls: Optional[KinematicClass] = None,
                      timing: float = 0.0) -> IKSolutionSet:
    """Substitute candidates into the full pose equation; keep the survivors.

    A candidate is exact when its FK matches the target within tolerance.
    Extraneous candidates are dropped, unless nothing is exact, in which
    case the single lowest-residual candidate is kept and flagged inexact.
    The result is deduplicated and sorted lexicographically by angles.
    """
    cls = cls or KinematicClass(ClassTag.UNSOLVABLE, False)
    if not candidates:
        return IKSolutionSet((), cls, timing)
    # FK is 2*pi-periodic, so candidates are evaluated raw and only the
    # surviving solutions are folded into the canonical interval.
    q = np.asarray(candidates, dtype=float)
    rots, pos = fk_batch(chain, q)
    dp = pos - target.pose.translation
    pos_err = np.sqrt(np.einsum("ij,ij->i", dp, dp))
    dr = rots - target.pose.rotation
    fro = np.sqrt(np.einsum("ijk,ijk->i", dr, dr))
    rot_err = 2.0 * np.arcsin(np.minimum(1.0, fro / (2.0 * math.sqrt(2.0))))
    scale = chain.characteristic_length()
    exact = (pos_err <= tol.fk_pos * scale) & (rot_err <= tol.fk_rot)
    if bool(np.any(exact)):
        idx = list(np.flatnonzero(exact))
    else:
        idx = [int(np.argmin(pos_err / scale + rot_err))]
    sols = [IKSolution(tuple(normalize_angle(float(a)) for a in q[i]),
                       bool(exact[i]), float(pos_err[i]), float(rot_err[i]))
            for i in idx]
    sols.sort(key=lambda s: s.q)
    if len(sols) > 1:
        qs = np.array([s.q for s in sols])
        diff = np.abs(qs[:, None, :] - qs[None, :, :]) % (2.0 * math.pi)
        diff = np.minimum(diff, 2.0 * math.pi - diff)
        close = np.max(diff, axis=2) <= tol.dedup
        kept: list[IKSolution] = []
        kept_idx: list[int] = []
        for i, s in enumerate(sols):
            if any(close[i, j] for j in kept_idx):
                continue
            kept.append(s)
            kept_idx.append(i)
        sols = kept
    return IKSolutionSet(tuple(sols), cls, timing)


def solve(plan: DecompositionPlan, target: IKTarget,
          tol: Tolerances = DEFAULT_TOL) -> IKSolutionSet:
    """All IK solutions for the target pose under a derived plan.

    Dispatches to the class routine on the remodeled chain (with the target
    transformed onto the inverted chain when the class was matched there),
    undoes the remodeling bookkeeping (axis flips, joint order reversal,
    locked joints), and validates every candidate against the original chain
    and target.
    """
    if not plan.cls.solvable():
        raise UnsolvableClass("plan has no known decomposition")
    t0 = time.perf_counter()
    s = plan.remodeled
    if plan.cls.inverted:
        b = plan.base
        r_t = target.pose.rotation @ b.ee_offset.rotation.T
        p_t = (target.pose.translation - r_t @ b.ee_offset.translation
               - b.joints[0].p)
        pose_s = Pose(r_t.T, -(r_t.T @ p_t))
    else:
        pose_s = target.pose
    r_last, p_1n = _joint_targets(s, pose_s)

    tag = plan.cls.tag
    if tag in (ClassTag.SPHERICAL_23_INTERSECT, ClassTag.SPHERICAL_12_PARALLEL,
               ClassTag.SPHERICAL_GENERAL):
        cands = _spherical_candidates(s, r_last, p_1n, tag)
    elif tag is ClassTag.THREE_PARALLEL_123_56:
        cands = _three_parallel_123_candidates(s, r_last, p_1n)
    elif tag is ClassTag.THREE_PARALLEL_234:
        cands = _three_parallel_234_candidates(s, r_last, p_1n)
    elif tag in (ClassTag.THREE_DOF_12_INTERSECT, ClassTag.THREE_DOF_23_INTERSECT):
        cands = _three_r_candidates(s, r_last, p_1n, first_two_meet=True)
    elif tag is ClassTag.THREE_DOF_NO_INTERSECT:
        cands = _three_r_candidates(s, r_last, p_1n, first_two_meet=False)
    else:  # pragma: no cover
        raise UnsolvableClass(f"no routine for {tag}")

    assembled = [_assemble(plan, cand) for cand in cands]
    timing = time.perf_counter() - t0
    return filter_candidates(assembled, plan.chain, target, tol,
                             cls=plan.cls, timing=timing)


def _assemble(plan: DecompositionPlan, cand: Sequence[float]) -> list[float]:
    """Map solving-chain angles back to the original chain's convention."""
    q = [s * a for s, a in zip(plan.angle_signs, cand)]
    if plan.cls.inverted:
        q.reverse()
    if plan.locked is not None:
        j, theta = plan.locked
        q.insert(j - 1, theta)
    return q


def solve_three_parallel_123_56intersect(target: IKTarget,
                                         chain: KinematicChain,
                                         ) -> list[list[float]]:
    """Candidate configurations for a remodeled 1,2,3-parallel chain."""
    r_last, p_1n = _joint_targets(chain, target.pose)
    return _three_parallel_123_candidates(chain, r_last, p_1n)


def solve_three_parallel_234(target: IKTarget, chain: KinematicChain,
                             ) -> list[list[float]]:
    """Candidate configurations for a 2,3,4-parallel chain."""
    r_last, p_1n = _joint_targets(chain, target.pose)
    return _three_parallel_234_candidates(chain, r_last, p_1n)
