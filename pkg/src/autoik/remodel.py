"""Axis-relation detection, reference-point remodeling, kinematic classification.

Remodeling slides axis reference points along their own lines (which leaves
forward kinematics invariant) so that the offsets a decomposition needs
vanish: both reference points of an intersecting pair move into the
intersection point. Classification inspects parallel/intersecting relations
of the chain and of its inversion and assigns one of the kinematic classes
with a known subproblem decomposition. The result is a reusable plan.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chain import JointAxis, KinematicChain, invert_chain, lock_joint
from .geom import Pose, line_pair_closest, normalize_angle

#: 1 - |h_i . h_j| threshold for treating axis directions as (anti)parallel.
PAR_EPS = 1e-8
#: Common-normal distance threshold, relative to the characteristic length.
INT_EPS = 1e-8


class UnsupportedJointCount(ValueError):
    """Classification requested for a chain with n not in {3, 6, 7}."""


class LockRequired(ValueError):
    """A 7R chain needs an explicit joint lock before classification."""


class AxisKind(enum.Enum):
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"
    INTERSECTING = "intersecting"
    SKEW = "skew"


@dataclass(frozen=True)
class AxisRelation:
    """Relation between consecutive axes i and i+1 (0-based pair index)."""

    pair: tuple[int, int]
    kind: AxisKind
    intersection_point: Optional[np.ndarray] = None


class ClassTag(enum.Enum):
    SPHERICAL_23_INTERSECT = "SphericalWrist_23Intersect"
    SPHERICAL_12_PARALLEL = "SphericalWrist_12Parallel"
    SPHERICAL_GENERAL = "SphericalWrist_General"
    THREE_PARALLEL_234 = "ThreeParallel_234"
    THREE_PARALLEL_123_56 = "ThreeParallel_123_56Intersect"
    THREE_DOF_12_INTERSECT = "ThreeDof_12Intersect"
    THREE_DOF_23_INTERSECT = "ThreeDof_23Intersect"
    THREE_DOF_NO_INTERSECT = "ThreeDof_NoIntersect"
    UNSOLVABLE = "Unsolvable"


@dataclass(frozen=True)
class KinematicClass:
    """Class tag plus whether it was matched on the inverted chain."""

    tag: ClassTag
    inverted: bool = False

    def solvable(self) -> bool:
        return self.tag is not ClassTag.UNSOLVABLE

    def __str__(self) -> str:
        return self.tag.value + (" (inverted)" if self.inverted else "")


@dataclass(frozen=True)
class DecompositionPlan:
    """Reusable product of the one-time derivation for a chain.

    ``remodeled`` is the chain the solver actually works on: the classified
    chain (inverted when cls.inverted), reference points shifted into the
    intersection points the decomposition needs, and antiparallel axes in
    exploited groups flipped to a shared direction. ``angle_signs`` maps the
    remodeled chain's joint angles back to the classified chain's convention
    (-1 for every flipped axis).
    """

    cls: KinematicClass
    chain: KinematicChain
    base: KinematicChain
    remodeled: KinematicChain
    angle_signs: tuple[int, ...]
    locked: Optional[tuple[int, float]] = None
    derivation_time: float = 0.0


def detect_relations(chain: KinematicChain, *, par_eps: float = PAR_EPS,
                     int_eps: float = INT_EPS) -> list[AxisRelation]:
    """One relation per consecutive axis pair.

    Parallelism takes precedence; non-parallel axes intersect when their
    common-normal distance is at most int_eps times the characteristic
    length, in which case the midpoint of the common normal is the
    designated intersection point.
    """
    scale = int_eps * chain.characteristic_length()
    out = []
    for i in range(chain.n - 1):
        a = chain.joints[i]
        b = chain.joints[i + 1]
        dot = float(np.dot(a.h, b.h))
        if 1.0 - abs(dot) < par_eps:
            kind = AxisKind.PARALLEL if dot > 0 else AxisKind.ANTIPARALLEL
            out.append(AxisRelation((i, i + 1), kind))
            continue
        c1, c2, dist = line_pair_closest(a.p, a.h, b.p, b.h)
        if dist <= scale:
            out.append(AxisRelation((i, i + 1), AxisKind.INTERSECTING,
                                    0.5 * (c1 + c2)))
        else:
            out.append(AxisRelation((i, i + 1), AxisKind.SKEW))
    return out


def remodel_chain(chain: KinematicChain, relations: Sequence[AxisRelation],
                  pairs: Optional[Sequence[tuple[int, int]]] = None,
                  *, int_eps: float = INT_EPS) -> KinematicChain:
    """Shift reference points of intersecting pairs into intersection points.

    Pairs are processed left to right; a reference point already placed by an
    earlier pair stays pinned, and a later pair whose intersection point
    coincides with the pinned point (within tolerance) snaps onto it so the
    offset becomes exactly zero (this is how a spherical wrist collapses to a
    single center point). When the first pair intersects, the first reference
    point moves too, re-anchoring the chain base on axis 1.

    ``pairs`` restricts the shifts to the given pair indices (0-based); by
    default every intersecting pair is shifted. FK is preserved because
    points only ever move along their own axis lines; the end-effector
    translation is compensated when the last reference point moves.
    """
    by_pair = {rel.pair: rel for rel in relations}
    if pairs is None:
        selected = [rel.pair for rel in relations
                    if rel.kind is AxisKind.INTERSECTING]
    else:
        selected = [tuple(p) for p in pairs]
    selected.sort()
    pts = [j.p.copy() for j in chain.joints]
    pinned = [False] * chain.n
    snap = int_eps * chain.characteristic_length()
    for i, i1 in selected:
        rel = by_pair.get((i, i1))
        if rel is None or rel.kind is not AxisKind.INTERSECTING:
            continue
        k = rel.intersection_point
        if pinned[i] and pinned[i1]:
            continue
        if pinned[i]:
            pts[i1] = pts[i] if float(np.linalg.norm(k - pts[i])) <= snap else k.copy()
            pinned[i1] = True
        elif pinned[i1]:
            pts[i] = pts[i1] if float(np.linalg.norm(k - pts[i1])) <= snap else k.copy()
            pinned[i] = True
        else:
            pts[i] = k.copy()
            pts[i1] = k.copy()
            pinned[i] = pinned[i1] = True
    ee_t = chain.ee_offset.translation + (chain.joints[-1].p - pts[-1])
    joints = tuple(JointAxis(j.h, p) for j, p in zip(chain.joints, pts))
    return KinematicChain(joints, Pose(chain.ee_offset.rotation, ee_t))


def _canonicalize_group(chain: KinematicChain, group: Sequence[int],
                        ) -> tuple[KinematicChain, tuple[int, ...]]:
    """Flip antiparallel axes in the group to share the first axis' direction.

    Returns the rebuilt chain and per-joint angle signs: a flipped axis
    reverses the sense of its joint angle, so reported solutions multiply by
    -1 at that joint.
    """
    signs = [1] * chain.n
    ref = chain.joints[group[0]].h
    joints = list(chain.joints)
    for i in group[1:]:
        if float(np.dot(ref, joints[i].h)) < 0.0:
            joints[i] = JointAxis(-joints[i].h, joints[i].p)
            signs[i] = -1
    return KinematicChain(tuple(joints), chain.ee_offset), tuple(signs)


def _is_parallel(rel: AxisRelation) -> bool:
    return rel.kind in (AxisKind.PARALLEL, AxisKind.ANTIPARALLEL)


def _wrist_center(chain: KinematicChain, relations: list[AxisRelation],
                  *, int_eps: float = INT_EPS) -> bool:
    """True when axes 4, 5, 6 meet in one common point."""
    r45 = relations[3]
    r56 = relations[4]
    if r45.kind is not AxisKind.INTERSECTING or r56.kind is not AxisKind.INTERSECTING:
        return False
    gap = float(np.linalg.norm(r45.intersection_point - r56.intersection_point))
    return gap <= int_eps * chain.characteristic_length()


def classify(chain: KinematicChain, lock: Optional[tuple[int, float]] = None,
             *, par_eps: float = PAR_EPS, int_eps: float = INT_EPS,
             ) -> DecompositionPlan:
    """Assign the chain to a kinematic class and build its solving plan.

    Supports n in {3, 6, 7}; a 7R chain must come with an explicit
    ``lock=(joint_index, angle)`` (1-based index) and is reduced to 6R first.
    The decision order for 6R chains is: spherical wrist on the chain, then
    on the inverted chain; three parallel axes 2,3,4, then 3,4,5 (via
    inversion); parallel axes 1,2,3 with axes 5,6 intersecting, then its
    mirror (via inversion). Anything else is Unsolvable.
    """
    t0 = time.perf_counter()
    base = chain
    locked = None
    if chain.n == 7:
        if lock is None:
            raise LockRequired("7R chain: pass lock=(joint_index, angle)")
        j, theta = lock
        theta = normalize_angle(float(theta))
        base = lock_joint(chain, j, theta)
        locked = (j, theta)
    elif lock is not None:
        raise ValueError("joint locking is only supported for 7R chains")
    if base.n not in (3, 6):
        raise UnsupportedJointCount(f"no decomposition for n={base.n}")

    if base.n == 6:
        cls, solving, signs = _classify6(base, par_eps, int_eps)
    else:
        cls, solving, signs = _classify3(base, par_eps, int_eps)
    dt = time.perf_counter() - t0
    return DecompositionPlan(cls=cls, chain=chain, base=base, remodeled=solving,
                             angle_signs=signs, locked=locked, derivation_time=dt)


def _classify6(base: KinematicChain, par_eps: float, int_eps: float):
    candidates = []
    for inverted in (False, True):
        c = invert_chain(base) if inverted else base
        candidates.append((inverted, c, detect_relations(c, par_eps=par_eps,
                                                         int_eps=int_eps)))

    for inverted, c, rels in candidates:
        if _wrist_center(c, rels, int_eps=int_eps):
            return _plan_spherical(c, rels, inverted, int_eps)

    for inverted, c, rels in candidates:
        if _is_parallel(rels[1]) and _is_parallel(rels[2]):
            solving, signs = _canonicalize_group(c, [1, 2, 3])
            return KinematicClass(ClassTag.THREE_PARALLEL_234, inverted), solving, signs

    for inverted, c, rels in candidates:
        if (_is_parallel(rels[0]) and _is_parallel(rels[1])
                and rels[4].kind is AxisKind.INTERSECTING):
            solving = remodel_chain(c, rels, pairs=[(4, 5)], int_eps=int_eps)
            solving, signs = _canonicalize_group(solving, [0, 1, 2])
            return (KinematicClass(ClassTag.THREE_PARALLEL_123_56, inverted),
                    solving, signs)

    return (KinematicClass(ClassTag.UNSOLVABLE, False), base,
            tuple([1] * base.n))


def _plan_spherical(c: KinematicChain, rels: list[AxisRelation],
                    inverted: bool, int_eps: float):
    signs = tuple([1] * c.n)
    if rels[1].kind is AxisKind.INTERSECTING:
        solving = remodel_chain(c, rels, pairs=[(1, 2), (3, 4), (4, 5)],
                                int_eps=int_eps)
        return (KinematicClass(ClassTag.SPHERICAL_23_INTERSECT, inverted),
                solving, signs)
    solving = remodel_chain(c, rels, pairs=[(3, 4), (4, 5)], int_eps=int_eps)
    if _is_parallel(rels[0]):
        solving, signs = _canonicalize_group(solving, [0, 1])
        return (KinematicClass(ClassTag.SPHERICAL_12_PARALLEL, inverted),
                solving, signs)
    return KinematicClass(ClassTag.SPHERICAL_GENERAL, inverted), solving, signs


def _classify3(base: KinematicChain, par_eps: float, int_eps: float):
    rels = detect_relations(base, par_eps=par_eps, int_eps=int_eps)
    if rels[0].kind is AxisKind.INTERSECTING:
        solving = remodel_chain(base, rels, pairs=[(0, 1)], int_eps=int_eps)
        return (KinematicClass(ClassTag.THREE_DOF_12_INTERSECT, False),
                solving, (1, 1, 1))
    if rels[1].kind is AxisKind.INTERSECTING:
        inv = invert_chain(base)
        irels = detect_relations(inv, par_eps=par_eps, int_eps=int_eps)
        solving = remodel_chain(inv, irels, pairs=[(0, 1)], int_eps=int_eps)
        return (KinematicClass(ClassTag.THREE_DOF_23_INTERSECT, True),
                solving, (1, 1, 1))
    return (KinematicClass(ClassTag.THREE_DOF_NO_INTERSECT, False),
            base, (1, 1, 1))
