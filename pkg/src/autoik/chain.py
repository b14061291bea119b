"""Kinematic chain model, forward kinematics, chain inversion, joint locking.

A chain is parameterized by its joint axes at the zero configuration, each a
unit direction plus a reference point expressed in the base frame, and a
static end-effector offset relative to the last joint frame. Chains are
immutable after construction; every operation returns a new chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geom import PARALLEL_EPS, Pose, _frozen, as_vec3, rodrigues, unit

JointConfig = Sequence[float]


class DimensionMismatch(ValueError):
    """Joint configuration length does not match the chain."""


class IndexOutOfRange(IndexError):
    """Joint index outside 1..n."""


@dataclass(frozen=True)
class JointAxis:
    """A revolute joint axis: unit direction and a reference point on it."""

    h: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", _frozen(unit(self.h)))
        object.__setattr__(self, "p", _frozen(as_vec3(self.p)))


@dataclass(frozen=True)
class KinematicChain:
    """Ordered revolute joint axes plus a static end-effector offset.

    ``ee_offset`` holds the end-effector pose relative to the last joint
    frame at the zero configuration (where that frame is aligned with the
    base frame), i.e. the static tail rotation and the translation from the
    last reference point to the end effector.
    """

    joints: tuple[JointAxis, ...]
    ee_offset: Pose

    def __post_init__(self):
        joints = tuple(self.joints)
        if len(joints) < 1:
            raise ValueError("a chain needs at least one joint")
        object.__setattr__(self, "joints", joints)
        for a, b in zip(joints, joints[1:]):
            if 1.0 - abs(float(np.dot(a.h, b.h))) < PARALLEL_EPS:
                # Parallel directions: coincident lines are degenerate.
                off = b.p - a.p
                perp = off - np.dot(off, a.h) * a.h
                scale = max(1.0, float(np.linalg.norm(a.p)), float(np.linalg.norm(b.p)))
                if float(np.linalg.norm(perp)) < 1e-10 * scale:
                    raise ValueError("consecutive joint axes coincide")

    @property
    def n(self) -> int:
        return len(self.joints)

    def axis_dirs(self) -> np.ndarray:
        return np.array([j.h for j in self.joints])

    def ref_points(self) -> np.ndarray:
        return np.array([j.p for j in self.joints])

    def displacement(self, i: int) -> np.ndarray:
        """Offset p_{i,i+1} between reference points of joints i and i+1 (0-based i)."""
        return self.joints[i + 1].p - self.joints[i].p

    def characteristic_length(self) -> float:
        """Sum of inter-joint and end-effector offset norms, floored at 1."""
        total = sum(
            float(np.linalg.norm(self.displacement(i))) for i in range(self.n - 1)
        )
        total += float(np.linalg.norm(self.ee_offset.translation))
        return max(1.0, total)

    def zero_pose(self) -> Pose:
        """End-effector pose at the zero configuration."""
        return Pose(self.ee_offset.rotation,
                    self.joints[-1].p + self.ee_offset.translation)


def fk(chain: KinematicChain, q: JointConfig) -> Pose:
    """Forward kinematics: end-effector pose for joint angles q.

    Accumulates rotations about the zero-configuration axes, translating each
    inter-joint offset by the rotation of all preceding joints, then applies
    the static end-effector offset.
    """
    n = chain.n
    q = np.asarray(q, dtype=float)
    if q.shape != (n,):
        raise DimensionMismatch(f"expected {n} joint angles, got shape {q.shape}")
    joints = chain.joints
    r = rodrigues(joints[0].h, q[0])
    p = joints[0].p.copy()
    for i in range(n - 1):
        p += r @ (joints[i + 1].p - joints[i].p)
        r = r @ rodrigues(joints[i + 1].h, q[i + 1])
    p += r @ chain.ee_offset.translation
    return Pose(r @ chain.ee_offset.rotation, p)


def fk_batch(chain: KinematicChain, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized FK over m configurations.

    qs has shape (m, n); returns rotations (m, 3, 3) and translations (m, 3).
    """
    qs = np.asarray(qs, dtype=float)
    m, n = qs.shape
    if n != chain.n:
        raise DimensionMismatch(f"expected {chain.n} joint angles, got {n}")
    joints = chain.joints
    rots = _rot_batch(chain.axis_dirs(), qs)
    r = rots[0]
    p = np.broadcast_to(joints[0].p, (m, 3)).copy()
    for i in range(n - 1):
        d = joints[i + 1].p - joints[i].p
        p += r @ d
        r = r @ rots[i + 1]
    p += r @ chain.ee_offset.translation
    return r @ chain.ee_offset.rotation, p


def _rot_batch(axes: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """Rotation matrices (n, m, 3, 3) for m angle rows over n fixed unit axes.

    axes has shape (n, 3); qs has shape (m, n). All n x m matrices are filled
    in one pass to keep the per-call overhead off hot solve paths.
    """
    x = axes[:, 0, None]
    y = axes[:, 1, None]
    z = axes[:, 2, None]
    c = np.cos(qs.T)
    s = np.sin(qs.T)
    v = 1.0 - c
    out = np.empty((axes.shape[0], qs.shape[0], 3, 3))
    out[..., 0, 0] = c + v * x * x
    out[..., 0, 1] = v * x * y - s * z
    out[..., 0, 2] = v * x * z + s * y
    out[..., 1, 0] = v * x * y + s * z
    out[..., 1, 1] = c + v * y * y
    out[..., 1, 2] = v * y * z - s * x
    out[..., 2, 0] = v * x * z - s * y
    out[..., 2, 1] = v * y * z + s * x
    out[..., 2, 2] = c + v * z * z
    return out


def invert_chain(chain: KinematicChain) -> KinematicChain:
    """Swap base and end effector of the joint chain.

    Joint axes reverse order and flip sign; inter-joint offsets reverse and
    negate. Reference points are re-anchored so the new first point is the
    origin, and the returned chain carries an identity end-effector offset:
    the original static offsets are accounted for by the caller when
    transforming a target pose. With angles applied in reversed order, the
    bare inverted chain realizes the inverse of the bare original chain.
    """
    pts = chain.ref_points()
    last = pts[-1]
    joints = tuple(
        JointAxis(-chain.joints[k].h, pts[k] - last)
        for k in range(chain.n - 1, -1, -1)
    )
    return KinematicChain(joints, Pose.identity())


def lock_joint(chain: KinematicChain, j: int, theta_j: float) -> KinematicChain:
    """Freeze joint j (1-based) at angle theta_j and fold it out of the chain.

    The fixed rotation about axis j is absorbed by rigidly transforming every
    subsequent axis and the end-effector offset about the locked axis line,
    so the reduced (n-1)-joint chain reproduces the original FK with theta_j
    held constant.
    """
    n = chain.n
    if not 1 <= j <= n:
        raise IndexOutOfRange(f"joint index {j} outside 1..{n}")
    if n == 1:
        raise ValueError("cannot lock the only joint of a 1R chain")
    k = j - 1
    pivot = chain.joints[k].p
    rot = rodrigues(chain.joints[k].h, theta_j)

    new_joints = list(chain.joints[:k])
    for jx in chain.joints[k + 1:]:
        new_joints.append(JointAxis(rot @ jx.h, pivot + rot @ (jx.p - pivot)))

    m = chain.zero_pose()
    new_rot = rot @ m.rotation
    new_pos = pivot + rot @ (m.translation - pivot)
    last_p = new_joints[-1].p
    return KinematicChain(tuple(new_joints), Pose(new_rot, new_pos - last_p))
