"""Minimal 3D geometry kernel: vectors, rotations, rigid transforms, line geometry.

All functions are pure and operate on plain numpy arrays (float64). Angles are
radians; the canonical angle interval is (-pi, pi] throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: Two unit directions d1, d2 are treated as (anti)parallel when
#: 1 - |d1 . d2| falls below this threshold.
PARALLEL_EPS = 1e-8

#: Orthonormality / unit-norm tolerance for validated inputs.
UNIT_TOL = 1e-12


class ParallelLines(ValueError):
    """Closest-point query posed for a pair of (near-)parallel lines."""


def as_vec3(v) -> np.ndarray:
    """Coerce to a finite (3,) float array."""
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector components must be finite")
    return a


def unit(v) -> np.ndarray:
    """Normalize v to unit length. Rejects near-zero input (norm < 1e-9)."""
    a = as_vec3(v)
    n = float(np.linalg.norm(a))
    if n < 1e-9:
        raise ValueError("cannot normalize a near-zero vector")
    return a / n


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    return abs(float(np.linalg.norm(as_vec3(v))) - 1.0) <= tol


def check_rotation(r: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate that r is a proper rotation (orthonormal, det +1)."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValueError("rotation entries must be finite")
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        raise ValueError("matrix is not orthonormal")
    if abs(float(np.linalg.det(r)) - 1.0) > tol:
        raise ValueError("matrix determinant is not +1")
    return r


def rodrigues(h, theta: float) -> np.ndarray:
    """Rotation matrix for angle theta about the unit axis h.

    The axis is assumed unit length (enforce with unit() upstream); the
    returned matrix satisfies R @ h == h, R orthonormal, det R == +1.
    """
    x, y, z = float(h[0]), float(h[1]), float(h[2])
    c = math.cos(theta)
    s = math.sin(theta)
    v = 1.0 - c
    return np.array(
        [
            [c + v * x * x, v * x * y - s * z, v * x * z + s * y],
            [v * x * y + s * z, c + v * y * y, v * y * z - s * x],
            [v * x * z - s * y, v * y * z + s * x, c + v * z * z],
        ]
    )


def rotate(h, theta: float, v) -> np.ndarray:
    """Apply the rotation about unit axis h by theta to v without forming R.

    Uses v cos(t) + (h x v) sin(t) + h (h.v)(1 - cos(t)); cheaper than
    rodrigues() when a single vector is rotated.
    """
    c = math.cos(theta)
    s = math.sin(theta)
    hv = float(h[0] * v[0] + h[1] * v[1] + h[2] * v[2])
    cx = h[1] * v[2] - h[2] * v[1]
    cy = h[2] * v[0] - h[0] * v[2]
    cz = h[0] * v[1] - h[1] * v[0]
    k = hv * (1.0 - c)
    return np.array(
        [
            v[0] * c + cx * s + h[0] * k,
            v[1] * c + cy * s + h[1] * k,
            v[2] * c + cz * s + h[2] * k,
        ]
    )


def normalize_angle(theta: float) -> float:
    """Map a finite angle to the canonical interval (-pi, pi]."""
    if not math.isfinite(theta):
        raise ValueError("angle must be finite")
    r = theta % TWO_PI
    if r > math.pi:
        r -= TWO_PI
    return r


def angle_diff(a: float, b: float) -> float:
    """Absolute angular separation of a and b modulo 2*pi, in [0, pi]."""
    return abs(normalize_angle(a - b))


def rotation_angle_between(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic angle between two rotations.

    Computed from the Frobenius norm of the difference, which stays accurate
    for very small angles where the trace formula loses precision:
    ||R1 - R2||_F = 2*sqrt(2)*|sin(angle/2)|.
    """
    d = float(np.linalg.norm(r1 - r2))
    s = d / (2.0 * math.sqrt(2.0))
    if s >= 1.0:
        return math.pi
    return 2.0 * math.asin(s)


def line_pair_closest(p1, d1, p2, d2) -> tuple[np.ndarray, np.ndarray, float]:
    """Closest points between two non-parallel 3D lines.

    Each line is given by a point p and a unit direction d. Returns
    (c1, c2, dist) with c1 on line 1 and c2 on line 2 minimizing their
    distance. The midpoint (c1 + c2) / 2 serves as the designated
    intersection point for nearly intersecting axes.

    Raises ParallelLines when 1 - |d1 . d2| < PARALLEL_EPS.
    """
    p1 = as_vec3(p1)
    p2 = as_vec3(p2)
    d1 = as_vec3(d1)
    d2 = as_vec3(d2)
    b = float(np.dot(d1, d2))
    if 1.0 - abs(b) < PARALLEL_EPS:
        raise ParallelLines("lines are parallel within tolerance")
    w = p2 - p1
    e = float(np.dot(w, d1))
    f = float(np.dot(w, d2))
    denom = 1.0 - b * b
    t1 = (e - b * f) / denom
    t2 = (b * e - f) / denom
    c1 = p1 + t1 * d1
    c2 = p2 + t2 * d2
    return c1, c2, float(np.linalg.norm(c1 - c2))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotation matrix plus translation vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _frozen(check_rotation(self.rotation)))
        object.__setattr__(self, "translation", _frozen(as_vec3(self.translation)))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def transform(self, point) -> np.ndarray:
        return self.rotation @ as_vec3(point) + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: (self * other)(x) = self(other(x))."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -(rt @ self.translation))

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m
