"""Robot description ingestion and result serialization.

Two input formats are supported: a native JSON document listing joint axes
in the base frame at the zero configuration, and a URDF subset (revolute,
continuous and fixed joints on an unbranched base-to-tip path; fixed joints
are folded into the neighboring offsets). Numbers are serialized with 17
significant digits so doubles survive a text round trip.
"""

from __future__ import annotations

import io
import json
import math
import xml.etree.ElementTree as ET
from typing import Optional

import numpy as np

from .chain import JointAxis, KinematicChain
from .geom import Pose
from .solver import IKSolutionSet


class ParseError(ValueError):
    """Malformed document (syntax or missing structure)."""


class ValidationError(ValueError):
    """Well-formed document with invalid values (zero axis, bad rotation)."""


class UnsupportedJointType(ParseError):
    """A joint on the base-to-tip path is neither revolute/continuous nor fixed."""


class PathNotFound(ParseError):
    """No joint path connects the requested base link to the tip link."""


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _check_vec(v, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ValidationError(f"{what} must be three finite reals")
    return a


def parse_native(text: str) -> KinematicChain:
    """Parse the native JSON chain document.

    Schema: {"joints": [{"h": [x,y,z], "p": [x,y,z]}, ...],
             "ee": {"R": 3x3 rows, "p": [x,y,z]}}.
    Axis directions are normalized on input; near-zero axes and non-rotation
    matrices are rejected.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at position {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "joints" not in doc:
        raise ParseError("document must be an object with a 'joints' list")
    raw_joints = doc["joints"]
    if not isinstance(raw_joints, list) or not raw_joints:
        raise ParseError("'joints' must be a non-empty list")
    joints = []
    for i, j in enumerate(raw_joints):
        if not isinstance(j, dict) or "h" not in j or "p" not in j:
            raise ParseError(f"joint {i}: expected an object with 'h' and 'p'")
        h = _check_vec(j["h"], f"joint {i} axis")
        if float(np.linalg.norm(h)) <= 1e-9:
            raise ValidationError(f"joint {i} axis has near-zero norm")
        p = _check_vec(j["p"], f"joint {i} reference point")
        joints.append(JointAxis(h / np.linalg.norm(h), p))
    ee = doc.get("ee", {})
    r = np.asarray(ee.get("R", np.eye(3).tolist()), dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise ValidationError("ee.R must be a 3x3 matrix of finite reals")
    r = _orthonormalized(r)
    p_ee = _check_vec(ee.get("p", [0.0, 0.0, 0.0]), "ee translation")
    try:
        return KinematicChain(tuple(joints), Pose(r, p_ee))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _orthonormalized(r: np.ndarray) -> np.ndarray:
    """Validate r is a rotation within 1e-6, then project to the nearest one."""
    if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-6 or np.linalg.det(r) < 0.0:
        raise ValidationError("ee.R is not a rotation matrix")
    u, _, vt = np.linalg.svd(r)
    out = u @ vt
    if np.linalg.det(out) < 0.0:
        raise ValidationError("ee.R is not a proper rotation")
    return out


def serialize_chain(chain: KinematicChain) -> str:
    """Native JSON document for a chain (17-significant-digit reals)."""
    doc = {
        "joints": [
            {"h": [float(x) for x in j.h], "p": [float(x) for x in j.p]}
            for j in chain.joints
        ],
        "ee": {
            "R": [[float(x) for x in row] for row in chain.ee_offset.rotation],
            "p": [float(x) for x in chain.ee_offset.translation],
        },
    }
    return json.dumps(doc, indent=2)


def _rpy_matrix(r: float, p: float, y: float) -> np.ndarray:
    """Fixed-axis XYZ convention: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def _floats(text: Optional[str], default: tuple[float, ...]) -> list[float]:
    if text is None:
        return list(default)
    try:
        vals = [float(t) for t in text.split()]
    except ValueError as exc:
        raise ParseError(f"bad numeric attribute: {text!r}") from exc
    if len(vals) != len(default):
        raise ParseError(f"expected {len(default)} values, got {text!r}")
    return vals


def parse_urdf(text: str, base_link: str, tip_link: str) -> KinematicChain:
    """Extract the base-to-tip revolute chain from a URDF document.

    Fixed joints fold into the neighboring offsets. Joint axes and reference
    points are expressed in the base-link frame at the zero pose by
    accumulating the joint origins along the path; branches off the path are
    ignored. Only revolute/continuous/fixed joints may appear on the path.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"invalid XML: {exc}") from exc
    if root.tag != "robot":
        raise ParseError("root element must be <robot>")

    links = {el.get("name") for el in root.findall("link")}
    joints = []
    by_parent: dict[str, list[int]] = {}
    for el in root.findall("joint"):
        parent = el.find("parent")
        child = el.find("child")
        if parent is None or child is None:
            raise ParseError(f"joint {el.get('name')!r} lacks parent/child")
        origin = el.find("origin")
        xyz = _floats(origin.get("xyz") if origin is not None else None,
                      (0.0, 0.0, 0.0))
        rpy = _floats(origin.get("rpy") if origin is not None else None,
                      (0.0, 0.0, 0.0))
        axis_el = el.find("axis")
        axis = _floats(axis_el.get("xyz") if axis_el is not None else None,
                       (1.0, 0.0, 0.0))
        joints.append({
            "name": el.get("name"),
            "type": el.get("type"),
            "parent": parent.get("link"),
            "child": child.get("link"),
            "xyz": np.array(xyz),
            "rpy": rpy,
            "axis": np.array(axis),
        })
        by_parent.setdefault(parent.get("link"), []).append(len(joints) - 1)

    if base_link not in links or tip_link not in links:
        raise PathNotFound(f"link {base_link!r} or {tip_link!r} not in document")

    # URDF joints form a tree from parent to child; walk down to the tip.
    path = _find_path(by_parent, joints, base_link, tip_link)
    if path is None:
        raise PathNotFound(f"no joint path from {base_link!r} to {tip_link!r}")

    rot = np.eye(3)
    pos = np.zeros(3)
    axes: list[JointAxis] = []
    for idx in path:
        j = joints[idx]
        pos = pos + rot @ j["xyz"]
        rot = rot @ _rpy_matrix(*j["rpy"])
        if j["type"] in ("revolute", "continuous"):
            h = rot @ j["axis"]
            n = float(np.linalg.norm(h))
            if n <= 1e-9:
                raise ValidationError(f"joint {j['name']!r} axis has zero norm")
            axes.append(JointAxis(h / n, pos.copy()))
        elif j["type"] == "fixed":
            continue
        else:
            raise UnsupportedJointType(
                f"joint {j['name']!r} of type {j['type']!r} on the path")
    if not axes:
        raise ValidationError("no revolute joints on the base-to-tip path")
    ee = Pose(rot, pos - axes[-1].p)
    try:
        return KinematicChain(tuple(axes), ee)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _find_path(by_parent, joints, base_link, tip_link):
    stack = [(base_link, [])]
    seen = {base_link}
    while stack:
        link, path = stack.pop()
        if link == tip_link:
            return path
        for idx in by_parent.get(link, []):
            child = joints[idx]["child"]
            if child not in seen:
                seen.add(child)
                stack.append((child, path + [idx]))
    return None


def serialize_solutions(sol_set: IKSolutionSet, fmt: str = "json",
                        n_joints: Optional[int] = None) -> str:
    """Render a solution set as CSV or JSON.

    Field order is fixed: solution index, theta1..thetaN, exact flag,
    position error, rotation error. CSV uses '.' decimals, a header row and
    LF line endings; an empty set yields a header-only document.
    """
    if n_joints is None:
        n_joints = len(sol_set.solutions[0].q) if sol_set.solutions else 0
    if fmt == "json":
        doc = {
            "class": sol_set.class_used.tag.value,
            "inverted": sol_set.class_used.inverted,
            "solve_time_us": sol_set.timing * 1e6,
            "solutions": [
                {
                    "index": i,
                    "theta": [float(a) for a in s.q],
                    "exact": s.exact,
                    "pos_err": s.pos_err,
                    "rot_err": s.rot_err,
                }
                for i, s in enumerate(sol_set.solutions)
            ],
        }
        return json.dumps(doc, indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        cols = ["index"] + [f"theta{k + 1}" for k in range(n_joints)]
        cols += ["exact", "pos_err", "rot_err"]
        buf.write(",".join(cols) + "\n")
        for i, s in enumerate(sol_set.solutions):
            row = [str(i)] + [_g17(a) for a in s.q]
            row += ["true" if s.exact else "false", _g17(s.pos_err), _g17(s.rot_err)]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")
