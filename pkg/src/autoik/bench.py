"""Experiment harness: named test robots, random solvable robot generation,
FK round-trip accuracy/timing studies, and a small numerical IK baseline.

The numerical baseline (damped least squares on a finite-difference
Jacobian) is deliberately simple; it serves as an independent oracle for the
analytical solver, not as a performance contender. Seeded generators make
every experiment reproducible; identical seeds give identical reports up to
the timing columns.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import JointAxis, KinematicChain, fk, invert_chain
from .geom import Pose, normalize_angle, rodrigues, unit
from .remodel import ClassTag, KinematicClass, classify
from .solver import DEFAULT_TOL, IKTarget, Tolerances, solve

TWO_PI = 2.0 * math.pi

SOLVABLE_6R_TAGS = (
    ClassTag.SPHERICAL_23_INTERSECT,
    ClassTag.SPHERICAL_12_PARALLEL,
    ClassTag.SPHERICAL_GENERAL,
    ClassTag.THREE_PARALLEL_234,
    ClassTag.THREE_PARALLEL_123_56,
)


@dataclass(frozen=True)
class RobotSample:
    chain: KinematicChain
    cls_expected: KinematicClass
    seed: int


@dataclass(frozen=True)
class RoundtripRow:
    """Aggregate of one robot's round-trip study."""

    name: str
    n_poses: int
    recovery_rate: float
    pos_err_mean: float
    pos_err_max: float
    rot_err_mean: float
    rot_err_max: float
    derive_us: float
    solve_us_p50: float
    solve_us_p95: float
    solve_us_max: float


# ---------------------------------------------------------------------------
# Named test robots
# ---------------------------------------------------------------------------


def _u(v) -> np.ndarray:
    return unit(np.asarray(v, dtype=float))


def ur5_like() -> KinematicChain:
    """Three parallel axes 2,3,4 plus two intersecting wrist pairs."""
    joints = (
        JointAxis([0, 0, 1], [0, 0, 0.089159]),
        JointAxis([0, 1, 0], [0, 0.13585, 0.089159]),
        JointAxis([0, 1, 0], [0.425, 0.01615, 0.089159]),
        JointAxis([0, 1, 0], [0.81725, 0.01615, 0.089159]),
        JointAxis([0, 0, -1], [0.81725, 0.10915, 0.089159]),
        JointAxis([0, 1, 0], [0.81725, 0.10915, -0.005491]),
    )
    ee_rot = rodrigues(np.array([0.0, 1.0, 0.0]), math.pi) @ rodrigues(
        np.array([0.0, 0.0, 1.0]), math.pi / 2)
    return KinematicChain(joints, Pose(ee_rot, [0, 0.0823, 0]))


def puma_like() -> KinematicChain:
    """Spherical wrist with intersecting axes 2 and 3 (shoulder offset)."""
    joints = (
        JointAxis([0, 0, 1], [0, 0, 0]),
        JointAxis([0, 1, 0], [0.15, 0.1, 0.45]),
        JointAxis([1, 0, 0], [0.35, 0.05, 0.45]),
        JointAxis([1, 0, 0], [0.4, 0.0, 0.8]),
        JointAxis([0, 1, 0], [0.5, 0.05, 0.8]),
        JointAxis([1, 0, 0], [0.6, 0.0, 0.8]),
    )
    return KinematicChain(
        joints, Pose(rodrigues(np.array([0.0, 1.0, 0.0]), 0.3), [0.1, 0.02, 0.03]))


def irb6640_like() -> KinematicChain:
    """Spherical wrist with parallel axes 1 and 2."""
    w = np.array([0.8, 0.1, 0.9])
    h6 = _u([0, 0.2, 1])
    joints = (
        JointAxis([0, 0, 1], [0, 0, 0]),
        JointAxis([0, 0, 1], [0.3, 0.1, 0.2]),
        JointAxis([0, 1, 0], [0.45, 0.0, 0.7]),
        JointAxis([1, 0, 0], [0.65, 0.1, 0.9]),
        JointAxis([0, 1, 0], [0.8, 0.0, 0.9]),
        JointAxis(h6, w - 0.1 * h6),
    )
    return KinematicChain(
        joints, Pose(rodrigues(np.array([1.0, 0.0, 0.0]), -0.4), [0.08, 0.0, 0.05]))


def spherical_like() -> KinematicChain:
    """Spherical wrist with a fully generic position substructure."""
    w = np.array([0.7, -0.2, 0.9])
    h4 = _u([1, 0.2, -0.1])
    h5 = _u([0.1, 1, 0.3])
    h6 = _u([0.9, -0.3, 1])
    joints = (
        JointAxis([0, 0, 1], [0, 0, 0]),
        JointAxis(_u([1, 1, 0.2]), [0.2, -0.1, 0.4]),
        JointAxis(_u([-0.3, 1, 0.5]), [0.5, 0.2, 0.6]),
        JointAxis(h4, w - 0.15 * h4),
        JointAxis(h5, w + 0.05 * h5),
        JointAxis(h6, w + 0.1 * h6),
    )
    return KinematicChain(
        joints, Pose(rodrigues(_u([0.2, 1, 0.1]), 0.7), [0.05, 0.03, 0.08]))


def parallel3_like() -> KinematicChain:
    """Parallel axes 1,2,3 with axes 5 and 6 intersecting."""
    k = np.array([1.0, 0.1, 0.55])
    h6 = _u([0, 1, 1])
    joints = (
        JointAxis([0, 1, 0], [0, 0, 0]),
        JointAxis([0, 1, 0], [0.3, 0.05, 0.1]),
        JointAxis([0, 1, 0], [0.65, -0.05, 0.15]),
        JointAxis([0, 0, 1], [0.9, 0, 0.3]),
        JointAxis([1, 0, 0], [0.9, 0.1, 0.55]),
        JointAxis(h6, k + 0.12 * h6),
    )
    return KinematicChain(
        joints, Pose(rodrigues(np.array([1.0, 0.0, 0.0]), 0.2), [0.06, 0.0, 0.02]))


def panda7_like() -> KinematicChain:
    """7R chain whose last three axes meet in a point (solved by locking)."""
    joints = (
        JointAxis([0, 0, 1], [0, 0, 0.333]),
        JointAxis([0, 1, 0], [0, 0, 0.333]),
        JointAxis([0, 0, 1], [0, 0, 0.649]),
        JointAxis([0, -1, 0], [0.0825, 0, 0.649]),
        JointAxis([0, 0, 1], [0, 0, 0.9]),
        JointAxis([0, 1, 0], [0, 0.1, 1.033]),
        JointAxis([1, 0, 0], [0.05, 0, 1.033]),
    )
    return KinematicChain(
        joints, Pose(rodrigues(np.array([0.0, 0.0, 1.0]), 0.785), [0.088, 0, 0.107]))


def named_robots() -> dict[str, KinematicChain]:
    """The five 6R study robots, keyed by their conventional names."""
    return {
        "ur5_like": ur5_like(),
        "puma_like": puma_like(),
        "irb6640_like": irb6640_like(),
        "spherical": spherical_like(),
        "parallel3": parallel3_like(),
    }


# ---------------------------------------------------------------------------
# Random solvable robots
# ---------------------------------------------------------------------------


def random_solvable_class(rng: np.random.Generator) -> KinematicClass:
    """Draw uniformly over the solvable 6R classes and the inversion flag."""
    tag = SOLVABLE_6R_TAGS[int(rng.integers(len(SOLVABLE_6R_TAGS)))]
    return KinematicClass(tag, bool(rng.integers(2)))


def generate_random_solvable(seed: int, cls: KinematicClass) -> RobotSample:
    """Sample a random chain that classifies exactly as ``cls``.

    Axes and offsets are drawn uniformly and then constrained to the class:
    parallel axes are copied (with random antiparallel sign flips),
    intersecting axes are routed through a shared point, and reference
    points are scattered along their axes so remodeling has work to do.
    Draws that classify differently (e.g. an accidental extra intersection)
    are rejected and redrawn; after a bounded number of attempts a
    deterministic perturbation of the named template for the class is used.
    """
    if not cls.solvable():
        raise ValueError("cannot generate an unsolvable robot")
    rng = np.random.default_rng(seed)
    for _ in range(40):
        chain = _draw_chain(rng, cls.tag)
        if cls.inverted:
            chain = _invert_geometry(chain, rng)
        got = classify(chain)
        if got.cls == cls:
            return RobotSample(chain, cls, seed)
    chain = _perturbed_template(cls, rng)
    got = classify(chain)
    if got.cls != cls:
        raise RuntimeError(f"template fallback failed for {cls}")
    return RobotSample(chain, cls, seed)


def _rand_unit(rng) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = float(np.linalg.norm(v))
        if n > 1e-3:
            return v / n


def _rand_unit_not_parallel(rng, ref, min_sin: float = 0.15) -> np.ndarray:
    while True:
        h = _rand_unit(rng)
        if float(np.linalg.norm(np.cross(h, ref))) > min_sin:
            return h


def _draw_chain(rng, tag: ClassTag) -> KinematicChain:
    def pt():
        return rng.uniform(-0.5, 0.5, 3)

    if tag in (ClassTag.SPHERICAL_23_INTERSECT, ClassTag.SPHERICAL_12_PARALLEL,
               ClassTag.SPHERICAL_GENERAL):
        h1 = _rand_unit(rng)
        if tag is ClassTag.SPHERICAL_12_PARALLEL:
            h2 = h1 * (1.0 if rng.integers(2) else -1.0)
        else:
            h2 = _rand_unit_not_parallel(rng, h1)
        h3 = _rand_unit_not_parallel(rng, h2)
        p1 = pt()
        p2 = pt()
        if tag is ClassTag.SPHERICAL_23_INTERSECT:
            k23 = pt()
            p2 = k23 + rng.uniform(-0.4, 0.4) * h2
            p3 = k23 + rng.uniform(-0.4, 0.4) * h3
        else:
            p3 = pt()
        w = pt() + np.array([0.0, 0.0, 0.6])
        h4 = _rand_unit(rng)
        h5 = _rand_unit_not_parallel(rng, h4)
        h6 = _rand_unit_not_parallel(rng, h5)
        joints = (
            JointAxis(h1, p1), JointAxis(h2, p2), JointAxis(h3, p3),
            JointAxis(h4, w + rng.uniform(0.05, 0.4) * h4),
            JointAxis(h5, w + rng.uniform(0.05, 0.4) * h5),
            JointAxis(h6, w + rng.uniform(0.05, 0.4) * h6),
        )
    elif tag is ClassTag.THREE_PARALLEL_234:
        h1 = _rand_unit(rng)
        h = _rand_unit_not_parallel(rng, h1)
        h5 = _rand_unit_not_parallel(rng, h)
        h6 = _rand_unit_not_parallel(rng, h5)
        signs = rng.choice([-1.0, 1.0], size=2)
        joints = (
            JointAxis(h1, pt()), JointAxis(h, pt()),
            JointAxis(signs[0] * h, pt()), JointAxis(signs[1] * h, pt()),
            JointAxis(h5, pt()), JointAxis(h6, pt()),
        )
    elif tag is ClassTag.THREE_PARALLEL_123_56:
        h = _rand_unit(rng)
        signs = rng.choice([-1.0, 1.0], size=2)
        h4 = _rand_unit_not_parallel(rng, h)
        h5 = _rand_unit_not_parallel(rng, h4)
        h6 = _rand_unit_not_parallel(rng, h5)
        k56 = pt()
        joints = (
            JointAxis(h, pt()), JointAxis(signs[0] * h, pt()),
            JointAxis(signs[1] * h, pt()), JointAxis(h4, pt()),
            JointAxis(h5, k56 + rng.uniform(-0.4, 0.4) * h5),
            JointAxis(h6, k56 + rng.uniform(-0.4, 0.4) * h6),
        )
    else:
        raise ValueError(f"no sampler for {tag}")
    ee = Pose(rodrigues(_rand_unit(rng), float(rng.uniform(-math.pi, math.pi))),
              rng.uniform(-0.2, 0.2, 3))
    return KinematicChain(joints, ee)


def _invert_geometry(chain: KinematicChain, rng) -> KinematicChain:
    """Mirror a chain's geometry so the class is matched via inversion."""
    inv = invert_chain(chain)
    ee = Pose(rodrigues(_rand_unit(rng), float(rng.uniform(-math.pi, math.pi))),
              rng.uniform(-0.2, 0.2, 3))
    return KinematicChain(inv.joints, ee)


def _perturbed_template(cls: KinematicClass, rng) -> KinematicChain:
    """Deterministic fallback: jiggle the named template along class-safe
    directions (reference points slide along their own axes)."""
    templates = {
        ClassTag.SPHERICAL_23_INTERSECT: puma_like,
        ClassTag.SPHERICAL_12_PARALLEL: irb6640_like,
        ClassTag.SPHERICAL_GENERAL: spherical_like,
        ClassTag.THREE_PARALLEL_234: ur5_like,
        ClassTag.THREE_PARALLEL_123_56: parallel3_like,
    }
    chain = templates[cls.tag]()
    joints = tuple(
        JointAxis(j.h, j.p + float(rng.uniform(-0.05, 0.05)) * j.h)
        for j in chain.joints
    )
    out = KinematicChain(joints, chain.ee_offset)
    if cls.inverted:
        out = _invert_geometry(out, rng)
    return out


# ---------------------------------------------------------------------------
# Round-trip studies
# ---------------------------------------------------------------------------


def roundtrip(chain: KinematicChain, n_poses: int, seed: int,
              name: str = "robot", tol: Tolerances = DEFAULT_TOL,
              lock_index: Optional[int] = None, warmup: int = 100,
              recovery_tol: float = 1e-6) -> RoundtripRow:
    """Derive once, then solve FK-generated poses and collect statistics.

    Each pose comes from a uniformly sampled ground-truth configuration;
    recovery means some returned solution matches it to ``recovery_tol``
    per joint (mod 2 pi). Error statistics cover exact solutions only.
    For a 7R chain, ``lock_index`` selects the joint frozen at the
    ground-truth angle, and derivation is repeated per pose.
    """
    rng = np.random.default_rng(seed)
    locked = chain.n == 7
    if locked and lock_index is None:
        lock_index = 3

    def derive(q):
        if locked:
            return classify(chain, lock=(lock_index, float(q[lock_index - 1])))
        return classify(chain)

    plan = derive(np.zeros(chain.n))
    t0 = time.perf_counter()
    for _ in range(max(1, warmup)):
        plan = derive(np.zeros(chain.n))
    derive_us = (time.perf_counter() - t0) / max(1, warmup) * 1e6

    qs = rng.uniform(-math.pi, math.pi, (n_poses, chain.n))
    targets = [IKTarget(fk(chain, q)) for q in qs]
    for q, t in zip(qs[:warmup], targets[:warmup]):
        solve(derive(q), t, tol)

    times = np.empty(n_poses)
    recovered = 0
    pos_errs: list[float] = []
    rot_errs: list[float] = []
    for i, (q, t) in enumerate(zip(qs, targets)):
        p = derive(q) if locked else plan
        a = time.perf_counter()
        s = solve(p, t, tol)
        times[i] = time.perf_counter() - a
        if _contains(s, q, recovery_tol):
            recovered += 1
        for sol in s.solutions:
            if sol.exact:
                pos_errs.append(sol.pos_err)
                rot_errs.append(sol.rot_err)
    times *= 1e6
    return RoundtripRow(
        name=name,
        n_poses=n_poses,
        recovery_rate=1.0 if n_poses == 0 else recovered / n_poses,
        pos_err_mean=float(np.mean(pos_errs)) if pos_errs else 0.0,
        pos_err_max=float(np.max(pos_errs)) if pos_errs else 0.0,
        rot_err_mean=float(np.mean(rot_errs)) if rot_errs else 0.0,
        rot_err_max=float(np.max(rot_errs)) if rot_errs else 0.0,
        derive_us=derive_us,
        solve_us_p50=float(np.median(times)) if n_poses else 0.0,
        solve_us_p95=float(np.percentile(times, 95)) if n_poses else 0.0,
        solve_us_max=float(np.max(times)) if n_poses else 0.0,
    )


def _contains(sol_set, q, tol: float) -> bool:
    for sol in sol_set.solutions:
        if all(abs(normalize_angle(a - b)) <= tol for a, b in zip(sol.q, q)):
            return True
    return False


def batch_random(count: int, seed: int, tol: Tolerances = DEFAULT_TOL,
                 ) -> tuple[int, int, float]:
    """Generate ``count`` random solvable robots; derive and solve one
    FK-generated pose each. Returns (classified_solvable, roundtrip_ok,
    elapsed_seconds)."""
    master = np.random.default_rng(seed)
    solvable = 0
    ok = 0
    t0 = time.perf_counter()
    for i in range(count):
        sub = int(master.integers(2 ** 63))
        rng = np.random.default_rng(sub)
        cls = random_solvable_class(rng)
        sample = generate_random_solvable(sub, cls)
        plan = classify(sample.chain)
        if not plan.cls.solvable():
            continue
        solvable += 1
        q = rng.uniform(-math.pi, math.pi, sample.chain.n)
        s = solve(plan, IKTarget(fk(sample.chain, q)), tol)
        if _contains(s, q, 1e-6):
            ok += 1
    return solvable, ok, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# Numerical baseline (independent oracle)
# ---------------------------------------------------------------------------


def numeric_ik_baseline(chain: KinematicChain, target: Pose, q0,
                        max_iters: int = 30) -> tuple[np.ndarray, bool]:
    """Damped least-squares IK with a finite-difference Jacobian.

    Iterates on the 6D pose error (translation plus rotation log), with a
    fixed damping of 1e-3. The convergence flag reports whether the pose
    error dropped to 1e-6; iterations continue below that while they still
    improve, so a converged answer is typically at machine precision.
    """
    q = np.array(q0, dtype=float)
    damping = 1e-3
    err = _pose_error(chain, q, target)
    n = float(np.linalg.norm(err))
    for _ in range(max_iters):
        if n <= 1e-12:
            break
        jac = _fd_jacobian(chain, q, target, err)
        jjt = jac @ jac.T + damping * np.eye(6)
        try:
            dq = jac.T @ np.linalg.solve(jjt, err)
        except np.linalg.LinAlgError:
            break
        # Backtrack on overshoot; the damping itself stays fixed.
        improved = False
        for _ in range(8):
            q_new = q - dq
            err_new = _pose_error(chain, q_new, target)
            n_new = float(np.linalg.norm(err_new))
            if n_new < n:
                q, err, n = q_new, err_new, n_new
                improved = True
                break
            dq *= 0.5
        if not improved:
            break
    return np.array([normalize_angle(a) for a in q]), n <= 1e-6


def _pose_error(chain, q, target: Pose) -> np.ndarray:
    cur = fk(chain, q)
    dp = cur.translation - target.translation
    dr = _rot_log(cur.rotation @ target.rotation.T)
    return np.concatenate([dp, dr])


def _pose_error_batch(chain, qs: np.ndarray, target: Pose) -> np.ndarray:
    from .chain import fk_batch

    rots, pos = fk_batch(chain, qs)
    out = np.empty((qs.shape[0], 6))
    out[:, :3] = pos - target.translation
    rt = target.rotation.T
    for i in range(qs.shape[0]):
        out[i, 3:] = _rot_log(rots[i] @ rt)
    return out


def _rot_log(r: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix."""
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = 0.5 * float(np.linalg.norm(w))
    c = 0.5 * (float(np.trace(r)) - 1.0)
    angle = math.atan2(s, c)
    if s < 1e-12:
        if c > 0:
            return np.zeros(3)
        # Half-turn: extract the axis from the symmetric part.
        d = np.sqrt(np.maximum(0.0, 0.5 * (np.diag(r) + 1.0)))
        i = int(np.argmax(d))
        axis = np.zeros(3)
        axis[i] = d[i]
        for j in range(3):
            if j != i and d[i] > 0:
                axis[j] = 0.5 * r[i, j] / d[i] if abs(r[i, j]) > abs(r[j, i]) \
                    else 0.5 * r[j, i] / d[i]
        return math.pi * axis / max(1e-12, float(np.linalg.norm(axis)))
    return (0.5 * angle / s) * w


def _fd_jacobian(chain, q, target: Pose, err0: np.ndarray) -> np.ndarray:
    eps = 1e-7
    n = len(q)
    qs = np.broadcast_to(q, (n, n)).copy()
    qs[np.diag_indices(n)] += eps
    errs = _pose_error_batch(chain, qs, target)
    return (errs - err0).T / eps


def cross_check(chain: KinematicChain, n_cases: int, seed: int,
                tol: Tolerances = DEFAULT_TOL, max_iters: int = 150,
                ) -> tuple[int, int]:
    """Whenever the numerical baseline converges, the analytical set must
    contain a matching solution. Returns (converged, agreed).

    The baseline runs with a generous iteration budget here, and converged
    answers are sharpened by a few undamped Gauss-Newton steps before the
    comparison: with the fixed damping, an ill-conditioned pose can satisfy
    the pose-error threshold while the joint angles still sit farther from
    the true root than the comparison tolerance. Answers the polish cannot
    certify as roots (pose error above 1e-10, near-singular poses) carry no
    joint-space information at the comparison tolerance and are skipped.
    """
    rng = np.random.default_rng(seed)
    plan = classify(chain)
    checked = 0
    agreed = 0
    for _ in range(n_cases):
        q_true = rng.uniform(-math.pi, math.pi, chain.n)
        target = fk(chain, q_true)
        q0 = q_true + rng.uniform(-0.1, 0.1, chain.n)
        qn, conv = numeric_ik_baseline(chain, target, q0, max_iters=max_iters)
        if not conv:
            continue
        qn = _gn_polish(chain, qn, target)
        if float(np.linalg.norm(_pose_error(chain, qn, target))) > 1e-10:
            continue
        checked += 1
        s = solve(plan, IKTarget(target), tol)
        if _contains(s, qn, 1e-5):
            agreed += 1
    return checked, agreed


def _gn_polish(chain, q, target: Pose, iters: int = 10) -> np.ndarray:
    q = np.array(q, dtype=float)
    err = _pose_error(chain, q, target)
    n = float(np.linalg.norm(err))
    for _ in range(iters):
        if n <= 1e-12:
            break
        jac = _fd_jacobian(chain, q, target, err)
        try:
            dq = np.linalg.solve(jac, err)
        except np.linalg.LinAlgError:
            break
        improved = False
        for _ in range(6):
            q_new = q - dq
            err_new = _pose_error(chain, q_new, target)
            n_new = float(np.linalg.norm(err_new))
            if n_new < n:
                q, err, n = q_new, err_new, n_new
                improved = True
                break
            dq *= 0.5
        if not improved:
            break
    return np.array([normalize_angle(a) for a in q])
