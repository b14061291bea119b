"""Closed-form solvers for canonical geometric subproblems on rotations.

Each subproblem asks for rotation angles that align rotated vectors with
targets, distances, or projections:

  sp1: min_theta        || R(h, t1) x1 - x2 ||
  sp2: min_{t1,t2}      || R(h1, t1) x1 - R(h2, t2) x2 ||
  sp3: min_theta        | || R(h, t1) x1 - x2 || - d |
  sp4: min_theta        | h^T R(k, t1) x - d |
  sp5: find (t1,t2,t3)  p0 + R(k1,t1) p1 = R(k2,t2) (p2 + R(k3,t3) p3)
  sp6: find (t1,t2)     h^T R(k1,t1) x1 + h^T R(k2,t2) x2 = d1
                        h^T R(k1,t1) x3 + h^T R(k2,t2) x4 = d2

sp1 through sp4 are posed as minimizations so that a least-squares answer is
returned when no exact solution exists, which keeps downstream solvers
continuous across workspace boundaries and singularities. sp5 and sp6 reduce
to a quartic (intersection of two conics) and report only exact roots; an
empty result means no solution.

All returned angles lie in (-pi, pi]; solutions are sorted ascending by
first angle. Everything here is pure and stateless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import PARALLEL_EPS, normalize_angle, rotate

#: Residual below which an sp1..sp4 solution counts as exact.
EPS_EXACT = 1e-10
#: Relaxed exactness threshold for the quartic-based sp5/sp6 after polishing.
EPS_EXACT_POLY = 1e-8
#: Trigonometric coefficient magnitude treated as a flat (constant) objective.
_FLAT = 1e-14
#: Angular separation below which two candidate solutions are merged.
_MERGE = 1e-9


class DegenerateAxes(ValueError):
    """sp2 called with (anti)parallel rotation axes."""


class DegenerateInput(ValueError):
    """sp5/sp6 input admits no finite reduction (zero vectors, collinear axes)."""


@dataclass(frozen=True)
class SPSolution:
    angles: tuple[float, ...]
    exact: bool
    residual: float


@dataclass(frozen=True)
class SPResult:
    solutions: tuple[SPSolution, ...]

    def __bool__(self) -> bool:
        return bool(self.solutions)

    def angle_tuples(self) -> list[tuple[float, ...]]:
        return [s.angles for s in self.solutions]

    def best(self) -> SPSolution:
        return min(self.solutions, key=lambda s: s.residual)


def _result(raw: list[tuple[tuple[float, ...], float]], eps: float) -> SPResult:
    """Assemble an SPResult: dedupe, keep exact set or single best, sort."""
    merged: list[tuple[tuple[float, ...], float]] = []
    for angles, res in raw:
        angles = tuple(normalize_angle(float(a)) for a in angles)
        dup = False
        for mangles, _ in merged:
            if all(abs(normalize_angle(a - b)) <= _MERGE for a, b in zip(angles, mangles)):
                dup = True
                break
        if not dup:
            merged.append((angles, res))
    exact = [(a, r) for a, r in merged if r <= eps]
    if exact:
        kept = exact
    elif merged:
        kept = [min(merged, key=lambda ar: ar[1])]
    else:
        kept = []
    kept.sort(key=lambda ar: ar[0])
    return SPResult(tuple(SPSolution(a, r <= eps, r) for a, r in kept))


def _dot(a, b) -> float:
    return float(a[0] * b[0] + a[1] * b[1] + a[2] * b[2])


def _cross(a, b) -> np.ndarray:
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def _sp1_angle(x1, x2, h) -> float:
    """Angle about h rotating x1 as close as possible to x2 (0 if flat).

    The trig coefficients are formed from the components of x1 and x2
    normal to the axis. Projecting first keeps the computation
    well-conditioned when both vectors lie close to the axis (wrist folds),
    where the direct two-dot-product form cancels catastrophically.
    """
    hx1 = _dot(h, x1)
    hx2 = _dot(h, x2)
    p1x = x1[0] - hx1 * h[0]
    p1y = x1[1] - hx1 * h[1]
    p1z = x1[2] - hx1 * h[2]
    p2x = x2[0] - hx2 * h[0]
    p2y = x2[1] - hx2 * h[1]
    p2z = x2[2] - hx2 * h[2]
    n1 = p1x * p1x + p1y * p1y + p1z * p1z
    n2 = p2x * p2x + p2y * p2y + p2z * p2z
    # Flat when either normal component sits at the rounding noise floor
    # (then its direction carries no information about the angle).
    if n1 <= 1e-26 * _dot(x1, x1) or n2 <= 1e-26 * _dot(x2, x2):
        return 0.0
    a = p2x * p1x + p2y * p1y + p2z * p1z
    b = (x2[0] * (h[1] * x1[2] - h[2] * x1[1])
         + x2[1] * (h[2] * x1[0] - h[0] * x1[2])
         + x2[2] * (h[0] * x1[1] - h[1] * x1[0]))
    return math.atan2(b, a)


def _sp3_angles(x1, x2, h, d: float) -> list[float]:
    """Angle candidates for sp3 without residual bookkeeping."""
    a = _dot(x2, x1) - _dot(h, x1) * _dot(h, x2)
    b = _dot(x2, _cross(h, x1))
    e = 0.5 * (_dot(x1, x1) + _dot(x2, x2) - d * d) - _dot(h, x1) * _dot(h, x2)
    return _cos_sin_roots(a, b, e)


def _sp4_angles(h, x, k, d: float) -> list[float]:
    """Angle candidates for sp4 without residual bookkeeping."""
    a, b, c = _sp4_coeffs(h, x, k)
    return _cos_sin_roots(a, b, d - c)


def _cos_sin_roots(a: float, b: float, e: float) -> list[float]:
    """Angles solving a cos(t) + b sin(t) = e, least squares when unattainable.

    Returns two angles (distinct roots), one (tangency or least squares), or
    one zero angle when the left side is flat. Within one ulp of tangency
    the acos loses half its precision, so the root collapses onto the
    tangent point; the discarded separation is below 2.2e-8 rad.
    """
    rho = math.hypot(a, b)
    if rho < _FLAT:
        return [0.0]
    phi = math.atan2(b, a)
    u = e / rho
    if u >= 1.0 - 2e-16:
        return [phi]
    if u <= -1.0 + 2e-16:
        return [normalize_angle(phi + math.pi)]
    delta = math.acos(u)
    return [normalize_angle(phi - delta), normalize_angle(phi + delta)]


def sp1(x1, x2, h) -> SPResult:
    """Rotate x1 about h onto x2: unique minimizer of ||R(h,t) x1 - x2||."""
    theta = _sp1_angle(x1, x2, h)
    res = float(np.linalg.norm(rotate(h, theta, x1) - np.asarray(x2, dtype=float)))
    return _result([((theta,), res)], EPS_EXACT)


def sp3(x1, x2, h, d: float) -> SPResult:
    """Rotate x1 about h to distance d from x2: | ||R x1 - x2|| - d | minimized."""
    x2a = np.asarray(x2, dtype=float)
    raw = []
    for theta in _sp3_angles(x1, x2, h, d):
        dist = float(np.linalg.norm(rotate(h, theta, x1) - x2a))
        raw.append(((theta,), abs(dist - d)))
    return _result(raw, EPS_EXACT)


def _sp4_coeffs(h, x, k) -> tuple[float, float, float]:
    """h^T R(k, t) x = a cos(t) + b sin(t) + c."""
    hk = _dot(h, k)
    kx = _dot(k, x)
    a = _dot(h, x) - kx * hk
    b = _dot(h, _cross(k, x))
    return a, b, kx * hk


def sp4(h, x, k, d: float) -> SPResult:
    """Project the rotated x onto h: | h^T R(k, t) x - d | minimized."""
    a, b, c = _sp4_coeffs(h, x, k)
    raw = []
    for theta in _cos_sin_roots(a, b, d - c):
        val = a * math.cos(theta) + b * math.sin(theta) + c
        raw.append(((theta,), abs(val - d)))
    return _result(raw, EPS_EXACT)


def _sp2_pairs(x1, x2, h1, h2) -> list[tuple[float, float]]:
    """Angle-pair candidates for sp2 without residual bookkeeping."""
    c = _dot(h1, h2)
    if 1.0 - abs(c) < PARALLEL_EPS:
        raise DegenerateAxes("sp2 axes are (anti)parallel")
    r1 = math.sqrt(_dot(x1, x1))
    r2 = math.sqrt(_dot(x2, x2))
    if r1 < 1e-12 or r2 < 1e-12:
        return [(0.0, 0.0)]
    u1 = np.asarray(x1, dtype=float) / r1
    u2 = np.asarray(x2, dtype=float) / r2
    d1 = _dot(h1, u1)
    d2 = _dot(h2, u2)
    denom = 1.0 - c * c
    alpha = (d1 - c * d2) / denom
    beta = (d2 - c * d1) / denom
    gamma2 = (1.0 - (alpha * alpha + beta * beta + 2.0 * alpha * beta * c)) / denom
    if gamma2 >= 0.0:
        gamma = math.sqrt(gamma2)
        axis = _cross(h1, h2)
        base = alpha * np.asarray(h1, dtype=float) + beta * np.asarray(h2, dtype=float)
        out = []
        for g in ((gamma, -gamma) if gamma > _MERGE else (gamma,)):
            x = base + g * axis
            out.append((_sp1_angle(u1, x, h1), _sp1_angle(u2, x, h2)))
        return out
    a1, b1, c1 = _sp4_coeffs(h2, u1, h1)
    a2, b2, c2 = _sp4_coeffs(h1, u2, h2)
    t1 = _cos_sin_roots(a1, b1, d2 - c1)[0]
    t2 = _cos_sin_roots(a2, b2, d1 - c2)[0]
    return [(t1, t2)]


def sp2(x1, x2, h1, h2) -> SPResult:
    """Two circles: min || R(h1,t1) x1 - R(h2,t2) x2 ||.

    Both rotated vectors trace circles on spheres of radius ||x1|| and
    ||x2||. After normalizing, exact solutions are the intersections of two
    circles on the unit sphere; when they miss each other, each
    least-squares angle swings its circle point into the plane spanned by
    the two axes, where the closest pair lives, giving a single answer.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    raw = []
    for t1, t2 in _sp2_pairs(x1, x2, h1, h2):
        res = float(np.linalg.norm(rotate(h1, t1, x1) - rotate(h2, t2, x2)))
        raw.append(((t1, t2), res))
    return _result(raw, EPS_EXACT)


# ---------------------------------------------------------------------------
# sp5 / sp6: two scalar trigonometric equations in two angles
# ---------------------------------------------------------------------------


def _poly_real_roots(coeffs: list[float]) -> list[float]:
    """Real roots of a polynomial, via companion-matrix eigenvalues."""
    c = np.array(coeffs, dtype=float)
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return []
    c = c / scale
    # Trim a (near-)vanishing leading coefficient; the dropped root escapes
    # to infinity and is represented by the explicit t = inf candidate.
    while len(c) > 1 and abs(c[0]) < 1e-12:
        c = c[1:]
    deg = len(c) - 1
    if deg < 1:
        return []
    if deg == 1:
        return [float(-c[1] / c[0])]
    comp = np.zeros((deg, deg))
    comp[1:, :-1] = np.eye(deg - 1)
    comp[0, :] = -c[1:] / c[0]
    roots = np.linalg.eigvals(comp)
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-7 * (1.0 + abs(r.real)):
            out.append(float(r.real))
    return out


def _angles_from_row(row: np.ndarray, e: float) -> list[float]:
    return _cos_sin_roots(float(row[0]), float(row[1]), e)


def _two_angle_system(a_mat: np.ndarray, b_mat: np.ndarray, e: np.ndarray,
                      ) -> list[tuple[float, float]]:
    """Candidate pairs (ta, tb) for A [cos ta; sin ta] - B [cos tb; sin tb] = e.

    Both 2x2 blocks multiply unit-circle vectors. Eliminating one side through
    the better conditioned block turns the unit-norm constraint of the other
    into the intersection of a conic with the unit circle: a quartic in the
    tangent half-angle. Degenerate blocks fall back to scalar trig solves.
    Candidates are unpolished; the caller verifies residuals.
    """
    det_a = float(a_mat[0, 0] * a_mat[1, 1] - a_mat[0, 1] * a_mat[1, 0])
    det_b = float(b_mat[0, 0] * b_mat[1, 1] - b_mat[0, 1] * b_mat[1, 0])
    # Degeneracy is relative: a uniformly small but well-conditioned block
    # is still invertible, whatever the problem's length scale.
    scale = max(float(np.max(np.abs(a_mat))), float(np.max(np.abs(b_mat))))
    if scale == 0.0:
        raise DegenerateInput("two-angle system vanishes identically")
    tol = 1e-10 * scale * scale

    if abs(det_a) < tol and abs(det_b) < tol:
        return _two_angle_degenerate(a_mat, b_mat, e, scale)

    if abs(det_a) >= abs(det_b):
        # Parametrize tb, recover (cos ta, sin ta) = A^-1 (e + B ub).
        m = _solve2(a_mat, det_a, b_mat)
        v = _solve2(a_mat, det_a, e)
        pairs = []
        for tb in _unit_circle_roots(v, m):
            cb, sb = math.cos(tb), math.sin(tb)
            ua0 = v[0] + m[0, 0] * cb + m[0, 1] * sb
            ua1 = v[1] + m[1, 0] * cb + m[1, 1] * sb
            pairs.append((math.atan2(ua1, ua0), tb))
        return pairs
    # Parametrize ta, recover (cos tb, sin tb) = B^-1 (A ua - e).
    m = _solve2(b_mat, det_b, a_mat)
    v = _solve2(b_mat, det_b, -e)
    pairs = []
    for ta in _unit_circle_roots(v, m):
        ca, sa = math.cos(ta), math.sin(ta)
        ub0 = v[0] + m[0, 0] * ca + m[0, 1] * sa
        ub1 = v[1] + m[1, 0] * ca + m[1, 1] * sa
        pairs.append((ta, math.atan2(ub1, ub0)))
    return pairs


def _solve2(mat: np.ndarray, det: float, rhs: np.ndarray) -> np.ndarray:
    """2x2 solve by the explicit inverse (rhs may be a vector or 2x2 block)."""
    inv = np.array([[mat[1, 1], -mat[0, 1]], [-mat[1, 0], mat[0, 0]]]) / det
    return inv @ rhs


def _unit_circle_roots(v: np.ndarray, m: np.ndarray) -> list[float]:
    """Angles t with || v + M [cos t; sin t] || = 1, via tangent half-angle.

    Substituting cos t = (1 - s^2)/(1 + s^2), sin t = 2 s/(1 + s^2) and
    clearing denominators yields a quartic in s; s -> infinity covers t = pi.
    """
    m0 = m[:, 0]
    m1 = m[:, 1]
    q0 = v + m0
    q1 = 2.0 * m1
    q2 = v - m0
    c4 = _dot2(q2, q2) - 1.0
    c3 = 2.0 * _dot2(q1, q2)
    c2 = _dot2(q1, q1) + 2.0 * _dot2(q0, q2) - 2.0
    c1 = 2.0 * _dot2(q0, q1)
    c0 = _dot2(q0, q0) - 1.0
    angles = [2.0 * math.atan(s) for s in _poly_real_roots([c4, c3, c2, c1, c0])]
    top = max(abs(c4), abs(c3), abs(c2), abs(c1), abs(c0), 1.0)
    if abs(c4) <= 1e-9 * top:
        angles.append(math.pi)
    return angles


def _dot2(a, b) -> float:
    return float(a[0] * b[0] + a[1] * b[1])


def _two_angle_degenerate(a_mat, b_mat, e, scale) -> list[tuple[float, float]]:
    """Rank-deficient fall-backs for the two-angle system."""
    tiny = 1e-10 * scale
    a_rows = [float(np.linalg.norm(a_mat[i])) for i in range(2)]
    b_rows = [float(np.linalg.norm(b_mat[i])) for i in range(2)]

    if max(a_rows) < tiny and max(b_rows) < tiny:
        raise DegenerateInput("two-angle system vanishes identically")

    if max(b_rows) < tiny:
        # Both equations constrain ta only; intersect their root sets.
        return _intersect_single_angle(a_mat, e, flat_second=True)
    if max(a_rows) < tiny:
        pairs = _intersect_single_angle(b_mat, -e, flat_second=True)
        return [(tb, ta) for ta, tb in pairs]

    # One row may tie a single angle; cascade through the other row.
    for i in (0, 1):
        j = 1 - i
        if a_rows[i] < tiny and b_rows[i] >= tiny:
            pairs = []
            for tb in _angles_from_row(b_mat[i], -float(e[i])):
                ub = np.array([math.cos(tb), math.sin(tb)])
                rhs = float(e[j]) + float(b_mat[j] @ ub)
                if a_rows[j] < tiny:
                    pairs.append((0.0, tb))
                else:
                    pairs.extend((ta, tb) for ta in _angles_from_row(a_mat[j], rhs))
            return pairs
        if b_rows[i] < tiny and a_rows[i] >= tiny:
            pairs = []
            for ta in _angles_from_row(a_mat[i], float(e[i])):
                ua = np.array([math.cos(ta), math.sin(ta)])
                rhs = float(a_mat[j] @ ua) - float(e[j])
                if b_rows[j] < tiny:
                    pairs.append((ta, 0.0))
                else:
                    pairs.extend((ta, tb) for tb in _angles_from_row(b_mat[j], rhs))
            return pairs

    raise DegenerateInput("two-angle system is rank deficient")


def _intersect_single_angle(mat, e, flat_second: bool) -> list[tuple[float, float]]:
    """Solve both rows of mat [cos t; sin t] = e for the same angle t."""
    rows = [float(np.linalg.norm(mat[i])) for i in range(2)]
    cands: list[float] | None = None
    for i in range(2):
        if rows[i] < _FLAT:
            continue
        sols = _angles_from_row(mat[i], float(e[i]))
        if cands is None:
            cands = sols
        else:
            cands = [t for t in cands
                     if any(abs(normalize_angle(t - s)) < 1e-6 for s in sols)]
    if cands is None:
        raise DegenerateInput("single-angle system vanishes identically")
    return [(t, 0.0) for t in cands]


def _trig_row_dot(h, k, x) -> tuple[float, float, float]:
    return _sp4_coeffs(h, x, k)


def sp5(p0, p1, p2, p3, k1, k2, k3) -> SPResult:
    """Three circles: p0 + R(k1,t1) p1 = R(k2,t2) (p2 + R(k3,t3) p3).

    Taking the squared norm and the k2-axis projection of both sides removes
    t2, leaving two trigonometric equations in (t1, t3) that reduce to a
    quartic. t2 follows by aligning the remaining vectors about k2. Each
    candidate is polished with two Newton steps on the 3-vector residual.
    Up to four exact triples; empty result when no real root survives.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    p3 = np.asarray(p3, dtype=float)
    if float(np.linalg.norm(p1)) < 1e-12 or float(np.linalg.norm(p3)) < 1e-12:
        raise DegenerateInput("sp5 needs nonzero p1 and p3")

    # Row 1: squared norms. ||p0 + R1 p1||^2 = ||p2 + R3 p3||^2.
    a1 = 2.0 * (_dot(p0, p1) - _dot(k1, p1) * _dot(k1, p0))
    b1 = 2.0 * _dot(p0, _cross(k1, p1))
    g1 = _dot(p0, p0) + _dot(p1, p1) + 2.0 * _dot(k1, p0) * _dot(k1, p1)
    a3 = 2.0 * (_dot(p2, p3) - _dot(k3, p3) * _dot(k3, p2))
    b3 = 2.0 * _dot(p2, _cross(k3, p3))
    g3 = _dot(p2, p2) + _dot(p3, p3) + 2.0 * _dot(k3, p2) * _dot(k3, p3)

    # Row 2: projection on k2, which the unknown middle rotation preserves.
    a1p, b1p, c1p = _trig_row_dot(k2, k1, p1)
    a3p, b3p, c3p = _trig_row_dot(k2, k3, p3)
    g1p = _dot(k2, p0) + c1p
    g3p = _dot(k2, p2) + c3p

    a_mat = np.array([[a1, b1], [a1p, b1p]])
    b_mat = np.array([[a3, b3], [a3p, b3p]])
    e = np.array([g3 - g1, g3p - g1p])

    raw = []
    for t1, t3 in _two_angle_system(a_mat, b_mat, e):
        w = p0 + rotate(k1, t1, p1)
        v = p2 + rotate(k3, t3, p3)
        t2 = _sp1_angle(v, w, k2)
        t1, t2, t3, res = _sp5_polish(p0, p1, p2, p3, k1, k2, k3, t1, t2, t3)
        raw.append(((t1, t2, t3), res))
    return _result([r for r in raw if r[1] <= EPS_EXACT_POLY], EPS_EXACT_POLY)


def _sp5_residual(p0, p1, p2, p3, k1, k2, k3, t1, t2, t3) -> np.ndarray:
    return p0 + rotate(k1, t1, p1) - rotate(k2, t2, p2 + rotate(k3, t3, p3))


def _sp5_polish(p0, p1, p2, p3, k1, k2, k3, t1, t2, t3):
    f = _sp5_residual(p0, p1, p2, p3, k1, k2, k3, t1, t2, t3)
    res = float(np.linalg.norm(f))
    for _ in range(2):
        if res <= 1e-13:
            break
        r1p1 = rotate(k1, t1, p1)
        inner = p2 + rotate(k3, t3, p3)
        j1 = _cross(k1, r1p1)
        j2 = -_cross(k2, rotate(k2, t2, inner))
        j3 = -rotate(k2, t2, _cross(k3, rotate(k3, t3, p3)))
        jac = np.column_stack([j1, j2, j3])
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            break
        n1, n2, n3 = t1 - step[0], t2 - step[1], t3 - step[2]
        nf = _sp5_residual(p0, p1, p2, p3, k1, k2, k3, n1, n2, n3)
        nres = float(np.linalg.norm(nf))
        if nres >= res:
            break
        t1, t2, t3, f, res = n1, n2, n3, nf, nres
    return t1, t2, t3, res


def sp6(h, k1, k2, x1, x2, x3, x4, d1: float, d2: float) -> SPResult:
    """Four circles: two coupled projection equations in (t1, t2).

        h^T R(k1,t1) x1 + h^T R(k2,t2) x2 = d1
        h^T R(k1,t1) x3 + h^T R(k2,t2) x4 = d2

    Linear in the cosines and sines of both angles; the unit-circle
    constraints reduce the system to a quartic. Up to four exact pairs;
    empty result when none exist.
    """
    a11, b11, c11 = _trig_row_dot(h, k1, x1)
    a12, b12, c12 = _trig_row_dot(h, k2, x2)
    a21, b21, c21 = _trig_row_dot(h, k1, x3)
    a22, b22, c22 = _trig_row_dot(h, k2, x4)
    a_mat = np.array([[a11, b11], [a21, b21]])
    b_mat = np.array([[-a12, -b12], [-a22, -b22]])
    e = np.array([d1 - c11 - c12, d2 - c21 - c22])

    raw = []
    for t1, t2 in _two_angle_system(a_mat, b_mat, e):
        t1, t2, res = _sp6_polish(h, k1, k2, x1, x2, x3, x4, d1, d2, t1, t2)
        raw.append(((t1, t2), res))
    return _result([r for r in raw if r[1] <= EPS_EXACT_POLY], EPS_EXACT_POLY)


def _sp6_residual(h, k1, k2, x1, x2, x3, x4, d1, d2, t1, t2) -> tuple[float, float]:
    r1 = _dot(h, rotate(k1, t1, x1)) + _dot(h, rotate(k2, t2, x2)) - d1
    r2 = _dot(h, rotate(k1, t1, x3)) + _dot(h, rotate(k2, t2, x4)) - d2
    return r1, r2


def _sp6_polish(h, k1, k2, x1, x2, x3, x4, d1, d2, t1, t2):
    f1, f2 = _sp6_residual(h, k1, k2, x1, x2, x3, x4, d1, d2, t1, t2)
    res = math.hypot(f1, f2)
    for _ in range(2):
        if res <= 1e-13:
            break
        j11 = _dot(h, _cross(k1, rotate(k1, t1, x1)))
        j12 = _dot(h, _cross(k2, rotate(k2, t2, x2)))
        j21 = _dot(h, _cross(k1, rotate(k1, t1, x3)))
        j22 = _dot(h, _cross(k2, rotate(k2, t2, x4)))
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14:
            break
        n1 = t1 - (j22 * f1 - j12 * f2) / det
        n2 = t2 - (-j21 * f1 + j11 * f2) / det
        g1, g2 = _sp6_residual(h, k1, k2, x1, x2, x3, x4, d1, d2, n1, n2)
        nres = math.hypot(g1, g2)
        if nres >= res:
            break
        t1, t2, f1, f2, res = n1, n2, g1, g2, nres
    return t1, t2, res
