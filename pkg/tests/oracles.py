"""Independent test oracles.

Everything here is written directly against the mathematical objective
definitions, not against the library's solution paths: forward kinematics
via matrix exponentials of twists, and subproblem minimizers via dense grid
scans with local refinement (golden section in 1D, Nelder-Mead otherwise).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# FK oracle: product of twist exponentials
# ---------------------------------------------------------------------------


def fk_poe(chain, q):
    """End-effector pose via expm of 4x4 twist matrices (rotation about each
    zero-pose axis line), times the zero-pose end-effector transform."""
    t = np.eye(4)
    for joint, theta in zip(chain.joints, q):
        w = np.asarray(joint.h, dtype=float)
        p = np.asarray(joint.p, dtype=float)
        v = -np.cross(w, p)
        xi = np.zeros((4, 4))
        xi[:3, :3] = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]],
                               [-w[1], w[0], 0]])
        xi[:3, 3] = v
        t = t @ expm(xi * theta)
    m = np.eye(4)
    zp = chain.zero_pose()
    m[:3, :3] = zp.rotation
    m[:3, 3] = zp.translation
    return t @ m


# ---------------------------------------------------------------------------
# Rotation helpers for grid evaluation (local, independent definitions)
# ---------------------------------------------------------------------------


def rot_apply(h, theta, v):
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    return v * c + np.cross(h, v) * s + h * (h @ v) * (1.0 - c)


def rot_apply_grid(h, thetas, v):
    """(N,3) array of R(h, thetas[i]) v."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    c = np.cos(thetas)
    s = np.sin(thetas)
    return (v[None, :] * c[:, None] + np.cross(h, v)[None, :] * s[:, None]
            + h[None, :] * ((h @ v) * (1.0 - c))[:, None])


def sp1_objective(x1, x2, h):
    return lambda t: float(np.linalg.norm(rot_apply(h, t, x1) - x2))


def sp2_objective(x1, x2, h1, h2):
    return lambda t: float(
        np.linalg.norm(rot_apply(h1, t[0], x1) - rot_apply(h2, t[1], x2)))


def sp3_objective(x1, x2, h, d):
    return lambda t: abs(float(np.linalg.norm(rot_apply(h, t, x1) - x2)) - d)


def sp4_objective(h, x, k, d):
    return lambda t: abs(float(h @ rot_apply(k, t, x)) - d)


def _rot_fast(h, theta, v):
    """Scalar Rodrigues application on plain floats (hot oracle loops)."""
    c = math.cos(theta)
    s = math.sin(theta)
    hv = h[0] * v[0] + h[1] * v[1] + h[2] * v[2]
    k = hv * (1.0 - c)
    return (
        v[0] * c + (h[1] * v[2] - h[2] * v[1]) * s + h[0] * k,
        v[1] * c + (h[2] * v[0] - h[0] * v[2]) * s + h[1] * k,
        v[2] * c + (h[0] * v[1] - h[1] * v[0]) * s + h[2] * k,
    )


def sp5_residual_vec(p0, p1, p2, p3, k1, k2, k3):
    p0t = tuple(p0)
    p1t = tuple(p1)
    p2t = tuple(p2)
    p3t = tuple(p3)
    k1t = tuple(k1)
    k2t = tuple(k2)
    k3t = tuple(k3)

    def f(t):
        r3 = _rot_fast(k3t, t[2], p3t)
        inner = (p2t[0] + r3[0], p2t[1] + r3[1], p2t[2] + r3[2])
        rhs = _rot_fast(k2t, t[1], inner)
        lhs = _rot_fast(k1t, t[0], p1t)
        return (p0t[0] + lhs[0] - rhs[0],
                p0t[1] + lhs[1] - rhs[1],
                p0t[2] + lhs[2] - rhs[2])

    return f


def sp5_residual(p0, p1, p2, p3, k1, k2, k3):
    fvec = sp5_residual_vec(p0, p1, p2, p3, k1, k2, k3)

    def f(t):
        dx, dy, dz = fvec(t)
        return math.sqrt(dx * dx + dy * dy + dz * dz)

    return f


def sp6_residual_vec(h, k1, k2, x1, x2, x3, x4, d1, d2):
    ht = tuple(h)
    k1t = tuple(k1)
    k2t = tuple(k2)
    xs = [tuple(x) for x in (x1, x2, x3, x4)]

    def dot(a, b):
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

    def f(t):
        r1 = dot(ht, _rot_fast(k1t, t[0], xs[0])) \
            + dot(ht, _rot_fast(k2t, t[1], xs[1])) - d1
        r2 = dot(ht, _rot_fast(k1t, t[0], xs[2])) \
            + dot(ht, _rot_fast(k2t, t[1], xs[3])) - d2
        return (r1, r2)

    return f


def sp6_residual(h, k1, k2, x1, x2, x3, x4, d1, d2):
    fvec = sp6_residual_vec(h, k1, k2, x1, x2, x3, x4, d1, d2)

    def f(t):
        r1, r2 = fvec(t)
        return math.hypot(r1, r2)

    return f


def _newton_polish(fvec, x0, dim, iters=25, fd=1e-7):
    """Finite-difference Newton with step backtracking on a square system."""
    x = np.array(x0, dtype=float)
    fx = np.array(fvec(x))
    best = float(np.linalg.norm(fx))
    for _ in range(iters):
        if best <= 1e-14:
            break
        jac = np.empty((dim, dim))
        for i in range(dim):
            xp = x.copy()
            xp[i] += fd
            jac[:, i] = (np.array(fvec(xp)) - fx) / fd
        try:
            step = np.linalg.solve(jac, fx)
        except np.linalg.LinAlgError:
            break
        improved = False
        for _ in range(6):
            xn = x - step
            fn = np.array(fvec(xn))
            n = float(np.linalg.norm(fn))
            if n < best:
                x, fx, best = xn, fn, n
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return x, best


def _refine_root(full, fvec, x0, dim):
    """Backtracking Newton from the seed; simplex descent as a fallback."""
    x, fv = _newton_polish(fvec, x0, dim)
    if fv > 1e-10:
        xn, _ = _nm(full, x0, scale=0.08, xatol=3e-5, maxiter=150)
        x2, fv2 = _newton_polish(fvec, xn, dim)
        if fv2 < fv:
            return x2, fv2
    return x, fv


# ---------------------------------------------------------------------------
# 1D grid + golden-section refinement
# ---------------------------------------------------------------------------


def golden_min(f, a, b, iters=48):
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return (a + b) / 2.0


def grid_values_1d(fvals_fn, n=6284):
    thetas = -math.pi + TWO_PI * np.arange(n) / n
    return thetas, fvals_fn(thetas)


def local_minima_1d(thetas, vals, f, refine=True):
    """All local minima on the circular grid, golden-refined."""
    n = len(thetas)
    left = np.roll(vals, 1)
    right = np.roll(vals, -1)
    idx = np.flatnonzero((vals <= left) & (vals <= right))
    step = TWO_PI / n
    out = []
    for i in idx:
        t = thetas[i]
        if refine:
            t = golden_min(f, t - step, t + step)
        out.append(_wrap(t))
    return _cluster_1d(out, f)


def _wrap(t):
    r = t % TWO_PI
    if r > math.pi:
        r -= TWO_PI
    return r


def _cluster_1d(cands, f, tol=1e-4):
    out = []
    for t in sorted(cands, key=f):
        if all(abs(_wrap(t - u)) > tol for u in out):
            out.append(t)
    return sorted(out)


def oracle_min_1d(objective_vec, objective, n=6284):
    """Global minimizer of a scalar angle objective: grid + golden section."""
    thetas, vals = grid_values_1d(objective_vec, n)
    i = int(np.argmin(vals))
    step = TWO_PI / n
    t = golden_min(objective, thetas[i] - step, thetas[i] + step)
    return _wrap(t), objective(t)


def oracle_roots_1d(objective_vec, objective, zero_tol, n=6284):
    """All near-zero local minima (roots) of the objective."""
    thetas, vals = grid_values_1d(objective_vec, n)
    minima = local_minima_1d(thetas, vals, objective)
    return [t for t in minima if objective(t) <= zero_tol]


# ---------------------------------------------------------------------------
# 2D / 3D grid + Nelder-Mead refinement
# ---------------------------------------------------------------------------


def _nm(f, x0, scale=0.3, xatol=1e-12, maxiter=2000):
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": 1e-14, "maxiter": maxiter,
                            "initial_simplex": _simplex(x0, scale)})
    return res.x, float(res.fun)


def _simplex(x0, scale):
    n = len(x0)
    pts = [np.asarray(x0, dtype=float)]
    for i in range(n):
        p = np.asarray(x0, dtype=float).copy()
        p[i] += scale
        pts.append(p)
    return np.array(pts)


def local_minima_2d(vals):
    """Indices (i, j) of cells not exceeded by any of their 8 wrap-around
    neighbors."""
    best = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            best &= vals <= np.roll(np.roll(vals, di, axis=0), dj, axis=1)
    return np.argwhere(best)


def oracle_minima_2d(objective, n=180, refine_top=12):
    """Refined local minima of a two-angle objective on the torus."""
    thetas = -math.pi + TWO_PI * np.arange(n) / n
    vals = np.empty((n, n))
    for i, t1 in enumerate(thetas):
        for j, t2 in enumerate(thetas):
            vals[i, j] = objective((t1, t2))
    return _refine_cells(objective, vals, thetas, refine_top)


def oracle_minima_2d_fast(grid_fn, objective, n=180, refine_top=12):
    """Same as oracle_minima_2d but with a vectorized grid evaluator
    grid_fn(thetas) -> (n, n) values."""
    thetas = -math.pi + TWO_PI * np.arange(n) / n
    vals = grid_fn(thetas)
    return _refine_cells(objective, vals, thetas, refine_top)


def _refine_cells(objective, vals, thetas, refine_top):
    cells = local_minima_2d(vals)
    order = np.argsort([vals[i, j] for i, j in cells])
    out = []
    for k in order[:refine_top]:
        i, j = cells[k]
        x, fv = _nm(objective, [thetas[i], thetas[j]], xatol=1e-9,
                    maxiter=300)
        out.append((tuple(_wrap(t) for t in x), fv))
    return _cluster_nd(out)


def _cluster_nd(cands, tol=1e-4):
    out = []
    for x, fv in sorted(cands, key=lambda c: c[1]):
        if all(max(abs(_wrap(a - b)) for a, b in zip(x, y)) > tol
               for y, _ in out):
            out.append((x, fv))
    return out


def _expand_roots(roots, full, fvec, dim, zero_tol, scale, steps=(0.22,),
                  rounds=2):
    """Grow a root set by refining from perturbed copies of each root.

    Twin roots of a polynomial system often share one coarse-grid basin
    (or differ mostly along a direction the reduced surface cannot see);
    restarting the local search off every known root lands in the
    neighboring basin when one exists. Restarts only ever add verified
    zeros, so expansion cannot create spurious roots.
    """
    out = list(roots)
    for _ in range(rounds):
        new = []
        for x, _ in out:
            d = len(x)
            for i in range(d):
                for step in steps:
                    for sgn in (1.0, -1.0):
                        x0 = list(x)
                        x0[i] += sgn * step
                        xi, fv = _refine_root(full, fvec, x0, dim)
                        if fv <= zero_tol * scale:
                            new.append((tuple(_wrap(t) for t in xi), fv))
        merged = _cluster_nd(out + new)
        if len(merged) == len(out):
            return merged
        out = merged
    return out


def oracle_sp5_roots(p0, p1, p2, p3, k1, k2, k3, n=120, zero_tol=1e-7,
                     escalate=False):
    """Roots of the three-circle equation via a (t1, t3) grid with the middle
    angle reduced analytically, refined on the full 3D residual."""
    thetas = -math.pi + TWO_PI * np.arange(n) / n
    w = p0[None, :] + rot_apply_grid(k1, thetas, p1)          # (n, 3)
    v = p2[None, :] + rot_apply_grid(k3, thetas, p3)          # (n, 3)
    # Best t2 for fixed (w, v): maximize w . R(k2, t2) v over t2.
    kw = w @ k2
    kv = v @ k2
    a = w @ v.T - np.outer(kw, kv)
    b = w @ np.cross(k2, v).T
    c0 = np.outer(kw, kv)
    dist2 = (np.einsum("ij,ij->i", w, w)[:, None]
             + np.einsum("ij,ij->i", v, v)[None, :]
             - 2.0 * (c0 + np.hypot(a, b)))
    res = np.sqrt(np.maximum(dist2, 0.0))
    full = sp5_residual(p0, p1, p2, p3, k1, k2, k3)
    fvec = sp5_residual_vec(p0, p1, p2, p3, k1, k2, k3)
    scale = max(1.0, float(np.linalg.norm(p0)), float(np.linalg.norm(p1)),
                float(np.linalg.norm(p2)), float(np.linalg.norm(p3)))
    # Twin roots can share one shallow valley of the reduced surface, so
    # refine from every sufficiently low cell (suppressed within a small
    # neighborhood), not only from strict local minima.
    cells = _low_cells(res, threshold=0.06 * scale if escalate else 0.03 * scale,
                       radius=2 if escalate else 3, cap=40 if escalate else 24)
    roots = []
    for i, j in cells:
        t2 = math.atan2(b[i, j], a[i, j])
        x, fv = _refine_root(full, fvec, [thetas[i], t2, thetas[j]], 3)
        if fv <= zero_tol * scale:
            roots.append((tuple(_wrap(t) for t in x), fv))
    steps = (0.3, 1.0, 2.2) if escalate else (0.22,)
    rounds = 3 if escalate else 2
    return _expand_roots(_cluster_nd(roots), full, fvec, 3, zero_tol, scale,
                         steps=steps, rounds=rounds)


def _low_cells(vals, threshold, radius=2, cap=40):
    """Cells below threshold, greedily suppressed within a torus radius."""
    n, m = vals.shape
    flat = np.argsort(vals, axis=None)
    taken = []
    for k in flat:
        i, j = divmod(int(k), m)
        if vals[i, j] > threshold or len(taken) >= cap:
            break
        clash = any(min(abs(i - a), n - abs(i - a)) <= radius
                    and min(abs(j - b), m - abs(j - b)) <= radius
                    for a, b in taken)
        if not clash:
            taken.append((i, j))
    return taken


def oracle_sp6_roots(h, k1, k2, x1, x2, x3, x4, d1, d2, n=180, zero_tol=5e-8,
                     escalate=False):
    """Roots of the paired projection equations via a 2D grid and refinement."""
    thetas = -math.pi + TWO_PI * np.arange(n) / n
    f11 = rot_apply_grid(k1, thetas, x1) @ h
    f12 = rot_apply_grid(k2, thetas, x2) @ h
    f21 = rot_apply_grid(k1, thetas, x3) @ h
    f22 = rot_apply_grid(k2, thetas, x4) @ h
    r1 = f11[:, None] + f12[None, :] - d1
    r2 = f21[:, None] + f22[None, :] - d2
    res = np.hypot(r1, r2)
    full = sp6_residual(h, k1, k2, x1, x2, x3, x4, d1, d2)
    fvec = sp6_residual_vec(h, k1, k2, x1, x2, x3, x4, d1, d2)
    scale = max(1.0, abs(d1), abs(d2))
    roots = []
    for i, j in local_minima_2d(res):
        if res[i, j] > 0.5 * scale:
            continue
        x, fv = _refine_root(full, fvec, [thetas[i], thetas[j]], 2)
        if fv <= zero_tol * scale:
            roots.append((tuple(_wrap(t) for t in x), fv))
    steps = (0.3, 1.0, 2.2) if escalate else (0.22,)
    rounds = 3 if escalate else 2
    return _expand_roots(_cluster_nd(roots), full, fvec, 2, zero_tol, scale,
                         steps=steps, rounds=rounds)


def angdist(a, b):
    return abs(_wrap(a - b))


def tuple_angdist(x, y):
    return max(angdist(a, b) for a, b in zip(x, y))
