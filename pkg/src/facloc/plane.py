"""Deterministic mechanisms for three agents in the Euclidean plane.

Covers the multi-median (coordinatewise median) mechanism, the Fermat
(Fermat-Torricelli) point, a grid search for the multi-median's worst
ratio, and a demonstration that the optimal rule is manipulable.

Everything here is floating point: Euclidean distances are irrational.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

COS120 = -0.5
ANGLE_TOL = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, msg, last):
        super().__init__(msg)
        self.last = last


# ---------------------------------------------------------------- basic rules


def multi_median(points) -> np.ndarray:
    """Coordinatewise median; lower median when ``n`` is even."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) == 0:
        raise ValueError("empty profile")
    return np.sort(P, axis=0)[(len(P) - 1) // 2]


def social_cost(points, z) -> float:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    return float(np.linalg.norm(P - np.asarray(z, dtype=float), axis=1).sum())


def _vertex_is_median(P: np.ndarray, k: int) -> bool:
    """Optimality test for input point ``k``: the pull of the others is at most 1."""
    diff = P - P[k]
    dist = np.linalg.norm(diff, axis=1)
    mask = dist > 0
    ties = int(np.count_nonzero(~mask)) - 1  # other agents on the same point
    pull = (diff[mask] / dist[mask, None]).sum(axis=0)
    return float(np.linalg.norm(pull)) <= 1 + ties + 1e-12


def weiszfeld(points, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Geometric median in ``R^D`` by Weiszfeld iteration from the centroid.

    Input points that satisfy the vertex optimality condition are returned
    directly, which also covers the singular case where an iterate would land
    on an input point.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    for k in range(len(P)):
        if _vertex_is_median(P, k):
            return P[k].copy()
    y = P.mean(axis=0)
    scale = max(1.0, float(np.abs(P).max()))
    for _ in range(max_iter):
        d = np.linalg.norm(P - y, axis=1)
        if d.min() < 1e-13 * scale:
            k = int(d.argmin())
            if _vertex_is_median(P, k):
                return P[k].copy()
            d = np.maximum(d, 1e-13 * scale)
        w = 1.0 / d
        y_new = (P * w[:, None]).sum(axis=0) / w.sum()
        if np.linalg.norm(y_new - y) <= tol * scale:
            return y_new
        y = y_new
    raise ConvergenceError(f"Weiszfeld did not converge in {max_iter} iterations", y)


def weiszfeld_batch(P: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Geometric medians of a stack of profiles ``P[t, i, :]`` (same ``n``)."""
    P = np.asarray(P, dtype=float)
    T, n, _ = P.shape
    out = np.empty((T, P.shape[2]))
    done = np.zeros(T, dtype=bool)
    # vertex optimality: pull of the other points has norm <= 1
    for k in range(n):
        diff = P - P[:, k:k + 1, :]
        dist = np.linalg.norm(diff, axis=2)
        safe = np.where(dist > 0, dist, 1.0)
        unit = np.where((dist > 0)[..., None], diff / safe[..., None], 0.0)
        ties = (dist == 0).sum(axis=1) - 1
        ok = (np.linalg.norm(unit.sum(axis=1), axis=1) <= 1 + ties + 1e-12) & ~done
        out[ok] = P[ok, k]
        done |= ok
    y = P.mean(axis=1)
    scale = np.maximum(1.0, np.abs(P).max(axis=(1, 2)))
    active = ~done
    for _ in range(max_iter):
        if not active.any():
            return out
        Pa, ya = P[active], y[active]
        d = np.maximum(np.linalg.norm(Pa - ya[:, None, :], axis=2), 1e-13 * scale[active, None])
        w = 1.0 / d
        yn = (Pa * w[..., None]).sum(axis=1) / w.sum(axis=1, keepdims=True)
        conv = np.linalg.norm(yn - ya, axis=1) <= tol * scale[active]
        y[active] = yn
        idx = np.flatnonzero(active)
        out[idx[conv]] = yn[conv]
        active[idx[conv]] = False
    raise ConvergenceError(f"Weiszfeld did not converge in {max_iter} iterations", y)


# ---------------------------------------------------------------- Fermat point


def _sides_and_cosines(A, B, C):
    A, B, C = (np.asarray(p, dtype=float) for p in (A, B, C))
    a = np.linalg.norm(B - C, axis=-1)  # opposite A
    b = np.linalg.norm(A - C, axis=-1)
    c = np.linalg.norm(A - B, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosA = np.sum((B - A) * (C - A), axis=-1) / (b * c)
        cosB = np.sum((A - B) * (C - B), axis=-1) / (a * c)
        cosC = np.sum((A - C) * (B - C), axis=-1) / (a * b)
    return a, b, c, cosA, cosB, cosC


def fermat_sc_formula(a, b, c):
    """Minimal sum of distances when every angle is below 120 degrees."""
    prod = 3 * (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c)
    return np.sqrt(0.5 * (a * a + b * b + c * c + np.sqrt(np.maximum(prod, 0.0))))


def fermat_sc(A, B, C):
    """Social cost of the Fermat point of triangle ``ABC`` (vectorised).

    With an angle of at least 120 degrees the optimum is that vertex and the
    cost is the sum of its two edges; otherwise the algebraic formula applies.
    Near the 120-degree boundary both are evaluated and the smaller kept.
    """
    a, b, c, cA, cB, cC = _sides_and_cosines(A, B, C)
    formula = fermat_sc_formula(a, b, c)
    # a coincident pair gives nan cosines; the shared point is then optimal
    vert = np.stack([b + c, a + c, a + b])
    cos = np.stack([cA, cB, cC])
    cos = np.where(np.isnan(cos), -1.0, cos)
    obtuse = cos <= COS120 + ANGLE_TOL
    near = np.abs(cos - COS120) <= 1e-9
    k = np.argmin(cos, axis=0)
    vsc = np.take_along_axis(vert, k[None], axis=0)[0]
    is_obt = obtuse.any(axis=0)
    is_near = near.any(axis=0)
    out = np.where(is_obt, vsc, formula)
    out = np.where(is_near, np.minimum(vsc, formula), out)
    return float(out) if np.ndim(out) == 0 else out


def fermat_point(points, tol: float = 1e-12) -> np.ndarray:
    """Point minimising the sum of distances.

    For three planar points with an angle of at least 120 degrees this is
    that vertex; otherwise Weiszfeld iteration is used.
    """
    P = np.asarray(points, dtype=float)
    if len(P) == 3 and P.shape[1] == 2:
        _, _, _, *cos = _sides_and_cosines(P[0], P[1], P[2])
        cos = [(-1.0 if math.isnan(c) else c) for c in cos]
        k = int(np.argmin(cos))
        if cos[k] <= COS120 + ANGLE_TOL:
            return P[k].copy()
    return weiszfeld(P, tol=tol)


def fermat_point_closed(A, B, C):
    """Vectorised Fermat point from barycentric weights ``a / sin(angle + 60)``."""
    A, B, C = (np.asarray(p, dtype=float) for p in (A, B, C))
    a, b, c, cA, cB, cC = _sides_and_cosines(A, B, C)
    angs = [np.arccos(np.clip(np.nan_to_num(x, nan=-1.0), -1, 1)) for x in (cA, cB, cC)]
    wa, wb, wc = (s / np.sin(t + math.pi / 3) for s, t in zip((a, b, c), angs))
    tot = wa + wb + wc
    with np.errstate(invalid="ignore", divide="ignore"):
        inner = (wa[..., None] * A + wb[..., None] * B + wc[..., None] * C) / tot[..., None]
    cos = np.stack([cA, cB, cC])
    cos = np.where(np.isnan(cos), -1.0, cos)
    k = np.argmin(cos, axis=0)
    verts = np.stack(np.broadcast_arrays(A, B, C))
    vert = np.take_along_axis(verts, k[None, ..., None], axis=0)[0]
    obt = np.take_along_axis(cos, k[None], axis=0)[0] <= COS120 + ANGLE_TOL
    return np.where(obt[..., None], vert, inner)


# ---------------------------------------------------------------- the parametrised triangle


@dataclass(frozen=True)
class TriangleInstance:
    """Normalised three-agent profile ``C=(0,0), B=(1,x), A=(1+y,-z)``.

    The multi-median of such a profile (with ``z >= 0``) is ``(1, 0)``.
    """

    x: float
    y: float
    z: float

    @property
    def A(self):
        return np.array([1 + self.y, -self.z])

    @property
    def B(self):
        return np.array([1.0, self.x])

    @property
    def C(self):
        return np.array([0.0, 0.0])

    @property
    def vertices(self):
        return np.stack([self.A, self.B, self.C])

    @property
    def a(self):
        return math.sqrt(1 + self.x**2)

    @property
    def b(self):
        return math.sqrt(self.y**2 + (self.z + self.x) ** 2)

    @property
    def c(self):
        return math.sqrt(self.z**2 + (1 + self.y) ** 2)

    @property
    def alpha(self):
        return math.atan2(1, self.x)

    @property
    def beta(self):
        return math.atan2(self.y, self.x + self.z)

    @property
    def gamma(self):
        return math.atan2(self.z, 1 + self.y)

    def non_obtuse(self) -> bool:
        """Both angle constraints: ``alpha + beta <= 120`` and ``90 - alpha + gamma <= 120``."""
        return bool(_non_obtuse(self.x, self.y, self.z))

    def mm_cost(self) -> float:
        return math.sqrt(self.y**2 + self.z**2) + self.x + 1

    def ratio(self) -> float:
        return self.mm_cost() / fermat_sc(self.A, self.B, self.C)

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z}


def _non_obtuse(x, y, z):
    alpha = np.arctan2(1.0, x)
    beta = np.arctan2(y, x + z)
    gamma = np.arctan2(z, 1.0 + y)
    lim = np.deg2rad(120.0)
    return (alpha + beta <= lim + 1e-12) & (np.pi / 2 - alpha + gamma <= lim + 1e-12)


def _ratio_grid(xs, ys, zs, restrict):
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    A = np.stack([1 + Y, -Z], axis=-1)
    B = np.stack([np.ones_like(X), X], axis=-1)
    C = np.zeros_like(A)
    mm = np.sqrt(Y * Y + Z * Z) + X + 1
    with np.errstate(invalid="ignore", divide="ignore"):
        r = mm / fermat_sc(A, B, C)
    r = np.where(np.isfinite(r), r, -np.inf)
    if restrict:
        r = np.where(_non_obtuse(X, Y, Z), r, -np.inf)
    return r


def _ratio_point(v, restrict):
    x, y, z = v
    r = float(_ratio_grid(np.array([x]), np.array([y]), np.array([z]), restrict).ravel()[0])
    return r


def _polish(v, lo, hi, restrict):
    """Local continuous maximisation from a grid incumbent (SLSQP)."""
    from scipy.optimize import minimize

    lim = math.radians(120.0)
    cons = []
    if restrict:
        cons = [
            {"type": "ineq", "fun": lambda w: lim - (math.atan2(1, w[0]) + math.atan2(w[1], w[0] + w[2]))},
            {"type": "ineq", "fun": lambda w: lim - (math.pi / 2 - math.atan2(1, w[0]) + math.atan2(w[2], 1 + w[1]))},
        ]

    def neg(w):
        r = _ratio_point(np.clip(w, lo, hi), False)
        return -r if np.isfinite(r) else 0.0

    res = minimize(neg, np.asarray(v, float), method="SLSQP", bounds=[(lo, hi)] * 3, constraints=cons,
                   options={"ftol": 1e-15, "maxiter": 500})
    w = tuple(float(t) for t in np.clip(res.x, lo, hi))
    r = _ratio_point(w, restrict)
    return r, w


def mm_worst_ratio_search(
    grid_step: float = 0.01,
    refinement_levels: int = 3,
    box: tuple[float, float] = (0.0, 2.0),
    restrict_non_obtuse: bool = False,
    candidates: int = 6,
    polish: bool = True,
) -> tuple[float, TriangleInstance]:
    """Maximise ``SC(multi-median) / SC(Fermat point)`` over ``[0, 2]^3``.

    A full grid is evaluated first.  The best few well-separated grid points
    are each refined (every level re-grids the surrounding cell ten times
    finer) and then polished by a local continuous optimiser.  Ratios within
    ``1e-9`` count as ties, which go to the lexicographically smallest
    ``(x, y, z)``.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    lo, hi = box
    axis = np.arange(lo, hi + grid_step / 2, grid_step)
    pool = []
    for i0 in range(0, len(axis), 20):  # slabs in x keep memory small
        r = _ratio_grid(axis[i0:i0 + 20], axis, axis, restrict_non_obtuse)
        flat = r.ravel()
        top = np.argpartition(flat, -200)[-200:] if flat.size > 200 else np.arange(flat.size)
        for k in top:
            if np.isfinite(flat[k]):
                i, j, l = np.unravel_index(k, r.shape)
                pool.append((float(flat[k]), (axis[i0 + i], axis[j], axis[l])))
    pool.sort(key=lambda t: (-t[0], t[1]))
    seeds = []
    for r, v in pool:
        if all(max(abs(a - b) for a, b in zip(v, w)) > 5 * grid_step for _, w in seeds):
            seeds.append((r, v))
        if len(seeds) >= candidates:
            break
    results = []
    for best_r, best in seeds:
        step = grid_step
        for _ in range(refinement_levels):
            fine = step / 10
            axes = [np.unique(np.clip(np.arange(c - step, c + step + fine / 2, fine), lo, hi)) for c in best]
            r = _ratio_grid(*axes, restrict_non_obtuse)
            k = int(np.argmax(r))
            if r.flat[k] > best_r:
                i, j, l = np.unravel_index(k, r.shape)
                best_r, best = float(r.flat[k]), (axes[0][i], axes[1][j], axes[2][l])
            step = fine
        if polish:
            pr, pv = _polish(best, lo, hi, restrict_non_obtuse)
            if pr > best_r:
                best_r, best = pr, pv
        results.append((best_r, tuple(float(t) for t in best)))
    top = max(r for r, _ in results)
    ties = sorted(v for r, v in results if r >= top - 1e-9)
    win = ties[0]
    return max(r for r, v in results if v == win), TriangleInstance(*win)


def mm_ratio_bound_check(D: int, trials: int = 10_000, seed: int = 0, sizes=(3, 5, 7)) -> float:
    """Largest observed ``SC(MM) / SC(geometric median)`` on random profiles in ``R^D``."""
    if not 1 <= D <= 4:
        raise ValueError("D must be in 1..4")
    rng = np.random.default_rng(seed)
    ns = rng.choice(sizes, size=trials)
    worst = 0.0
    for n in sizes:
        count = int((ns == n).sum())
        if not count:
            continue
        P = rng.normal(size=(count, n, D))
        med = weiszfeld_batch(P, tol=1e-10)
        mm = np.sort(P, axis=1)[:, (n - 1) // 2, :]
        opt = np.linalg.norm(P - med[:, None, :], axis=2).sum(axis=1)
        cost = np.linalg.norm(P - mm[:, None, :], axis=2).sum(axis=1)
        worst = max(worst, float(np.max(np.where(opt > 0, cost / opt, 1.0))))
    return worst


# ---------------------------------------------------------------- manipulation of the optimum


@dataclass(frozen=True)
class PlaneManipulation:
    profile: tuple
    agent: int
    deviation: tuple
    truthful_outcome: tuple
    deviating_outcome: tuple
    truthful_cost: float
    deviating_cost: float

    @property
    def gain(self) -> float:
        return self.truthful_cost - self.deviating_cost

    def to_json(self) -> dict:
        d = {k: (list(v) if isinstance(v, tuple) and k != "profile" else v) for k, v in self.__dict__.items()}
        d["profile"] = [list(p) for p in self.profile]
        d["gain"] = self.gain
        return d


def demo_optimal_not_sp(step: float = 0.005, span: float = 1.0) -> PlaneManipulation:
    """Manipulation of the Fermat-point rule by the agent at ``C``.

    The profile is the isosceles triangle ``A=(2,0)``, ``B=(1,1/sqrt 3)``,
    ``C=(0,0)`` whose apex ``B`` is exactly 120 degrees, so the truthful
    outcome is ``B``.  Reports of agent 3 on a grid around ``B`` are scanned
    and the one bringing the outcome closest to ``C`` is returned.
    """
    A = np.array([2.0, 0.0])
    B = np.array([1.0, 1.0 / math.sqrt(3.0)])
    C = np.array([0.0, 0.0])
    truthful = fermat_point([A, B, C])
    t_cost = float(np.linalg.norm(truthful - C))
    g = np.arange(-span, span + step / 2, step)
    GX, GY = np.meshgrid(B[0] + g, B[1] + g, indexing="ij")
    R = np.stack([GX, GY], axis=-1)
    F = fermat_point_closed(A, B, R)
    cost = np.linalg.norm(F - C, axis=-1)
    cost = np.where(np.isfinite(cost), cost, np.inf)
    k = int(np.argmin(cost))
    i, j = np.unravel_index(k, cost.shape)
    report = R[i, j]
    # recompute the outcome with the independent iterative solver
    outcome = fermat_point([A, B, report])
    d_cost = float(np.linalg.norm(outcome - C))
    if not d_cost < t_cost - 1e-6:
        raise RuntimeError("no manipulation found on the grid")
    return PlaneManipulation(
        profile=(tuple(A), tuple(B), tuple(C)),
        agent=2,
        deviation=tuple(float(v) for v in report),
        truthful_outcome=tuple(float(v) for v in truthful),
        deviating_outcome=tuple(float(v) for v in outcome),
        truthful_cost=t_cost,
        deviating_cost=d_cost,
    )


def sc_direct(inst: TriangleInstance, z: Sequence[float] = (1.0, 0.0)) -> float:
    return social_cost(inst.vertices, z)
