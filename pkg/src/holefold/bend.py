"""Single-crease bend lines at a vertex whose two neighbours contract.

A bend line leaves vertex ``v`` at angle ``beta`` from the edge ``v -> u``.
Its image leaves ``f(v)`` along a unit vector ``e`` making angle ``beta``
with ``f(u) - f(v)`` and ``theta - beta`` with ``f(w) - f(v)``, so both
corner triangles keep their shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .geom import GeometryError, PairClass, Tolerance
from .model import BoundaryMapping

POLICIES_PLANAR = ("min-angle", "max-angle", "random")
POLICIES_SPATIAL = ("bisector", "min-angle", "max-angle", "random")


class InfeasibleGeometry(GeometryError):
    """The requested bend/trilateration has no real solution."""


@dataclass(frozen=True)
class BendLine:
    v: int
    u: int
    w: int
    theta: float
    phi: float
    beta: float
    direction: np.ndarray
    length: float
    carrier: tuple
    policy: str

    def point(self, t: float, origin) -> np.ndarray:
        return np.asarray(origin, dtype=float) + t * self.direction


@dataclass(frozen=True)
class BendLineImage:
    origin: np.ndarray
    direction: np.ndarray

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


def default_policy(d: int) -> str:
    return "min-angle" if d == 2 else "bisector"


def bend_angle_interval(theta: float, phi: float) -> tuple:
    if not (0.0 <= phi < theta < geom.TWO_PI):
        raise GeometryError(f"bend needs 0 <= phi < theta < 2pi (got theta={theta}, phi={phi})")
    return 0.5 * (theta - phi), 0.5 * (theta + phi)


def choose_beta(theta: float, phi: float, d: int, policy: str, rng: np.random.Generator) -> float:
    lo, hi = bend_angle_interval(theta, phi)
    if d == 2:
        if policy == "bisector":
            policy = "min-angle"
        if policy not in POLICIES_PLANAR:
            raise ValueError(f"unknown planar bend policy {policy!r}")
        if policy == "random":
            return hi if rng.integers(2) else lo
    elif policy not in POLICIES_SPATIAL:
        raise ValueError(f"unknown bend policy {policy!r}")
    if policy == "min-angle":
        return lo
    if policy == "max-angle":
        return hi
    if policy == "bisector":
        return 0.5 * theta
    return float(rng.uniform(lo, hi))


def select_bend_line(bm: BoundaryMapping, v: int, policy: str | None = None, seed=None,
                     rng: np.random.Generator | None = None, tol: Tolerance | None = None) -> BendLine:
    """Pick a bend line at vertex ``v`` by ``policy`` and find where it exits the polygon."""
    tol = tol or bm.tolerance()
    n = bm.n
    u, w = (v - 1) % n, (v + 1) % n
    P, F = bm.vertices, bm.images
    if geom.classify_pair(P[u], P[w], F[u], F[w], tol) is not PairClass.CONTRACTIVE:
        raise GeometryError(f"neighbours of vertex {v} are not contractive")
    theta = geom.interior_angle(P, v)
    phi = geom.image_angle(F[u], F[v], F[w])
    if rng is None:
        rng = np.random.default_rng(seed)
    policy = policy or default_policy(bm.dimension)
    beta = choose_beta(theta, phi, bm.dimension, policy, rng)
    return make_bend_line(bm, v, beta, policy, tol, theta=theta, phi=phi)


def make_bend_line(bm: BoundaryMapping, v: int, beta: float, policy: str = "explicit",
                   tol: Tolerance | None = None, theta=None, phi=None) -> BendLine:
    tol = tol or bm.tolerance()
    n = bm.n
    u, w = (v - 1) % n, (v + 1) % n
    P, F = bm.vertices, bm.images
    if theta is None:
        theta = geom.interior_angle(P, v)
    if phi is None:
        phi = geom.image_angle(F[u], F[v], F[w])
    to_u = P[u] - P[v]
    # clockwise from v->u sweeps through the interior towards v->w
    direction = geom.rotate2(to_u / np.linalg.norm(to_u), -beta)
    hit = geom.ray_exit(P, v, direction, tol.eps_abs)
    return BendLine(v=v, u=u, w=w, theta=theta, phi=phi, beta=float(beta), direction=direction,
                    length=hit.length, carrier=hit.carrier, policy=policy)


def _complement_direction(basis) -> np.ndarray:
    """Deterministic unit vector orthogonal to the orthonormal ``basis`` vectors."""
    d = len(basis[0])
    best, best_norm = None, -1.0
    for k in range(d):
        r = np.zeros(d)
        r[k] = 1.0
        for b in basis:
            r -= np.dot(r, b) * b
        nr = np.linalg.norm(r)
        if nr > best_norm + 1e-12:
            best, best_norm = r, nr
    return best / best_norm


def trilaterate(c1, c2, c3, r1: float, r2: float, r3: float, branch: int = 1,
                tol: Tolerance = Tolerance()) -> np.ndarray:
    """Point at distances ``r1, r2, r3`` from three non-collinear centres.

    Solved in the frame at ``c2`` spanned by ``c1 - c2``, the in-plane part of
    ``c3 - c2`` and one orthogonal direction; ``branch`` picks the sign of the
    off-plane coordinate.  In two dimensions an off-plane component is
    infeasible.
    """
    c1, c2, c3 = (np.asarray(c, dtype=float) for c in (c1, c2, c3))
    d = len(c2)
    ex = c1 - c2
    D = np.linalg.norm(ex)
    if D == 0.0:
        raise GeometryError("trilaterate: coincident centres")
    ex = ex / D
    rel3 = c3 - c2
    i = float(np.dot(rel3, ex))
    ey = rel3 - i * ex
    j = float(np.linalg.norm(ey))
    scale = max(D, r1, r2, r3, float(np.linalg.norm(rel3)))
    if j <= 1e-12 * scale:
        raise GeometryError("trilaterate: centres are collinear")
    ey = ey / j
    x = (r2 * r2 - r1 * r1 + D * D) / (2.0 * D)
    y = (r2 * r2 - r3 * r3 + i * i + j * j - 2.0 * i * x) / (2.0 * j)
    z2 = r2 * r2 - x * x - y * y
    # collapsing |z| below this moves every distance by at most eps_rel * scale
    band = tol.eps_rel * scale * max(min(r1, r2, r3), tol.eps_abs)
    if z2 < -band:
        raise InfeasibleGeometry(f"trilaterate: spheres do not meet (z^2 = {z2:.3e})")
    base = c2 + x * ex + y * ey
    if z2 <= band:
        return base
    if d == 2:
        raise InfeasibleGeometry(f"trilaterate: solution leaves the plane (z^2 = {z2:.3e})")
    ez = _complement_direction([ex, ey])
    return base + (1.0 if branch >= 0 else -1.0) * np.sqrt(z2) * ez


def bend_line_image(bm: BoundaryMapping, L: BendLine, branch: int = 1,
                    tol: Tolerance | None = None) -> BendLineImage:
    tol = tol or bm.tolerance()
    P, F = bm.vertices, bm.images
    u, v, w = L.u, L.v, L.w
    fu, fv, fw = F[u], F[v], F[w]
    if geom.classify_pair(P[u], P[w], fu, fw, tol) is not PairClass.CONTRACTIVE:
        raise GeometryError(f"neighbours of vertex {v} are not contractive")
    # probe the bend line at the shorter adjacent edge length for conditioning
    t_ref = min(np.linalg.norm(P[u] - P[v]), np.linalg.norm(P[w] - P[v]))
    p1 = P[v] + t_ref * L.direction
    ru = float(np.linalg.norm(p1 - P[u]))
    rw = float(np.linalg.norm(p1 - P[w]))
    a = fu - fv
    b = fw - fv
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    sin_phi = np.linalg.norm(b / nb - np.dot(b / nb, a / na) * a / na)
    if sin_phi > 1e-9:
        q1 = trilaterate(fu, fv, fw, ru, t_ref, rw, branch, tol)
        e = (q1 - fv) / t_ref
    else:
        e = _collinear_image_direction(a / na, b / nb, L, bm.dimension, branch, tol)
    norm_e = np.linalg.norm(e)
    if abs(norm_e - 1.0) > 1e-6:
        raise InfeasibleGeometry(f"bend image direction has norm {norm_e}")
    return BendLineImage(origin=np.array(fv, dtype=float), direction=e / norm_e)


def _collinear_image_direction(a, b, L: BendLine, d: int, branch: int, tol: Tolerance) -> np.ndarray:
    # f(u), f(v), f(w) collinear: phi is 0 or pi and any direction orthogonal to a works
    cb = np.cos(L.beta)
    target = np.cos(L.theta - L.beta)
    if abs(np.dot(b, a) * cb - target) > 1e-7:
        raise InfeasibleGeometry("bend angle incompatible with a straight image corner")
    if d == 2:
        n = np.array([-a[1], a[0]]) * (1.0 if branch >= 0 else -1.0)
    else:
        n = _complement_direction([a]) * (1.0 if branch >= 0 else -1.0)
    return cb * a + np.sin(L.beta) * n
