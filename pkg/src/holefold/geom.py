"""Floating-point geometric primitives with one tolerance policy.

Lengths are compared through :class:`Tolerance`; polygon predicates use its
absolute band ``eps_abs``.  Polygons are ``(n, 2)`` arrays in counterclockwise
order without a repeated closing vertex.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels

TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    """Raised when an operation's geometric precondition does not hold."""


@dataclass(frozen=True)
class Tolerance:
    """Relative/absolute tolerance pair shared by every length comparison."""

    eps_rel: float = 1e-9
    eps_abs: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.eps_abs <= self.eps_rel <= 1e-3):
            raise ValueError(
                f"tolerance must satisfy 0 < eps_abs <= eps_rel <= 1e-3, got {self.eps_abs}, {self.eps_rel}"
            )

    @classmethod
    def for_scale(cls, diameter: float, eps_rel: float = 1e-9) -> "Tolerance":
        eps_abs = min(1e-12 * max(float(diameter), 1e-300), eps_rel)
        return cls(eps_rel=eps_rel, eps_abs=max(eps_abs, 1e-300))

    def band(self, length):
        """Half-width of the "equal length" band around ``length``."""
        return np.maximum(self.eps_abs, self.eps_rel * np.asarray(length))


class PairClass(enum.Enum):
    EXPANSIVE = "Expansive"
    CRITICAL = "Critical"
    CONTRACTIVE = "Contractive"


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def classify_pair(a, b, fa, fb, tol: Tolerance = Tolerance()) -> PairClass:
    a, b, fa, fb = _vec(a), _vec(b), _vec(fa), _vec(fb)
    dom = float(np.linalg.norm(a - b))
    if dom <= tol.eps_abs:
        raise GeometryError("classify_pair needs two distinct domain points")
    img = float(np.linalg.norm(fa - fb))
    band = float(tol.band(dom))
    if abs(img - dom) <= band:
        return PairClass.CRITICAL
    return PairClass.EXPANSIVE if img > dom else PairClass.CONTRACTIVE


def classify_matrix(points, images, tol: Tolerance = Tolerance()):
    """Vectorized pair classification.

    Returns ``(dom, img, code)`` where ``code`` is +1 expansive, 0 critical,
    -1 contractive for every ordered pair.
    """
    points, images = _vec(points), _vec(images)
    dom = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    img = np.sqrt(((images[:, None, :] - images[None, :, :]) ** 2).sum(-1))
    diff = img - dom
    band = tol.band(dom)
    code = np.where(diff > band, 1, np.where(diff < -band, -1, 0))
    return dom, img, code


def signed_area(poly) -> float:
    poly = _vec(poly)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def is_ccw(poly) -> bool:
    return signed_area(poly) > 0.0


def diameter(points) -> float:
    points = _vec(points)
    if len(points) < 2:
        return 0.0
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(-1)
    return float(np.sqrt(d2.max()))


def interior_angle(poly, i: int) -> float:
    """Interior angle at vertex ``i`` of a counterclockwise polygon, in (0, 2*pi)."""
    poly = _vec(poly)
    n = len(poly)
    v = poly[i]
    to_next = poly[(i + 1) % n] - v
    to_prev = poly[(i - 1) % n] - v
    if np.hypot(*to_next) == 0.0 or np.hypot(*to_prev) == 0.0:
        raise GeometryError(f"zero-length edge at vertex {i}")
    cross = to_next[0] * to_prev[1] - to_next[1] * to_prev[0]
    dot = float(np.dot(to_next, to_prev))
    ang = float(np.arctan2(cross, dot))
    if ang <= 0.0:
        ang += TWO_PI
    return ang


def image_angle(fu, fv, fw) -> float:
    """Unsigned angle at ``fv`` between the rays to ``fu`` and ``fw``."""
    a = _vec(fu) - _vec(fv)
    b = _vec(fw) - _vec(fv)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise GeometryError("image_angle needs points distinct from the apex")
    c = float(np.dot(a, b) / (na * nb))
    return float(np.arccos(min(1.0, max(-1.0, c))))


def point_in_polygon(poly, points, eps: float = 1e-12) -> np.ndarray:
    """Codes per point: 1 inside, 0 on the boundary (within ``eps``), -1 outside."""
    pts = np.ascontiguousarray(_vec(points).reshape(-1, 2))
    return _kernels.pip_many(pts, np.ascontiguousarray(_vec(poly)), float(eps))


def visible(poly, p, v, eps: float = 1e-12) -> bool:
    """True iff the closed segment from ``p`` to ``v`` lies in the polygon (boundary contact allowed)."""
    p, v = _vec(p), _vec(v)
    return bool(_kernels.segment_in_polygon(p[0], p[1], v[0], v[1],
                                            np.ascontiguousarray(_vec(poly)), float(eps), False))


def diagonal_clear(poly, p, q, eps: float = 1e-12) -> bool:
    """True iff the open segment ``(p, q)`` lies in the interior of the polygon.

    This is the proper-diagonal test used for splitting: the segment may touch
    the boundary only at its endpoints.
    """
    p, q = _vec(p), _vec(q)
    return bool(_kernels.segment_in_polygon(p[0], p[1], q[0], q[1],
                                            np.ascontiguousarray(_vec(poly)), float(eps), True))


@dataclass(frozen=True)
class RayExit:
    point: np.ndarray
    length: float
    carrier: tuple  # ("vertex", index) or ("edge", index)


def ray_exit(poly, v: int, direction, eps: float = 1e-12) -> RayExit:
    """First point where the ray from vertex ``v`` along ``direction`` leaves the polygon."""
    poly = np.ascontiguousarray(_vec(poly))
    d = _vec(direction)
    d = d / np.linalg.norm(d)
    o = poly[v]
    t, kind, idx = _kernels.ray_exit(o[0], o[1], d[0], d[1], poly, float(eps))
    if t <= 0.0:
        raise GeometryError("no bend direction: ray from vertex points outside the polygon")
    carrier = ("vertex", int(idx)) if kind == _kernels.CARRIER_VERTEX else ("edge", int(idx))
    return RayExit(point=o + t * d, length=float(t), carrier=carrier)


def _orient(a, b, c) -> float:
    return float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _on_segment(p, a, b, eps) -> bool:
    ab = b - a
    l2 = float(np.dot(ab, ab))
    t = 0.0 if l2 == 0.0 else min(1.0, max(0.0, float(np.dot(p - a, ab)) / l2))
    return float(np.linalg.norm(a + t * ab - p)) <= eps


def segments_cross(s1, s2, eps: float = 1e-12) -> bool:
    """Closed-segment intersection: a shared endpoint counts as crossing."""
    a, b = (_vec(x) for x in s1)
    c, d = (_vec(x) for x in s2)
    if segments_cross_properly(s1, s2, eps):
        return True
    return (_on_segment(c, a, b, eps) or _on_segment(d, a, b, eps)
            or _on_segment(a, c, d, eps) or _on_segment(b, c, d, eps))


def segments_cross_properly(s1, s2, eps: float = 1e-12) -> bool:
    """Interiors cross at a single point, endpoints strictly on opposite sides."""
    a, b = (_vec(x) for x in s1)
    c, d = (_vec(x) for x in s2)
    lab = np.linalg.norm(b - a)
    lcd = np.linalg.norm(d - c)
    o1, o2 = _orient(a, b, c) / lab, _orient(a, b, d) / lab
    o3, o4 = _orient(c, d, a) / lcd, _orient(c, d, b) / lcd
    return (((o1 > eps and o2 < -eps) or (o1 < -eps and o2 > eps))
            and ((o3 > eps and o4 < -eps) or (o3 < -eps and o4 > eps)))


def first_self_intersection(poly, eps: float = 1e-12):
    """Lowest offending edge pair ``(i, j)`` of a non-simple polygon, else ``None``."""
    i, j = _kernels.first_self_intersection(np.ascontiguousarray(_vec(poly)), float(eps))
    return None if i < 0 else (int(i), int(j))


def rotate2(v, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])
