"""Extend a bend line to its split point.

Along the bend line ``p(t) = v + t*dir`` and its image ``q(t) = f(v) + t*e``
(both unit speed) the squared-distance gap to a vertex ``x``

    |p(t) - x|^2 - |q(t) - f(x)|^2 = B + A*t

is affine in ``t`` because the ``t^2`` terms cancel.  The split point is the
largest ``t`` where every gap is still non-negative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .bend import BendLine, BendLineImage
from .geom import GeometryError, Tolerance
from .model import BoundaryMapping


class SplitError(GeometryError):
    """Split construction failed; carries the offending quantities."""

    def __init__(self, message: str, **trace):
        super().__init__(message)
        self.trace = trace


class NoVisibleSplitEnd(SplitError):
    pass


class SeamMismatch(SplitError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    x: int
    A: float
    B: float

    def __call__(self, t: float) -> float:
        return self.B + self.A * t


@dataclass(frozen=True)
class SplitTriple:
    p: np.ndarray
    q: np.ndarray
    x: int | None
    t_star: float
    tight_set: tuple
    synthetic: bool = False
    # synthetic case only: edge carrying p and p's parameter along it
    edge: int | None = None
    edge_param: float | None = None


def constraint_arrays(bm: BoundaryMapping, L: BendLine, Limg: BendLineImage):
    """Vectorized constraints: ``(indices, A, B)`` over every vertex except u, v, w."""
    P, F = bm.vertices, bm.images
    keep = np.ones(bm.n, dtype=bool)
    keep[[L.u, L.v, L.w]] = False
    idx = np.nonzero(keep)[0]
    dp = P[L.v] - P[idx]
    df = F[L.v] - F[idx]
    B = (dp * dp).sum(axis=1) - (df * df).sum(axis=1)
    A = 2.0 * (dp @ L.direction - df @ Limg.direction)
    return idx, A, B


def split_constraints(bm: BoundaryMapping, L: BendLine, Limg: BendLineImage) -> list:
    idx, A, B = constraint_arrays(bm, L, Limg)
    return [LinearConstraint(int(i), float(a), float(b)) for i, a, b in zip(idx, A, B)]


def compute_split(bm: BoundaryMapping, L: BendLine, Limg: BendLineImage,
                  tol: Tolerance | None = None, scale: float | None = None) -> SplitTriple:
    tol = tol or bm.tolerance()
    if scale is None:
        scale = bm.diameter()
    P, F = bm.vertices, bm.images
    idx, A, B = constraint_arrays(bm, L, Limg)
    slope_tol = tol.eps_rel * scale
    gap_tol = 2.0 * tol.eps_rel * scale * scale
    falling = A < -slope_tol
    t_star = L.length
    if falling.any():
        t_star = min(t_star, float((np.maximum(B[falling], 0.0) / -A[falling]).min()))
    t_star = max(t_star, 0.0)
    p = P[L.v] + t_star * L.direction
    q = Limg.at(t_star)
    tight = falling & (np.abs(B + A * t_star) <= gap_tol)
    tight_set = tuple(int(i) for i in idx[tight])

    if t_star >= L.length - tol.band(scale):
        return _boundary_split(bm, L, Limg, tol, scale, tight_set)

    eps = tol.eps_abs
    for x in tight_set:
        if geom.diagonal_clear(P, p, P[x], eps):
            return SplitTriple(p=p, q=q, x=x, t_star=t_star, tight_set=tight_set)
    raise NoVisibleSplitEnd(
        f"no tight vertex is visible from the split point (v={L.v}, t*={t_star:.6g})",
        v=L.v, t_star=t_star, tight_set=tight_set, length=L.length,
    )


def _boundary_split(bm, L, Limg, tol, scale, tight_set) -> SplitTriple:
    # bend line survives to the boundary: its exit becomes a new vertex
    kind, k = L.carrier
    P = bm.vertices
    t = L.length
    p = P[L.v] + t * L.direction
    q = Limg.at(t)
    if kind == "vertex":
        raise NoVisibleSplitEnd(
            f"bend line from {L.v} reaches vertex {k} critically",
            v=L.v, t_star=t, tight_set=tight_set, length=L.length,
        )
    a, b = P[k], P[(k + 1) % bm.n]
    s = float(np.dot(p - a, b - a) / np.dot(b - a, b - a))
    s = min(max(s, 0.0), 1.0)
    f_exit = bm.edge_image(k, s)
    gap = float(np.linalg.norm(q - f_exit))
    if gap > 100.0 * float(tol.band(scale)):
        raise SeamMismatch(
            f"bend image misses the boundary image at the exit by {gap:.3e}",
            v=L.v, edge=k, gap=gap,
        )
    return SplitTriple(p=a + s * (b - a), q=f_exit, x=None, t_star=t, tight_set=tight_set,
                       synthetic=True, edge=k, edge_param=s)
