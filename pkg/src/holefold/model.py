"""Instances: a simple polygon plus the images of its vertices, and their validity check."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .geom import Tolerance


class InstanceFormatError(ValueError):
    """Instance or solution file could not be parsed."""


class ViolationKind(str, enum.Enum):
    NOT_SIMPLE = "NotSimple"
    WRONG_DIMENSION = "WrongDimension"
    EXPANSIVE_PAIR = "ExpansivePair"
    EDGE_NOT_CRITICAL = "EdgeNotCritical"
    DEGENERATE_EDGE = "DegenerateEdge"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    pair: tuple
    domain_length: float = float("nan")
    image_length: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "status": "Violation",
            "kind": self.kind.value,
            "pair": list(self.pair),
            "domain_length": self.domain_length,
            "image_length": self.image_length,
        }


@dataclass(frozen=True, eq=False)
class BoundaryMapping:
    """Polygon vertices (counterclockwise) with one image per vertex.

    The map on an edge interior is the linear interpolation of the endpoint
    images.  ``source_index[k]`` is the position of vertex ``k`` in the
    caller's original ordering (differs from ``k`` only when the input was
    clockwise and got reversed).
    """

    vertices: np.ndarray
    images: np.ndarray
    source_index: tuple = field(default=None)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        f = np.ascontiguousarray(self.images, dtype=float)
        if f.ndim == 1:
            f = f.reshape(len(v), -1)
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "images", f)
        if self.source_index is None:
            object.__setattr__(self, "source_index", tuple(range(len(v))))

    @classmethod
    def create(cls, vertices, images) -> "BoundaryMapping":
        """Build from raw arrays, reversing clockwise input to counterclockwise."""
        v = np.asarray(vertices, dtype=float)
        f = np.asarray(images, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InstanceFormatError("vertices must be a list of [x, y] pairs")
        if f.ndim != 2 or len(f) != len(v):
            raise InstanceFormatError("images must be a list with one coordinate list per vertex")
        if not (np.isfinite(v).all() and np.isfinite(f).all()):
            raise InstanceFormatError("coordinates must be finite")
        if len(v) >= 3 and geom.signed_area(v) < 0:
            order = np.arange(len(v))[::-1]
            return cls(v[order], f[order], tuple(int(k) for k in order))
        return cls(v, f)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def dimension(self) -> int:
        return self.images.shape[1]

    def diameter(self) -> float:
        return geom.diameter(self.vertices)

    def tolerance(self, eps_rel: float = 1e-9) -> Tolerance:
        return Tolerance.for_scale(self.diameter(), eps_rel)

    def edge_image(self, edge: int, s: float) -> np.ndarray:
        """Interpolated image of the point at parameter ``s`` along edge ``edge``."""
        a = self.images[edge]
        b = self.images[(edge + 1) % self.n]
        return a + s * (b - a)

    def to_json(self) -> dict:
        # written in the caller's original ordering
        inv = np.argsort(self.source_index)
        return {
            "version": 1,
            "dimension": self.dimension,
            "vertices": self.vertices[inv].tolist(),
            "images": self.images[inv].tolist(),
        }


def _source_pair(bm: BoundaryMapping, i: int, j: int) -> tuple:
    a, b = bm.source_index[i], bm.source_index[j]
    return (a, b) if a <= b else (b, a)


def validate(bm: BoundaryMapping, tol: Tolerance | None = None) -> Violation | None:
    """Return ``None`` for a valid boundary mapping, else the first violation.

    Structural problems (dimension, zero-length edges, self-intersection) are
    reported before any pair check.  Pair checks scan index pairs in
    lexicographic order of the caller's vertex numbering.
    """
    if tol is None:
        tol = bm.tolerance()
    n = bm.n
    if bm.dimension < 2 or bm.images.shape != (n, bm.dimension):
        return Violation(ViolationKind.WRONG_DIMENSION, (0, 0))
    if n < 3:
        return Violation(ViolationKind.NOT_SIMPLE, (0, max(n - 1, 0)))
    src = np.argsort(bm.source_index)
    verts = bm.vertices[src]
    imgs = bm.images[src]
    edge_len = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
    short = np.nonzero(edge_len <= tol.eps_abs)[0]
    if short.size:
        i = int(short[0])
        j = (i + 1) % n
        return Violation(ViolationKind.DEGENERATE_EDGE, (min(i, j), max(i, j)), float(edge_len[i]))
    bad = geom.first_self_intersection(verts, tol.eps_abs)
    if bad is not None:
        return Violation(ViolationKind.NOT_SIMPLE, bad)
    dom, img, code = geom.classify_matrix(verts, imgs, tol)
    iu, ju = np.triu_indices(n, 1)
    adjacent = (ju == iu + 1) | ((iu == 0) & (ju == n - 1))
    c = code[iu, ju]
    violating = (adjacent & (c != 0)) | (~adjacent & (c > 0))
    hit = np.nonzero(violating)[0]
    if hit.size == 0:
        return None
    k = int(hit[0])
    i, j = int(iu[k]), int(ju[k])
    kind = ViolationKind.EDGE_NOT_CRITICAL if adjacent[k] else ViolationKind.EXPANSIVE_PAIR
    return Violation(kind, (i, j), float(dom[i, j]), float(img[i, j]))


def is_valid(bm: BoundaryMapping, tol: Tolerance | None = None) -> bool:
    return validate(bm, tol) is None


def restrict(bm: BoundaryMapping, cycle, extra_points=None, extra_images=None,
             tol: Tolerance | None = None) -> BoundaryMapping:
    """Sub-polygon of ``bm`` along a vertex cycle.

    Entries of ``cycle`` below ``bm.n`` refer to parent vertices; entry
    ``bm.n + k`` refers to ``extra_points[k]`` with image ``extra_images[k]``.
    """
    if tol is None:
        tol = bm.tolerance()
    pts = bm.vertices
    imgs = bm.images
    if extra_points is not None and len(extra_points):
        pts = np.vstack([pts, np.asarray(extra_points, dtype=float).reshape(-1, 2)])
        imgs = np.vstack([imgs, np.asarray(extra_images, dtype=float).reshape(-1, bm.dimension)])
    idx = np.asarray(cycle, dtype=int)
    if len(idx) < 3 or len(set(idx.tolist())) != len(idx):
        raise geom.GeometryError("restrict needs a cycle of at least three distinct vertices")
    sub = pts[idx]
    if geom.first_self_intersection(sub, tol.eps_abs) is not None or geom.signed_area(sub) <= 0:
        raise geom.GeometryError("restricted cycle is not a simple counterclockwise polygon")
    return BoundaryMapping(sub, imgs[idx])


def parse_instance(data: dict) -> BoundaryMapping:
    try:
        if data.get("version") != 1:
            raise InstanceFormatError(f"unsupported instance version {data.get('version')!r}")
        d = int(data["dimension"])
        bm = BoundaryMapping.create(data["vertices"], data["images"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(str(exc)) from exc
    if bm.dimension != d:
        # kept parseable; validate() reports the mismatch
        return _DimensionMismatch(bm.vertices, bm.images, bm.source_index, declared=d)
    return bm


@dataclass(frozen=True, eq=False)
class _DimensionMismatch(BoundaryMapping):
    declared: int = 0

    @property
    def dimension(self) -> int:
        return self.declared


def read_instance(path) -> BoundaryMapping:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceFormatError(f"{path}: top-level JSON value must be an object")
    return parse_instance(data)


def write_instance(bm: BoundaryMapping, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bm.to_json(), fh, indent=1)
        fh.write("\n")
