"""Recursive partition solver.

Pieces are cycles of ids into one shared vertex store, so a seam vertex is
the same mesh vertex in every piece that touches it and glued faces share
edges by index.  Pair criticality is a property of two ids and is computed
once per vertex when it enters the store.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, geom
from .bend import (InfeasibleGeometry, bend_angle_interval, bend_line_image, default_policy,
                   make_bend_line, select_bend_line)
from .geom import GeometryError, Tolerance
from .model import BoundaryMapping, InstanceFormatError, Violation, validate
from .split import SplitError, compute_split

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Numerical-robustness failure; ``trace`` holds the partial solve trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ExistenceViolation(SolverError):
    pass


class AuditError(SolverError):
    pass


class NotIsometric(GeometryError):
    pass


class InvalidBoundary(ValueError):
    def __init__(self, violation: Violation):
        super().__init__(f"invalid boundary mapping: {violation.kind.value} at {violation.pair}")
        self.violation = violation


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PartitionPiece:
    """Sub-polygon with inherited images.

    ``ids`` index the parent's vertices; ``parent.n + k`` denotes the k-th
    point created by the routine (a split point).
    """

    bm: BoundaryMapping
    ids: tuple


@dataclass
class SolveTrace:
    routine1: int = 0
    routine2: int = 0
    insertions: int = 0
    policy: str = ""
    branch: int = 1
    seed: int | None = None
    remaining: list = field(default_factory=list)  # steps left after each call
    steps: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "routine1": self.routine1,
            "routine2": self.routine2,
            "insertions": self.insertions,
            "policy": self.policy,
            "branch": self.branch,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class SolutionMesh:
    vertices_domain: np.ndarray
    vertices_image: np.ndarray
    faces: np.ndarray
    boundary_map: tuple

    @property
    def dimension(self) -> int:
        return self.vertices_image.shape[1]

    def to_json(self, trace: SolveTrace | None = None) -> dict:
        out = {
            "version": 1,
            "dimension": self.dimension,
            "vertices_domain": self.vertices_domain.tolist(),
            "vertices_image": self.vertices_image.tolist(),
            "faces": self.faces.tolist(),
            "boundary_map": list(self.boundary_map),
        }
        if trace is not None:
            out["trace"] = trace.summary()
        return out


def parse_solution(data: dict) -> SolutionMesh:
    try:
        if data.get("version") != 1:
            raise InstanceFormatError(f"unsupported solution version {data.get('version')!r}")
        d = int(data["dimension"])
        dom = np.asarray(data["vertices_domain"], dtype=float).reshape(-1, 2)
        img = np.asarray(data["vertices_image"], dtype=float).reshape(len(dom), d)
        faces = np.asarray(data["faces"], dtype=np.int64).reshape(-1, 3)
        bmap = tuple(int(k) for k in data["boundary_map"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(str(exc)) from exc
    return SolutionMesh(dom, img, faces, bmap)


def read_solution(path) -> SolutionMesh:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceFormatError(f"{path}: top-level JSON value must be an object")
    return parse_solution(data)


def dumps_solution(mesh: SolutionMesh, trace: SolveTrace | None = None) -> str:
    return json.dumps(mesh.to_json(trace), indent=1) + "\n"


# ---------------------------------------------------------------------------
# triangle base case
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineMap:
    """``g(x) = M @ x + c`` with ``M`` of shape (d, 2)."""

    M: np.ndarray
    c: np.ndarray

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.M.T + self.c


def triangle_map(u, v, w, fu, fv, fw, tol: Tolerance = Tolerance()) -> AffineMap:
    """Unique affine isometry carrying triangle (u, v, w) onto (fu, fv, fw)."""
    u, v, w = (np.asarray(x, dtype=float) for x in (u, v, w))
    fu, fv, fw = (np.asarray(x, dtype=float) for x in (fu, fv, fw))
    E = np.column_stack([v - u, w - u])
    if abs(np.linalg.det(E)) <= tol.eps_abs * max(np.abs(E).max(), 1.0):
        raise GeometryError("degenerate triangle")
    for a, b, fa, fb in ((u, v, fu, fv), (v, w, fv, fw), (w, u, fw, fu)):
        dom = np.linalg.norm(a - b)
        if abs(np.linalg.norm(fa - fb) - dom) > tol.band(dom):
            raise NotIsometric("triangle images are not congruent to the triangle")
    F = np.column_stack([fv - fu, fw - fu])
    M = F @ np.linalg.inv(E)
    return AffineMap(M=M, c=fu - M @ u)


# ---------------------------------------------------------------------------
# shared vertex store
# ---------------------------------------------------------------------------

class _Store:
    def __init__(self, points, images, tol: Tolerance):
        n = len(points)
        self.d = images.shape[1]
        self.tol = tol
        cap = 2 * n + 16
        self.pts = np.zeros((cap, 2))
        self.imgs = np.zeros((cap, self.d))
        self.crit = np.zeros((cap, cap), dtype=np.bool_)
        self.m = n
        self.pts[:n] = points
        self.imgs[:n] = images
        _, _, code = geom.classify_matrix(points, images, tol)
        self.crit[:n, :n] = code == 0

    def add(self, p, q) -> int:
        m = self.m
        if m == len(self.pts):
            cap = 2 * m
            pts = np.zeros((cap, 2))
            imgs = np.zeros((cap, self.d))
            crit = np.zeros((cap, cap), dtype=np.bool_)
            pts[:m], imgs[:m], crit[:m, :m] = self.pts, self.imgs, self.crit
            self.pts, self.imgs, self.crit = pts, imgs, crit
        self.pts[m] = p
        self.imgs[m] = q
        dom = np.linalg.norm(self.pts[:m] - p, axis=1)
        img = np.linalg.norm(self.imgs[:m] - q, axis=1)
        row = np.abs(img - dom) <= self.tol.band(dom)
        self.crit[m, :m] = row
        self.crit[:m, m] = row
        self.crit[m, m] = True
        self.m = m + 1
        return m

    def piece(self, ids) -> BoundaryMapping:
        ids = np.asarray(ids)
        return BoundaryMapping(self.pts[ids], self.imgs[ids])


def _routine1_split(ids: list, i: int, j: int):
    return ids[i:j + 1], ids[:i + 1] + ids[j:]


def _chain(ids: list, start: int, stop: int) -> list:
    k = len(ids)
    out = [ids[start]]
    a = start
    while a != stop:
        a = (a + 1) % k
        out.append(ids[a])
    return out


def _visible_critical_pair(store: _Store, ids: list, eps: float):
    arr = np.asarray(ids, dtype=np.int64)
    poly = np.ascontiguousarray(store.pts[arr])
    i, j = _kernels.first_visible_pair(arr, store.crit, poly, eps)
    return None if i < 0 else (int(i), int(j))


def _double_contractive(store: _Store, ids: list):
    arr = np.asarray(ids)
    prev = np.roll(arr, 1)
    nxt = np.roll(arr, -1)
    dom = np.linalg.norm(store.pts[prev] - store.pts[nxt], axis=1)
    img = np.linalg.norm(store.imgs[prev] - store.imgs[nxt], axis=1)
    hit = np.nonzero(img < dom - store.tol.band(dom))[0]
    return None if hit.size == 0 else int(hit[0])


# ---------------------------------------------------------------------------
# public single-step operations on a standalone instance
# ---------------------------------------------------------------------------

def find_visible_critical_pair(bm: BoundaryMapping, tol: Tolerance | None = None):
    """Lowest (i, j) nonadjacent, critical, joined by an interior diagonal; else ``None``."""
    tol = tol or bm.tolerance()
    store = _Store(bm.vertices, bm.images, tol)
    return _visible_critical_pair(store, list(range(bm.n)), tol.eps_abs)


def find_double_contractive_vertex(bm: BoundaryMapping, tol: Tolerance | None = None) -> int:
    tol = tol or bm.tolerance()
    store = _Store(bm.vertices, bm.images, tol)
    v = _double_contractive(store, list(range(bm.n)))
    if v is None:
        raise ExistenceViolation("no vertex has a contractive neighbour pair")
    return v


def _pieces_from(store: _Store, parent: BoundaryMapping, lists) -> tuple:
    return tuple(PartitionPiece(store.piece(ids), tuple(ids)) for ids in lists)


def routine1(bm: BoundaryMapping, i: int, j: int, tol: Tolerance | None = None) -> tuple:
    """Split along the critical diagonal (i, j)."""
    tol = tol or bm.tolerance()
    n = bm.n
    i, j = min(i, j), max(i, j)
    if j - i < 2 or (i == 0 and j == n - 1):
        raise GeometryError(f"vertices {i} and {j} are adjacent")
    if geom.classify_pair(bm.vertices[i], bm.vertices[j], bm.images[i], bm.images[j], tol) \
            is not geom.PairClass.CRITICAL:
        raise GeometryError(f"pair ({i}, {j}) is not critical")
    if not geom.diagonal_clear(bm.vertices, bm.vertices[i], bm.vertices[j], tol.eps_abs):
        raise GeometryError(f"pair ({i}, {j}) is not joined by an interior diagonal")
    store = _Store(bm.vertices, bm.images, tol)
    return _pieces_from(store, bm, _routine1_split(list(range(n)), i, j))


@dataclass
class _Routine2Outcome:
    pieces: list
    record: dict
    insert: tuple | None = None  # (local edge index, point, image)


def _routine2(store: _Store, ids: list, iv: int, policy: str, branch: int,
              rng: np.random.Generator, tol: Tolerance, scale: float) -> _Routine2Outcome:
    piece = store.piece(ids)
    k = len(ids)
    L = select_bend_line(piece, iv, policy, rng=rng, tol=tol)
    fallback = False
    try:
        Limg = bend_line_image(piece, L, branch, tol)
    except InfeasibleGeometry:
        if L.policy == "min-angle":
            raise
        lo, _ = bend_angle_interval(L.theta, L.phi)
        L = make_bend_line(piece, iv, lo, "min-angle", tol, theta=L.theta, phi=L.phi)
        Limg = bend_line_image(piece, L, branch, tol)
        fallback = True
    S = compute_split(piece, L, Limg, tol, scale)
    record = {
        "routine": 2,
        "vertex": ids[iv],
        "theta": L.theta,
        "phi": L.phi,
        "beta": L.beta,
        "policy": L.policy,
        "branch": branch,
        "reflex": bool(L.theta > np.pi),
        "policy_fallback": fallback,
        "t_star": S.t_star,
        "length": L.length,
    }
    if S.synthetic:
        record["synthetic_exit_edge"] = S.edge
        return _Routine2Outcome([], record, insert=(S.edge, S.p, S.q))
    p = store.add(S.p, S.q)
    ix = S.x
    record["split_end"] = ids[ix]
    record["split_point"] = p
    P1 = _chain(ids, iv, ix) + [p]
    P2 = _chain(ids, ix, iv) + [p]
    out = []
    for sub, (a, b) in ((P1, (1, len(P1) - 1)), (P2, (len(P2) - 3, len(P2) - 1))):
        if not geom.diagonal_clear(store.pts[sub], store.pts[sub[a]], store.pts[sub[b]], tol.eps_abs):
            pair = _visible_critical_pair(store, sub, tol.eps_abs)
            if pair is None:
                raise SolverError(f"routine 2 piece around split point {p} has no critical diagonal")
            a, b = pair
            record.setdefault("followup_fallback", []).append([sub[a], sub[b]])
        out.extend(_routine1_split(sub, a, b))
    return _Routine2Outcome(out, record)


def routine2(bm: BoundaryMapping, v: int, policy: str | None = None, branch: int = 1, seed=None,
             tol: Tolerance | None = None) -> tuple:
    """Inset vertex ``v`` to its split point; returns the four resulting pieces.

    The split point is ``bm.n`` in the pieces' ``ids``.
    """
    tol = tol or bm.tolerance()
    store = _Store(bm.vertices, bm.images, tol)
    rng = np.random.default_rng(seed)
    res = _routine2(store, list(range(bm.n)), v, policy or default_policy(bm.dimension),
                    branch, rng, tol, bm.diameter())
    if res.insert is not None:
        raise SplitError("bend line reaches the boundary; the exit must be inserted as a vertex first")
    return _pieces_from(store, bm, res.pieces)


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------

def _insert_on_edge(lists, a: int, b: int, c: int) -> int:
    """Insert id ``c`` between consecutive ids ``a -> b`` in whichever cycle has that edge."""
    for idx, ids in enumerate(lists):
        k = len(ids)
        for s in range(k):
            if ids[s] == a and ids[(s + 1) % k] == b:
                ids.insert(s + 1, c)
                return idx
    return -1


def _audit(store: _Store, parent: list, children: list, tol: Tolerance, trace: SolveTrace):
    area = abs(geom.signed_area(store.pts[parent]))
    total = 0.0
    for ids in children:
        sub = store.piece(ids)
        a = geom.signed_area(sub.vertices)
        if a <= 0:
            raise AuditError(f"piece {ids} is not counterclockwise", trace)
        total += a
        bad = validate(sub, tol)
        if bad is not None:
            raise AuditError(f"piece {ids} is not valid: {bad.to_dict()}", trace)
    if abs(total - area) > 1e-9 * max(area, 1.0) + tol.eps_abs:
        raise AuditError(f"pieces cover area {total} but parent has {area}", trace)
    parent_edges = {(parent[i], parent[(i + 1) % len(parent)]) for i in range(len(parent))}
    child_edges = {}
    for ids in children:
        for i in range(len(ids)):
            e = (ids[i], ids[(i + 1) % len(ids)])
            child_edges[e] = child_edges.get(e, 0) + 1
    for e, cnt in child_edges.items():
        if cnt != 1:
            raise AuditError(f"edge {e} used {cnt} times", trace)
        if e not in parent_edges and (e[1], e[0]) not in child_edges:
            raise AuditError(f"seam edge {e} has no partner", trace)
    for e in parent_edges:
        if e not in child_edges:
            raise AuditError(f"boundary edge {e} of the parent was lost", trace)


def solve(bm: BoundaryMapping, policy: str | None = None, branch: int = 1, seed=0,
          audit: bool = False, tol: Tolerance | None = None):
    """Fill the polygon with a piecewise-affine isometry matching the boundary map.

    Returns ``(SolutionMesh, SolveTrace)``.
    """
    tol = tol or bm.tolerance()
    bad = validate(bm, tol)
    if bad is not None:
        raise InvalidBoundary(bad)
    policy = policy or default_policy(bm.dimension)
    scale = bm.diameter()
    eps = tol.eps_abs
    rng = np.random.default_rng(seed)
    store = _Store(bm.vertices, bm.images, tol)
    trace = SolveTrace(policy=policy, branch=branch, seed=seed)
    n = bm.n
    left = n - 3
    trace.remaining.append(left)
    work = [list(range(n))]
    faces = []
    while work:
        ids = work.pop()
        if len(ids) == 3:
            faces.append(ids)
            continue
        pair = _visible_critical_pair(store, ids, eps)
        if pair is not None:
            i, j = pair
            children = list(_routine1_split(ids, i, j))
            if audit:
                _audit(store, ids, children, tol, trace)
            trace.routine1 += 1
            trace.steps.append({"routine": 1, "pair": [ids[i], ids[j]]})
            left -= 1
            trace.remaining.append(left)
            work.extend(reversed(children))
            continue
        iv = _double_contractive(store, ids)
        if iv is None:
            raise ExistenceViolation(f"piece {ids} has neither a critical diagonal "
                                     "nor a vertex with contractive neighbours", trace)
        try:
            res = _routine2(store, ids, iv, policy, branch, rng, tol, scale)
        except (SplitError, InfeasibleGeometry) as exc:
            raise SolverError(f"routine 2 failed at vertex {ids[iv]}: {exc}", trace) from exc
        if res.insert is not None:
            edge, p, q = res.insert
            a, b = ids[edge], ids[(edge + 1) % len(ids)]
            c = store.add(p, q)
            ids.insert(edge + 1, c)
            left += 1
            # keep the neighbour across the seam conforming
            owner = _insert_on_edge(work, b, a, c)
            if owner < 0:
                owner = _insert_on_edge(faces, b, a, c)
                if owner >= 0:
                    work.append(faces.pop(owner))
            if owner >= 0:
                left += 1
            trace.insertions += 1
            res.record["inserted"] = c
            trace.steps.append(res.record)
            trace.remaining.append(left)
            log.info("bend line from %d reached edge (%d, %d); inserted vertex %d",
                     ids[iv], a, b, c)
            work.append(ids)
            continue
        if audit:
            _audit(store, ids, res.pieces, tol, trace)
        trace.routine2 += 1
        trace.steps.append(res.record)
        left -= 1
        trace.remaining.append(left)
        work.extend(reversed(res.pieces))
    m = store.m
    bmap = [0] * n
    for k, src in enumerate(bm.source_index):
        bmap[src] = k
    mesh = SolutionMesh(
        vertices_domain=store.pts[:m].copy(),
        vertices_image=store.imgs[:m].copy(),
        faces=np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        boundary_map=tuple(bmap),
    )
    return mesh, trace
