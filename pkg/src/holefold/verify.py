"""Solver-independent acceptance checks for a solution mesh.

Nothing here looks at solver internals: a mesh is accepted iff every face is
congruent to its image, faces glue along shared vertex ids, faces tile the
polygon, the mesh reproduces the boundary map and sampled pairs of points do
not move apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geom
from .model import BoundaryMapping
from .solver import SolutionMesh

DEFAULT_TOL = 1e-7


class OutsideDomain(ValueError):
    pass


@dataclass
class CheckResult:
    passed: bool
    residual: float = 0.0
    detail: str = ""

    def to_dict(self) -> dict:
        return {"pass": self.passed, "residual": self.residual, "detail": self.detail}


@dataclass
class VerifyReport:
    checks: dict = field(default_factory=dict)
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "tolerance": self.tolerance,
            "checks": {k: c.to_dict() for k, c in self.checks.items()},
        }


# ---------------------------------------------------------------------------
# point location
# ---------------------------------------------------------------------------

def _barycentric(mesh: SolutionMesh, pts: np.ndarray):
    """Barycentric coordinates of every point in every face: shape (m, F, 3)."""
    tri = mesh.vertices_domain[mesh.faces]  # (F, 3, 2)
    a = tri[:, 0]
    e1 = tri[:, 1] - a
    e2 = tri[:, 2] - a
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    rel = pts[:, None, :] - a[None, :, :]
    b1 = (rel[..., 0] * e2[None, :, 1] - rel[..., 1] * e2[None, :, 0]) / det
    b2 = (e1[None, :, 0] * rel[..., 1] - e1[None, :, 1] * rel[..., 0]) / det
    return np.stack([1.0 - b1 - b2, b1, b2], axis=-1)


def _locate(mesh: SolutionMesh, pts: np.ndarray, band: float, chunk: int = 512):
    faces, bary = [], []
    for s in range(0, len(pts), chunk):
        B = _barycentric(mesh, pts[s:s + chunk])
        score = B.min(axis=-1)
        k = score.argmax(axis=1)
        rows = np.arange(len(k))
        if (score[rows, k] < -band).any():
            bad = s + int(np.nonzero(score[rows, k] < -band)[0][0])
            raise OutsideDomain(f"point {pts[bad].tolist()} lies outside the mesh")
        faces.append(k)
        bary.append(B[rows, k])
    return np.concatenate(faces), np.concatenate(bary)


def evaluate_many(mesh: SolutionMesh, points, band: float | None = None) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if band is None:
        band = 1e-9
    k, b = _locate(mesh, pts, band)
    corners = mesh.vertices_image[mesh.faces[k]]  # (m, 3, d)
    return np.einsum("mi,mid->md", b, corners)


def evaluate(mesh: SolutionMesh, p) -> np.ndarray:
    """Image of a domain point under the piecewise-affine map."""
    return evaluate_many(mesh, p)[0]


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _tri_area(tri: np.ndarray) -> np.ndarray:
    return 0.5 * _cross2(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])


def _sample_in_polygon(poly: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    out = []
    have = 0
    while have < count:
        cand = rng.uniform(lo, hi, size=(max(2 * (count - have), 16), 2))
        keep = cand[geom.point_in_polygon(poly, cand) > 0]
        out.append(keep)
        have += len(keep)
    return np.vstack(out)[:count]


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def _structure(mesh: SolutionMesh, area_eps: float) -> CheckResult:
    F = mesh.faces
    m = len(mesh.vertices_domain)
    if len(mesh.vertices_image) != m:
        return CheckResult(False, detail="domain and image vertex counts differ")
    if F.size == 0:
        return CheckResult(False, detail="mesh has no faces")
    if F.min() < 0 or F.max() >= m:
        return CheckResult(False, detail="face index out of range")
    if any(k < 0 or k >= m for k in mesh.boundary_map):
        return CheckResult(False, detail="boundary map index out of range")
    tri = mesh.vertices_domain[F]
    area = _tri_area(tri)
    worst = float(area.min())
    if worst <= area_eps:
        return CheckResult(False, worst, f"face {int(area.argmin())} is degenerate or clockwise")
    return CheckResult(True, worst)


def _congruence(mesh: SolutionMesh, tol: float) -> CheckResult:
    F = mesh.faces
    D, I = mesh.vertices_domain, mesh.vertices_image
    worst, face = 0.0, -1
    for a, b in ((0, 1), (1, 2), (2, 0)):
        dl = np.linalg.norm(D[F[:, a]] - D[F[:, b]], axis=1)
        il = np.linalg.norm(I[F[:, a]] - I[F[:, b]], axis=1)
        r = np.abs(dl - il)
        k = int(r.argmax())
        if r[k] > worst:
            worst, face = float(r[k]), k
    return CheckResult(worst <= tol, worst, "" if worst <= tol else f"face {face}")


def _continuity(bm: BoundaryMapping, mesh: SolutionMesh, tol: float) -> CheckResult:
    D, I = mesh.vertices_domain, mesh.vertices_image
    # coincident domain vertices must carry the same image
    worst = 0.0
    order = np.lexsort((D[:, 1], D[:, 0]))
    for s in range(len(order) - 1):
        a, b = order[s], order[s + 1]
        if np.linalg.norm(D[a] - D[b]) <= tol:
            worst = max(worst, float(np.linalg.norm(I[a] - I[b])))
    if worst > tol:
        return CheckResult(False, worst, "coincident vertices have different images")
    # every interior edge is shared by exactly two faces with opposite orientation
    count: dict = {}
    for f in mesh.faces.tolist():
        for s in range(3):
            e = (f[s], f[(s + 1) % 3])
            count[e] = count.get(e, 0) + 1
    poly = bm.vertices
    bad = 0
    for (a, b), c in count.items():
        if c > 1:
            bad += 1
            continue
        if (b, a) in count:
            continue
        # unmatched edge: must lie on the polygon boundary
        mid = 0.5 * (D[a] + D[b])
        if _boundary_distance(poly, mid[None, :])[0] > tol:
            bad += 1
    return CheckResult(bad == 0, float(bad), "" if bad == 0 else f"{bad} unmatched interior edges")


def _boundary_distance(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    rel = pts[:, None, :] - a[None, :, :]
    t = np.clip((rel * ab[None]).sum(-1) / (ab * ab).sum(-1)[None], 0.0, 1.0)
    close = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(pts[:, None, :] - close, axis=-1).min(axis=1)


def _coverage(bm: BoundaryMapping, mesh: SolutionMesh, tol: float, samples: int,
              rng: np.random.Generator) -> CheckResult:
    tri = mesh.vertices_domain[mesh.faces]
    area = _tri_area(tri)
    target = geom.signed_area(bm.vertices)
    gap = abs(float(area.sum()) - target)
    diam = bm.diameter()
    if gap > tol * diam:
        return CheckResult(False, gap, "face areas do not sum to the polygon area")
    pts = _sample_in_polygon(bm.vertices, samples, rng)
    B = _barycentric(mesh, pts)
    # barycentric band expressed as a length: scale by each face's inradius-like size
    edge = np.linalg.norm(tri - np.roll(tri, -1, axis=1), axis=-1).max(axis=1)
    h = 2.0 * area / edge  # smallest height of each face
    band = tol / h
    inside = (B >= band[None, :, None]).all(axis=-1).sum(axis=1)
    near = (B >= -band[None, :, None]).all(axis=-1).sum(axis=1)
    # points away from every edge must be strictly inside exactly one face
    clear = near == inside
    bad = int(((inside != 1) & clear).sum())
    lost = int((near == 0).sum())
    bad += lost
    return CheckResult(bad == 0, gap, "" if bad == 0 else f"{bad} sample points not covered exactly once")


def _boundary(bm: BoundaryMapping, mesh: SolutionMesh, tol: float) -> CheckResult:
    if len(mesh.boundary_map) != bm.n:
        return CheckResult(False, float("inf"), "boundary map length differs from the instance")
    src = np.argsort(bm.source_index)  # caller order -> internal index
    ids = np.asarray(mesh.boundary_map)
    dom = np.linalg.norm(mesh.vertices_domain[ids] - bm.vertices[src], axis=1).max()
    img = np.linalg.norm(mesh.vertices_image[ids] - bm.images[src], axis=1).max()
    worst = float(max(dom, img))
    if worst > tol:
        return CheckResult(False, worst, "boundary vertices do not match the instance")
    P, Fm = bm.vertices, bm.images
    mids = 0.5 * (P + np.roll(P, -1, axis=0))
    want = 0.5 * (Fm + np.roll(Fm, -1, axis=0))
    try:
        got = evaluate_many(mesh, mids, band=tol / max(bm.diameter(), 1e-300) + 1e-12)
    except OutsideDomain as exc:
        return CheckResult(False, float("inf"), str(exc))
    worst = max(worst, float(np.linalg.norm(got - want, axis=1).max()))
    return CheckResult(worst <= tol, worst, "" if worst <= tol else "edge midpoints disagree with the boundary map")


def _nonexpansive(bm: BoundaryMapping, mesh: SolutionMesh, tol: float, samples: int,
                  rng: np.random.Generator) -> CheckResult:
    a = _sample_in_polygon(bm.vertices, samples, rng)
    b = _sample_in_polygon(bm.vertices, samples, rng)
    try:
        ga = evaluate_many(mesh, a)
        gb = evaluate_many(mesh, b)
    except OutsideDomain as exc:
        return CheckResult(False, float("inf"), str(exc))
    excess = np.linalg.norm(ga - gb, axis=1) - np.linalg.norm(a - b, axis=1)
    worst = float(max(excess.max(), 0.0))
    return CheckResult(worst <= tol, worst, "" if worst <= tol else "a sampled pair moves apart")


def verify(bm: BoundaryMapping, mesh: SolutionMesh, tol: float = DEFAULT_TOL, samples: int = 1000,
           seed: int = 0) -> VerifyReport:
    """Check ``mesh`` against ``bm``; ``tol`` is relative to the polygon diameter."""
    diam = bm.diameter()
    abs_tol = tol * diam
    report = VerifyReport(tolerance=abs_tol)
    rng = np.random.default_rng(seed)
    report.checks["structure"] = _structure(mesh, 1e-15 * diam * diam)
    if not report.checks["structure"].passed:
        return report
    if mesh.dimension != bm.dimension:
        report.checks["structure"] = CheckResult(False, detail="mesh and instance dimensions differ")
        return report
    report.checks["congruence"] = _congruence(mesh, abs_tol)
    report.checks["continuity"] = _continuity(bm, mesh, abs_tol)
    report.checks["coverage"] = _coverage(bm, mesh, abs_tol, samples, rng)
    report.checks["boundary"] = _boundary(bm, mesh, abs_tol)
    report.checks["nonexpansive"] = _nonexpansive(bm, mesh, abs_tol, samples, rng)
    return report


# ---------------------------------------------------------------------------
# crossing-segment property suite
# ---------------------------------------------------------------------------

@dataclass
class PropertyReport:
    trials: int
    premise_held: dict
    violations: int
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "trials": self.trials,
            "premise_held": dict(self.premise_held),
            "violations": self.violations,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
        }


def _random_rigid(d: int, rng: np.random.Generator):
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    return Q[:, :2], rng.normal(size=d)


def _crossing_quad(rng: np.random.Generator):
    while True:
        u, v = rng.uniform(-1, 1, size=(2, 2))
        if np.linalg.norm(u - v) < 0.05:
            continue
        x = u + rng.uniform(0.02, 0.98) * (v - u)
        ang = rng.uniform(0, np.pi)
        dirn = np.array([np.cos(ang), np.sin(ang)])
        p = x + rng.uniform(0.02, 1.0) * dirn
        q = x - rng.uniform(0.0, 1.0) * dirn
        if abs(_cross2(v - u, p - u)) > 1e-3 and np.linalg.norm(p - q) > 1e-3:
            return p, q, u, v


def _fold_map(d: int, rng: np.random.Generator):
    """Random nonexpansive map of the plane: a few folds then a rigid motion."""
    steps = []
    for _ in range(int(rng.integers(1, 4))):
        c = rng.uniform(-1, 1, size=2)
        ang = rng.uniform(0, 2 * np.pi)
        alpha = np.pi if d == 2 or rng.random() < 0.3 else rng.uniform(0.1, 0.95) * np.pi
        steps.append((c, np.array([-np.sin(ang), np.cos(ang)]), alpha))
    M, t = _random_rigid(d, rng)

    def apply(x):
        # lifted points stay put; later folds move flat points only
        y = np.array([x[0], x[1], 0.0])
        for c, nrm, alpha in steps:
            if abs(y[2]) > 0.0:
                continue
            s = float(np.dot(y[:2] - c, nrm))
            if s <= 0.0:
                continue
            foot = y[:2] - s * nrm
            y = np.array([foot[0] + s * np.cos(alpha) * nrm[0],
                          foot[1] + s * np.cos(alpha) * nrm[1], s * np.sin(alpha)])
            if d == 2 or alpha == np.pi:
                y[2] = 0.0
        flat = M @ y[:2] + t
        if d == 2:
            return flat
        # z goes along a direction orthogonal to the embedded plane
        return flat + y[2] * _normal_of(M)

    return apply


def _normal_of(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    for k in range(d):
        r = np.zeros(d)
        r[k] = 1.0
        r -= M @ (M.T @ r)
        nr = np.linalg.norm(r)
        if nr > 0.5:
            return r / nr
    raise AssertionError("no orthogonal direction")


def _lens_point(center1, r1, center2, r2, anchor, rng: np.random.Generator):
    """Random point of the intersection of two balls, given one point ``anchor`` inside it."""
    d = len(anchor)
    z = rng.normal(size=d)
    z = center1 + r1 * rng.random() ** (1.0 / d) * z / np.linalg.norm(z)
    w = z - anchor
    # largest lam in [0, 1] with |anchor + lam*w - center2| <= r2
    a = float(w @ w)
    b = 2.0 * float(w @ (anchor - center2))
    c = float((anchor - center2) @ (anchor - center2)) - r2 * r2
    lam = 1.0
    if a > 0.0:
        disc = b * b - 4 * a * c
        if disc >= 0.0:
            lam = min(1.0, max(0.0, (-b + np.sqrt(disc)) / (2 * a)))
        else:
            lam = 0.0
    return anchor + rng.uniform(0.0, lam) * w


def property_suite(seed: int = 0, trials: int = 10_000, d: int = 3, tol: float = 1e-9) -> PropertyReport:
    """Randomized check of the crossing-segment inequalities.

    Two kinds of trial: forward-fold maps, where premises hold by
    construction whenever the fold leaves the critical points together, and
    lens sampling, where one image is drawn from the intersection of the two
    balls its premise allows.
    """
    rng = np.random.default_rng(seed)
    held = {"a": 0, "b": 0, "b_critical": 0}
    violations = 0
    worst = 0.0

    def crit(x, y, fx, fy):
        return abs(np.linalg.norm(fx - fy) - np.linalg.norm(x - y)) <= tol

    def nonexp(x, y, fx, fy):
        return np.linalg.norm(fx - fy) <= np.linalg.norm(x - y) + tol

    for k in range(trials):
        p, q, u, v = _crossing_quad(rng)
        mode = k % 4
        if mode < 2:
            f = _fold_map(d, rng)
            fp, fq, fu, fv = f(p), f(q), f(u), f(v)
        else:
            M, t = _random_rigid(d, rng)
            fq, fu, fv = M @ q + t, M @ u + t, M @ v + t
            fp = _lens_point(fu, np.linalg.norm(p - u), fv, np.linalg.norm(p - v), M @ p + t, rng)
            if mode == 3:
                # part (b): q drawn from its own lens as well
                fq = _lens_point(fu, np.linalg.norm(q - u), fv, np.linalg.norm(q - v), M @ q + t, rng)
        pts = (p, q, u, v)
        imgs = (fp, fq, fu, fv)
        excess = np.linalg.norm(fp - fq) - np.linalg.norm(p - q)
        premise_a = (crit(q, u, fq, fu) and crit(q, v, fq, fv) and crit(u, v, fu, fv)
                     and nonexp(p, u, fp, fu) and nonexp(p, v, fp, fv))
        premise_b = (crit(u, v, fu, fv) and nonexp(p, u, fp, fu) and nonexp(p, v, fp, fv)
                     and nonexp(q, u, fq, fu) and nonexp(q, v, fq, fv))
        if premise_a:
            held["a"] += 1
        if premise_b:
            held["b"] += 1
        if premise_a or premise_b:
            worst = max(worst, float(excess))
            if excess > tol:
                violations += 1
        if premise_b and crit(p, q, fp, fq):
            held["b_critical"] += 1
            for i in range(4):
                for j in range(i + 1, 4):
                    r = abs(np.linalg.norm(imgs[i] - imgs[j]) - np.linalg.norm(pts[i] - pts[j]))
                    if r > tol:
                        violations += 1
                        worst = max(worst, float(r))
    return PropertyReport(trials=trials, premise_held=held, violations=violations,
                          max_residual=worst, tolerance=tol)
