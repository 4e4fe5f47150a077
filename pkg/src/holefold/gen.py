"""Instance generator: fold a flat polygon forward and record its boundary.

Each fold acts on the current image of the boundary.  The moving half-plane
is turned about the fold line by ``alpha`` towards +z (``alpha = pi`` is a
flat reflection).  Boundary edges are split where the fold line crosses
them, so every output edge maps to a straight segment of the same length.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import geom
from .bend import trilaterate
from .model import BoundaryMapping, parse_instance, validate

CORPUS = ("I-ID", "I-FOLD", "I-DIHEDRAL", "I-SKEW", "I-CORNER")


@dataclass(frozen=True)
class FoldStep:
    """Fold about the line through ``point`` along ``direction``.

    ``side=+1`` moves the half-plane left of the directed line, ``-1`` the
    right one.  ``alpha`` is the turning angle; ``pi`` reflects.
    """

    point: tuple
    direction: tuple
    side: int = 1
    alpha: float = np.pi

    def __post_init__(self):
        if not (0.0 < self.alpha <= np.pi):
            raise ValueError(f"fold angle must lie in (0, pi], got {self.alpha}")
        if self.side not in (1, -1):
            raise ValueError("side must be +1 or -1")

    @property
    def kind(self) -> str:
        return "reflection" if self.alpha == np.pi else "dihedral"

    def normal(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        return self.side * np.array([-d[1], d[0]])


def _fold_points(img: np.ndarray, step: FoldStep, s: np.ndarray) -> np.ndarray:
    """Apply one fold to 3-vectors whose signed side values are ``s`` (> 0 moves)."""
    nrm = step.normal()
    out = img.copy()
    move = s > 0
    if not move.any():
        return out
    sm = s[move]
    foot = img[move, :2] - sm[:, None] * nrm
    c = -1.0 if step.alpha == np.pi else np.cos(step.alpha)
    z = 0.0 if step.alpha == np.pi else np.sin(step.alpha)
    out[move, 0] = foot[:, 0] + c * sm * nrm[0]
    out[move, 1] = foot[:, 1] + c * sm * nrm[1]
    out[move, 2] = img[move, 2] + z * sm
    return out


def _side_values(img: np.ndarray, step: FoldStep, eps: float) -> np.ndarray:
    s = (img[:, :2] - np.asarray(step.point, dtype=float)) @ step.normal()
    s[np.abs(s) <= eps] = 0.0
    return s


def _apply_step(pts: np.ndarray, img: np.ndarray, step: FoldStep, min_edge: float, eps: float):
    """One fold on the boundary.  Returns ``(pts, img)`` or ``None`` if rejected."""
    lifted = np.abs(img[:, 2]) > eps
    s = _side_values(img, step, eps)
    s_flat = np.where(lifted, -1.0, s)
    if not (s_flat > 0).any():
        return None
    n = len(pts)
    new_pts, new_img, new_s = [], [], []
    for k in range(n):
        j = (k + 1) % n
        new_pts.append(pts[k])
        new_img.append(img[k])
        new_s.append(s_flat[k])
        a, b = s_flat[k], s_flat[j]
        if a * b < 0 and not (lifted[k] or lifted[j]):
            r = a / (a - b)
            new_pts.append(pts[k] + r * (pts[j] - pts[k]))
            new_img.append(img[k] + r * (img[j] - img[k]))
            new_s.append(0.0)
        elif (lifted[k] and b > 0) or (lifted[j] and a > 0):
            # would tear an edge between a lifted and a moving vertex
            return None
    P = np.array(new_pts)
    I = np.array(new_img)
    S = np.array(new_s)
    if np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1).min() < min_edge:
        return None
    return P, _fold_points(I, step, S)


def _finish(pts: np.ndarray, img3: np.ndarray, d: int, rng: np.random.Generator | None) -> BoundaryMapping:
    if d == 2:
        return BoundaryMapping.create(pts, img3[:, :2])
    if d == 3:
        return BoundaryMapping.create(pts, img3)
    # embed in R^d and turn by a random rotation
    rng = rng or np.random.default_rng(0)
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    lifted = np.zeros((len(img3), d))
    lifted[:, :3] = img3
    return BoundaryMapping.create(pts, lifted @ Q.T)


def generate(base, steps, d: int = 2, seed=None, strict: bool = False) -> BoundaryMapping:
    """Fold ``base`` by ``steps`` and return the resulting boundary mapping.

    Steps whose line misses the flat part, that would lift a vertex next to
    an already lifted one, or whose result fails validation are skipped with
    a warning (``strict`` raises).
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    pts = np.asarray(base, dtype=float)
    if geom.signed_area(pts) < 0:
        pts = pts[::-1].copy()
    if geom.first_self_intersection(pts, 1e-12) is not None:
        raise ValueError("base polygon is not simple")
    diam = geom.diameter(pts)
    eps = 1e-12 * diam
    img = np.zeros((len(pts), 3))
    img[:, :2] = pts
    for k, step in enumerate(steps):
        if d == 2 and step.kind != "reflection":
            raise ValueError("only reflections are allowed in the plane")
        res = _apply_step(pts, img, step, 0.0, eps)
        if res is not None and validate(_finish(res[0], res[1], min(d, 3), None)) is not None:
            res = None
        if res is None:
            msg = f"fold step {k} skipped: moves nothing, tears a lifted edge or breaks validity"
            if strict:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=2)
            continue
        pts, img = res
    rng = None if seed is None else np.random.default_rng(seed)
    return _finish(pts, img, d, rng)


def random_polygon(n: int, rng: np.random.Generator, convex: bool = False) -> np.ndarray:
    """Star-shaped polygon with ``n`` vertices around the origin (unit-ish radius)."""
    gaps = rng.uniform(0.5, 1.5, size=n)
    ang = np.cumsum(gaps)
    ang = 2 * np.pi * (ang - ang[0]) / ang[-1] * (n - 1) / n + rng.uniform(0, 2 * np.pi)
    r = np.ones(n) if convex else rng.uniform(0.6, 1.0, size=n)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def random_instance(n_folds: int, d: int = 2, seed=0, n_vertices: int | None = None,
                    convex: bool | None = None, max_tries: int = 30) -> BoundaryMapping:
    """Random valid instance: a random polygon folded ``n_folds`` times.

    Reflections only for ``d = 2``; for ``d >= 3`` mostly dihedral folds
    with some flat reflections mixed in.
    """
    if n_folds < 0:
        raise ValueError("n_folds must be non-negative")
    rng = np.random.default_rng(seed)
    n = int(n_vertices) if n_vertices is not None else int(rng.integers(8, 41))
    if convex is None:
        convex = bool(rng.random() < 0.3)
    pts = random_polygon(n, rng, convex=convex)
    diam = geom.diameter(pts)
    eps = 1e-12 * diam
    min_edge = 1e-3 * diam
    img = np.zeros((n, 3))
    img[:, :2] = pts
    done = 0
    tries = 0
    while done < n_folds and tries < max_tries * max(n_folds, 1):
        tries += 1
        flat = np.abs(img[:, 2]) <= eps
        if flat.sum() < 2:
            break
        lo, hi = img[flat, :2].min(axis=0), img[flat, :2].max(axis=0)
        c = rng.uniform(lo, hi)
        ang = rng.uniform(0, 2 * np.pi)
        if d == 2 or rng.random() < 0.25:
            alpha = np.pi
        else:
            alpha = float(rng.uniform(0.2, 0.9) * np.pi)
        step = FoldStep((float(c[0]), float(c[1])), (float(np.cos(ang)), float(np.sin(ang))),
                        int(rng.choice([-1, 1])), alpha)
        res = _apply_step(pts, img, step, min_edge, eps)
        if res is None:
            continue
        cand = _finish(res[0], res[1], min(d, 3), None)
        if validate(cand) is not None:
            continue
        pts, img = res
        done += 1
    return _finish(pts, img, d, rng)


# ---------------------------------------------------------------------------
# named instances
# ---------------------------------------------------------------------------

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def skew_quadrilateral() -> BoundaryMapping:
    """Unit square whose images form a skew quadrilateral with unit edges.

    Three corners are placed in the plane z=0 with an 80 degree image angle
    at corner 2; corner 0 is lifted off that plane at distance 1.3 from
    corner 2, so both diagonals contract.
    """
    a = np.deg2rad(80.0)
    f1 = np.array([1.0, 0.0, 0.0])
    f2 = np.array([1.0, 1.0, 0.0])
    f3 = f2 + np.array([-np.sin(a), -np.cos(a), 0.0])
    f0 = trilaterate(f1, f2, f3, 1.0, 1.3, 1.0, 1)
    return BoundaryMapping.create(UNIT_SQUARE, np.array([f0, f1, f2, f3]))


def corner_instance() -> BoundaryMapping:
    """Quadrilateral folded flat around an interior degree-4 crease vertex at the origin.

    Creases run along the rays at 0, 100, 180 and 260 degrees.  Corner 0 sits
    on the 100 degree ray with a right angle whose image angle is 60 degrees,
    so its crease starts 15 degrees from the edge to its predecessor and ends
    inside the polygon.
    """
    g = np.deg2rad(100.0)
    v = np.array([np.cos(g), np.sin(g)])
    back = g + np.pi
    du = np.array([np.cos(back + np.pi / 12), np.sin(back + np.pi / 12)])
    dw = np.array([np.cos(back - 5 * np.pi / 12), np.sin(back - 5 * np.pi / 12)])
    # neighbours of corner 0 land on the 0 and 180 degree creases
    u = np.array([v[0] - du[0] * v[1] / du[1], 0.0])
    w = np.array([v[0] - dw[0] * v[1] / dw[1], 0.0])
    low = np.array([v[0], -v[1]])
    pts = np.array([v, w, low, u])

    def reflect(a):
        c, s = np.cos(2 * a), np.sin(2 * a)
        return np.array([[c, s], [s, -c]])

    # the sector between 100 and 180 degrees stays put
    imgs = np.array([v, w, reflect(0.0) @ low, reflect(g) @ u])
    return BoundaryMapping.create(pts, imgs)


def build(name: str) -> BoundaryMapping:
    if name == "I-ID":
        return generate(UNIT_SQUARE, [], d=2)
    if name == "I-FOLD":
        return generate(UNIT_SQUARE, [FoldStep((0.5, 0.0), (0.0, 1.0), -1)], d=2)
    if name == "I-DIHEDRAL":
        return generate(UNIT_SQUARE, [FoldStep((0.5, 0.0), (0.0, 1.0), -1, np.pi / 2)], d=3)
    if name == "I-SKEW":
        return skew_quadrilateral()
    if name == "I-CORNER":
        return corner_instance()
    raise KeyError(f"unknown corpus instance {name!r}")


def load_corpus(name: str) -> BoundaryMapping:
    """Read a named instance from the files shipped with the package."""
    if name not in CORPUS:
        raise KeyError(f"unknown corpus instance {name!r}")
    text = resources.files("holefold").joinpath("corpus", f"{name}.json").read_text(encoding="utf-8")
    return parse_instance(json.loads(text))
