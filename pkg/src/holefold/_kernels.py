"""Hot geometric kernels.

Every kernel exists twice: a scalar-loop version compiled with numba and a
vectorized numpy version.  Set ``HOLEFOLD_NO_NUMBA=1`` to force the numpy
path (also used automatically when numba is unavailable).  Both paths take
and return the same plain numpy types, so callers never branch.

Polygons are ``(k, 2)`` float64 arrays, counterclockwise, not closed.
``eps`` is an absolute distance tolerance.
"""
import os

import numpy as np

_DISABLED = os.environ.get("HOLEFOLD_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - depends on environment
    njit = None

BACKEND = "numba" if njit is not None else "numpy"

# point-in-polygon codes
OUTSIDE, ON_BOUNDARY, INSIDE = -1, 0, 1
# ray-exit carrier kinds
CARRIER_VERTEX, CARRIER_EDGE = 0, 1


# ---------------------------------------------------------------------------
# scalar loop kernels (compiled by numba when available)
# ---------------------------------------------------------------------------

def _pip_scalar(px, py, poly, eps):
    n = poly.shape[0]
    inside = False
    eps2 = eps * eps
    for i in range(n):
        ax = poly[i, 0]
        ay = poly[i, 1]
        j = i + 1 if i + 1 < n else 0
        bx = poly[j, 0]
        by = poly[j, 1]
        dx = bx - ax
        dy = by - ay
        l2 = dx * dx + dy * dy
        t = 0.0
        if l2 > 0.0:
            t = ((px - ax) * dx + (py - ay) * dy) / l2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        qx = ax + t * dx - px
        qy = ay + t * dy - py
        if qx * qx + qy * qy <= eps2:
            return 0
        if (ay > py) != (by > py):
            xint = ax + (py - ay) * dx / dy
            if px < xint:
                inside = not inside
    return 1 if inside else -1


def _pip_many_loop(points, poly, eps):
    m = points.shape[0]
    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        out[i] = _pip_scalar(points[i, 0], points[i, 1], poly, eps)
    return out


def _segment_in_polygon_loop(x0, y0, x1, y1, poly, eps, strict):
    n = poly.shape[0]
    sx = x1 - x0
    sy = y1 - y0
    slen = np.sqrt(sx * sx + sy * sy)
    if slen <= eps:
        r = _pip_scalar(x0, y0, poly, eps)
        return r > 0 or (r == 0 and not strict)
    # proper crossings reject immediately
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        ax = poly[i, 0]
        ay = poly[i, 1]
        bx = poly[j, 0]
        by = poly[j, 1]
        oa = (sx * (ay - y0) - sy * (ax - x0)) / slen
        ob = (sx * (by - y0) - sy * (bx - x0)) / slen
        if (oa > eps and ob < -eps) or (oa < -eps and ob > eps):
            ex = bx - ax
            ey = by - ay
            elen = np.sqrt(ex * ex + ey * ey)
            o0 = (ex * (y0 - ay) - ey * (x0 - ax)) / elen
            o1 = (ex * (y1 - ay) - ey * (x1 - ax)) / elen
            if (o0 > eps and o1 < -eps) or (o0 < -eps and o1 > eps):
                return False
    # breakpoints where the segment touches a vertex
    ts = np.empty(n + 2)
    ts[0] = 0.0
    ts[1] = 1.0
    m = 2
    tmin = eps / slen
    for i in range(n):
        cx = poly[i, 0]
        cy = poly[i, 1]
        dist = abs(sx * (cy - y0) - sy * (cx - x0)) / slen
        if dist <= eps:
            t = ((cx - x0) * sx + (cy - y0) * sy) / (slen * slen)
            if tmin < t < 1.0 - tmin:
                if strict:
                    return False
                ts[m] = t
                m += 1
    ts = np.sort(ts[:m])
    for k in range(m - 1):
        ta = ts[k]
        tb = ts[k + 1]
        if (tb - ta) * slen <= eps:
            continue
        tm = 0.5 * (ta + tb)
        r = _pip_scalar(x0 + tm * sx, y0 + tm * sy, poly, eps)
        if r < 0:
            return False
        if strict and r == 0:
            return False
    return True


def _ray_exit_loop(ox, oy, dx, dy, poly, eps):
    """Return (t, kind, index); t < 0 when the ray starts outside P."""
    n = poly.shape[0]
    ts = np.empty(2 * n + 1)
    m = 0
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        ax = poly[i, 0]
        ay = poly[i, 1]
        ex = poly[j, 0] - ax
        ey = poly[j, 1] - ay
        elen = np.sqrt(ex * ex + ey * ey)
        denom = dx * ey - dy * ex
        if abs(denom) > 1e-14 * elen:
            wx = ax - ox
            wy = ay - oy
            t = (wx * ey - wy * ex) / denom
            s = (wx * dy - wy * dx) / denom
            if t > eps and -eps / elen <= s <= 1.0 + eps / elen:
                ts[m] = t
                m += 1
    for i in range(n):
        cx = poly[i, 0] - ox
        cy = poly[i, 1] - oy
        t = cx * dx + cy * dy
        if t > eps and abs(dx * cy - dy * cx) <= eps:
            ts[m] = t
            m += 1
    if m == 0:
        return -1.0, -1, -1
    ts = np.sort(ts[:m])
    r0 = _pip_scalar(ox + 0.5 * ts[0] * dx, oy + 0.5 * ts[0] * dy, poly, eps)
    if r0 < 0:
        return -1.0, -1, -1
    texit = ts[m - 1]
    for k in range(m - 1):
        ta = ts[k]
        tb = ts[k + 1]
        if tb - ta <= eps:
            continue
        tm = 0.5 * (ta + tb)
        if _pip_scalar(ox + tm * dx, oy + tm * dy, poly, eps) < 0:
            texit = ta
            break
    px = ox + texit * dx
    py = oy + texit * dy
    for i in range(n):
        qx = poly[i, 0] - px
        qy = poly[i, 1] - py
        if qx * qx + qy * qy <= eps * eps:
            return texit, 0, i
    best = -1
    bestd = np.inf
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        ax = poly[i, 0]
        ay = poly[i, 1]
        ex = poly[j, 0] - ax
        ey = poly[j, 1] - ay
        l2 = ex * ex + ey * ey
        t = ((px - ax) * ex + (py - ay) * ey) / l2
        t = min(max(t, 0.0), 1.0)
        qx = ax + t * ex - px
        qy = ay + t * ey - py
        d2 = qx * qx + qy * qy
        if d2 < bestd:
            bestd = d2
            best = i
    return texit, 1, best


def _first_visible_pair_loop(ids, crit, poly, eps):
    k = ids.shape[0]
    for i in range(k):
        for j in range(i + 2, k):
            if i == 0 and j == k - 1:
                continue
            if not crit[ids[i], ids[j]]:
                continue
            if _segment_in_polygon_loop(poly[i, 0], poly[i, 1], poly[j, 0], poly[j, 1],
                                        poly, eps, True):
                return i, j
    return -1, -1


def _side(px, py, qx, qy, rx, ry):
    ux = qx - px
    uy = qy - py
    length = np.sqrt(ux * ux + uy * uy)
    return (ux * (ry - py) - uy * (rx - px)) / length


def _segments_touch(ax, ay, bx, by, cx, cy, dx, dy, eps):
    # closed-segment intersection with an absolute distance band
    o1 = _side(ax, ay, bx, by, cx, cy)
    o2 = _side(ax, ay, bx, by, dx, dy)
    o3 = _side(cx, cy, dx, dy, ax, ay)
    o4 = _side(cx, cy, dx, dy, bx, by)
    if ((o1 > eps and o2 < -eps) or (o1 < -eps and o2 > eps)) and \
            ((o3 > eps and o4 < -eps) or (o3 < -eps and o4 > eps)):
        return True
    # an endpoint within eps of the other segment
    if _point_segment_dist(cx, cy, ax, ay, bx, by) <= eps:
        return True
    if _point_segment_dist(dx, dy, ax, ay, bx, by) <= eps:
        return True
    if _point_segment_dist(ax, ay, cx, cy, dx, dy) <= eps:
        return True
    if _point_segment_dist(bx, by, cx, cy, dx, dy) <= eps:
        return True
    return False


def _point_segment_dist(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    l2 = ex * ex + ey * ey
    t = 0.0
    if l2 > 0.0:
        t = ((px - ax) * ex + (py - ay) * ey) / l2
        t = min(max(t, 0.0), 1.0)
    qx = ax + t * ex - px
    qy = ay + t * ey - py
    return np.sqrt(qx * qx + qy * qy)


def _first_self_intersection_loop(poly, eps):
    n = poly.shape[0]
    for i in range(n):
        i2 = i + 1 if i + 1 < n else 0
        for j in range(i + 1, n):
            j2 = j + 1 if j + 1 < n else 0
            if j == i + 1 or (i == 0 and j == n - 1):
                # adjacent: only a backtrack along the shared vertex is illegal
                if j == i + 1:
                    s = i2
                    a = i
                    b = j2
                else:
                    s = 0
                    a = i2
                    b = j
                ux = poly[a, 0] - poly[s, 0]
                uy = poly[a, 1] - poly[s, 1]
                vx = poly[b, 0] - poly[s, 0]
                vy = poly[b, 1] - poly[s, 1]
                lu = np.sqrt(ux * ux + uy * uy)
                lv = np.sqrt(vx * vx + vy * vy)
                cr = (ux * vy - uy * vx) / max(lu, lv)
                if abs(cr) <= eps and ux * vx + uy * vy > 0.0:
                    return i, j
                continue
            if _segments_touch(poly[i, 0], poly[i, 1], poly[i2, 0], poly[i2, 1],
                               poly[j, 0], poly[j, 1], poly[j2, 0], poly[j2, 1], eps):
                return i, j
    return -1, -1


# ---------------------------------------------------------------------------
# vectorized numpy kernels
# ---------------------------------------------------------------------------

def _edges(poly):
    a = poly
    b = np.roll(poly, -1, axis=0)
    return a, b


def _pip_many_numpy(points, poly, eps):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    a, b = _edges(poly)
    px = points[:, 0:1]
    py = points[:, 1:2]
    ax, ay = a[:, 0][None, :], a[:, 1][None, :]
    bx, by = b[:, 0][None, :], b[:, 1][None, :]
    dx, dy = bx - ax, by - ay
    l2 = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(l2 > 0, ((px - ax) * dx + (py - ay) * dy) / l2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    on = (qx * qx + qy * qy <= eps * eps).any(axis=1)
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (py - ay) * dx / dy
    hits = straddle & (px < xint)
    inside = (hits.sum(axis=1) % 2) == 1
    out = np.where(inside, INSIDE, OUTSIDE).astype(np.int64)
    out[on] = ON_BOUNDARY
    return out


def _segment_in_polygon_numpy(x0, y0, x1, y1, poly, eps, strict):
    p0 = np.array([x0, y0])
    s = np.array([x1 - x0, y1 - y0])
    slen = float(np.hypot(s[0], s[1]))
    if slen <= eps:
        r = _pip_many_numpy(p0[None, :], poly, eps)[0]
        return bool(r > 0 or (r == 0 and not strict))
    a, b = _edges(poly)
    oa = (s[0] * (a[:, 1] - y0) - s[1] * (a[:, 0] - x0)) / slen
    ob = (s[0] * (b[:, 1] - y0) - s[1] * (b[:, 0] - x0)) / slen
    straddle = ((oa > eps) & (ob < -eps)) | ((oa < -eps) & (ob > eps))
    if straddle.any():
        e = b - a
        elen = np.hypot(e[:, 0], e[:, 1])
        o0 = (e[:, 0] * (y0 - a[:, 1]) - e[:, 1] * (x0 - a[:, 0])) / elen
        o1 = (e[:, 0] * (y1 - a[:, 1]) - e[:, 1] * (x1 - a[:, 0])) / elen
        cross = ((o0 > eps) & (o1 < -eps)) | ((o0 < -eps) & (o1 > eps))
        if (straddle & cross).any():
            return False
    rel = poly - p0
    dist = np.abs(s[0] * rel[:, 1] - s[1] * rel[:, 0]) / slen
    t = (rel @ s) / (slen * slen)
    tmin = eps / slen
    touch = (dist <= eps) & (t > tmin) & (t < 1.0 - tmin)
    if strict and touch.any():
        return False
    ts = np.sort(np.concatenate(([0.0, 1.0], t[touch])))
    gaps = np.diff(ts) * slen > eps
    if not gaps.any():
        return True
    tm = 0.5 * (ts[:-1] + ts[1:])[gaps]
    mids = p0[None, :] + tm[:, None] * s[None, :]
    r = _pip_many_numpy(mids, poly, eps)
    if (r < 0).any():
        return False
    if strict and (r == 0).any():
        return False
    return True


def _ray_exit_numpy(ox, oy, dx, dy, poly, eps):
    a, b = _edges(poly)
    e = b - a
    elen = np.hypot(e[:, 0], e[:, 1])
    denom = dx * e[:, 1] - dy * e[:, 0]
    ok = np.abs(denom) > 1e-14 * elen
    w = a - np.array([ox, oy])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
        s = (w[:, 0] * dy - w[:, 1] * dx) / denom
    hit = ok & (t > eps) & (s >= -eps / elen) & (s <= 1.0 + eps / elen)
    c = poly - np.array([ox, oy])
    tv = c[:, 0] * dx + c[:, 1] * dy
    on = (tv > eps) & (np.abs(dx * c[:, 1] - dy * c[:, 0]) <= eps)
    ts = np.sort(np.concatenate((t[hit], tv[on])))
    if ts.size == 0:
        return -1.0, -1, -1
    origin = np.array([ox, oy])
    direction = np.array([dx, dy])
    if _pip_many_numpy((origin + 0.5 * ts[0] * direction)[None, :], poly, eps)[0] < 0:
        return -1.0, -1, -1
    texit = ts[-1]
    if ts.size > 1:
        tm = 0.5 * (ts[:-1] + ts[1:])
        valid = (ts[1:] - ts[:-1]) > eps
        r = _pip_many_numpy(origin[None, :] + tm[:, None] * direction[None, :], poly, eps)
        out = np.nonzero(valid & (r < 0))[0]
        if out.size:
            texit = ts[out[0]]
    p = origin + texit * direction
    dv = np.hypot(poly[:, 0] - p[0], poly[:, 1] - p[1])
    near = np.nonzero(dv <= eps)[0]
    if near.size:
        return float(texit), CARRIER_VERTEX, int(near[0])
    l2 = elen * elen
    tt = np.clip(((p - a) * e).sum(axis=1) / l2, 0.0, 1.0)
    q = a + tt[:, None] * e - p
    return float(texit), CARRIER_EDGE, int(np.argmin((q * q).sum(axis=1)))


def _first_visible_pair_numpy(ids, crit, poly, eps):
    k = ids.shape[0]
    sub = crit[np.ix_(ids, ids)]
    mask = np.triu(sub, 2)
    mask[0, k - 1] = False
    cand = np.argwhere(mask)
    for i, j in cand:
        if _segment_in_polygon_numpy(poly[i, 0], poly[i, 1], poly[j, 0], poly[j, 1],
                                     poly, eps, True):
            return int(i), int(j)
    return -1, -1


def _point_segment_dist_numpy(p, a, b):
    e = b - a
    l2 = (e * e).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(l2 > 0, ((p - a) * e).sum(axis=-1) / l2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    q = a + t[..., None] * e - p
    return np.sqrt((q * q).sum(axis=-1))


def _first_self_intersection_numpy(poly, eps):
    n = poly.shape[0]
    a, b = _edges(poly)
    i, j = np.triu_indices(n, 1)
    adjacent = (j == i + 1) | ((i == 0) & (j == n - 1))
    bad = np.zeros(i.shape, dtype=bool)
    # adjacent edges: backtracking through the shared vertex
    ai, aj = i[adjacent], j[adjacent]
    wrap = aj == ai + 1
    s = np.where(wrap, (ai + 1) % n, 0)
    pa = np.where(wrap, ai, (ai + 1) % n)
    pb = np.where(wrap, (aj + 1) % n, aj)
    u = poly[pa] - poly[s]
    v = poly[pb] - poly[s]
    lu = np.hypot(u[:, 0], u[:, 1])
    lv = np.hypot(v[:, 0], v[:, 1])
    cr = (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]) / np.maximum(lu, lv)
    bad[adjacent] = (np.abs(cr) <= eps) & ((u * v).sum(axis=1) > 0)
    # nonadjacent edges: closed intersection
    ni, nj = i[~adjacent], j[~adjacent]
    A, B, C, D = a[ni], b[ni], a[nj], b[nj]

    def side(p, q, r):
        uu = q - p
        return (uu[:, 0] * (r[:, 1] - p[:, 1]) - uu[:, 1] * (r[:, 0] - p[:, 0])) / np.hypot(uu[:, 0], uu[:, 1])

    o1, o2, o3, o4 = side(A, B, C), side(A, B, D), side(C, D, A), side(C, D, B)
    proper = (((o1 > eps) & (o2 < -eps)) | ((o1 < -eps) & (o2 > eps))) & \
        (((o3 > eps) & (o4 < -eps)) | ((o3 < -eps) & (o4 > eps)))
    touch = (_point_segment_dist_numpy(C, A, B) <= eps) | (_point_segment_dist_numpy(D, A, B) <= eps) | \
        (_point_segment_dist_numpy(A, C, D) <= eps) | (_point_segment_dist_numpy(B, C, D) <= eps)
    bad[~adjacent] = proper | touch
    hit = np.nonzero(bad)[0]
    if hit.size == 0:
        return -1, -1
    return int(i[hit[0]]), int(j[hit[0]])


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if njit is not None:
    _pip_scalar = njit(cache=True)(_pip_scalar)
    _side = njit(cache=True)(_side)
    _point_segment_dist = njit(cache=True)(_point_segment_dist)
    _segments_touch = njit(cache=True)(_segments_touch)
    pip_many = njit(cache=True)(_pip_many_loop)
    _segment_in_polygon_loop = njit(cache=True)(_segment_in_polygon_loop)
    segment_in_polygon = _segment_in_polygon_loop
    ray_exit = njit(cache=True)(_ray_exit_loop)
    first_visible_pair = njit(cache=True)(_first_visible_pair_loop)
    first_self_intersection = njit(cache=True)(_first_self_intersection_loop)
else:
    pip_many = _pip_many_numpy
    segment_in_polygon = _segment_in_polygon_numpy
    ray_exit = _ray_exit_numpy
    first_visible_pair = _first_visible_pair_numpy
    first_self_intersection = _first_self_intersection_numpy

NUMPY_KERNELS = {
    "pip_many": _pip_many_numpy,
    "segment_in_polygon": _segment_in_polygon_numpy,
    "ray_exit": _ray_exit_numpy,
    "first_visible_pair": _first_visible_pair_numpy,
    "first_self_intersection": _first_self_intersection_numpy,
}
ACTIVE_KERNELS = {
    "pip_many": pip_many,
    "segment_in_polygon": segment_in_polygon,
    "ray_exit": ray_exit,
    "first_visible_pair": first_visible_pair,
    "first_self_intersection": first_self_intersection,
}
