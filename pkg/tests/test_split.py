import numpy as np
import pytest

from holefold import gen, geom
from holefold.bend import BendLineImage, bend_line_image, make_bend_line, select_bend_line
from holefold.model import BoundaryMapping
from holefold.split import (NoVisibleSplitEnd, SeamMismatch, compute_split, constraint_arrays,
                            split_constraints)

from _support import SQUARE, dense_split_oracle, routine2_sites


def _skew_setup():
    bm = gen.build("I-SKEW")
    L = select_bend_line(bm, 0, "bisector")
    return bm, L, bend_line_image(bm, L)


def test_identity_constraints_vanish():
    pent = np.array([[0, 0], [1, 0], [1.5, 0.8], [0.5, 1.5], [-0.4, 0.8]])
    bm = BoundaryMapping(pent, pent)
    L = make_bend_line(bm, 0, 0.4, "explicit")
    E = BendLineImage(origin=bm.images[0].copy(), direction=L.direction.copy())
    for c in split_constraints(bm, L, E):
        assert abs(c.A) <= 1e-12 and abs(c.B) <= 1e-12


def test_identity_line_reaches_boundary_synthetically():
    pent = np.array([[0, 0], [1, 0], [1.5, 0.8], [0.5, 1.5], [-0.4, 0.8]])
    bm = BoundaryMapping(pent, pent)
    L = make_bend_line(bm, 0, 0.4, "explicit")
    E = BendLineImage(origin=bm.images[0].copy(), direction=L.direction.copy())
    S = compute_split(bm, L, E)
    assert S.synthetic and S.x is None
    assert S.t_star == pytest.approx(L.length)
    assert np.allclose(S.q, S.p)


def test_line_into_a_vertex_raises():
    bm = BoundaryMapping(SQUARE, SQUARE)
    L = make_bend_line(bm, 0, np.pi / 4, "explicit")
    E = BendLineImage(origin=bm.images[0].copy(), direction=L.direction.copy())
    with pytest.raises(NoVisibleSplitEnd):
        compute_split(bm, L, E)


def test_seam_mismatch_detected():
    pent = np.array([[0, 0], [1, 0], [1.5, 0.8], [0.5, 1.5], [-0.4, 0.8]])
    bm = BoundaryMapping(pent, pent)
    L = make_bend_line(bm, 0, 0.4, "explicit")
    tilt = L.direction + np.array([0.0, 1e-3])
    E = BendLineImage(origin=bm.images[0].copy(), direction=tilt / np.linalg.norm(tilt))
    with pytest.raises(SeamMismatch):
        compute_split(bm, L, E)


def test_all_b_nonnegative_on_valid_instances():
    for seed in range(20):
        for bm, v in routine2_sites([seed], limit=5):
            L = select_bend_line(bm, v)
            _, _, B = constraint_arrays(bm, L, bend_line_image(bm, L))
            assert B.min() >= -1e-9 * bm.diameter() ** 2


def test_constraints_match_sampled_squared_gap():
    bm, L, E = _skew_setup()
    P, F = bm.vertices, bm.images
    ts = np.linspace(0, L.length, 1000)
    for c in split_constraints(bm, L, E):
        p = P[L.v][None] + ts[:, None] * L.direction
        q = E.origin[None] + ts[:, None] * E.direction
        gap = ((p - P[c.x]) ** 2).sum(1) - ((q - F[c.x]) ** 2).sum(1)
        assert np.allclose(gap, c.B + c.A * ts, atol=1e-12)
        assert np.array_equal(np.sign(np.round(gap, 12)), np.sign(np.round(c.B + c.A * ts, 12)))


def test_constraint_count_is_linear():
    bm, L, E = _skew_setup()
    idx, A, B = constraint_arrays(bm, L, E)
    assert len(idx) == bm.n - 3 and set(idx) == set(range(bm.n)) - {L.u, L.v, L.w}


def test_skew_split_matches_dense_oracle():
    bm, L, E = _skew_setup()
    S = compute_split(bm, L, E)
    t_oracle, step = dense_split_oracle(bm, L, E, step_rel=1e-5 / L.length)
    assert abs(S.t_star - t_oracle) <= 2 * step
    assert S.x == 2
    # the split point sits on the crease and is strictly inside
    assert geom.point_in_polygon(bm.vertices, S.p)[0] == 1


def test_split_triple_conditions():
    bm, L, E = _skew_setup()
    S = compute_split(bm, L, E)
    P, F = bm.vertices, bm.images
    scale = bm.diameter()
    for i in (L.u, L.v, L.w):
        assert abs(np.linalg.norm(S.p - P[i]) - np.linalg.norm(S.q - F[i])) <= 1e-9 * scale
    for i in range(bm.n):
        assert np.linalg.norm(S.p - P[i]) >= np.linalg.norm(S.q - F[i]) - 1e-9 * scale
    assert abs(np.linalg.norm(S.p - P[S.x]) - np.linalg.norm(S.q - F[S.x])) <= 1e-9 * scale
    assert geom.visible(P, S.p, P[S.x])


def test_perturbed_skew_moves_continuously():
    bm, L, E = _skew_setup()
    base = compute_split(bm, L, E).t_star
    imgs = bm.images.copy()
    imgs[0] += 1e-3 * np.array([0.3, -0.2, 0.9]) / np.linalg.norm([0.3, -0.2, 0.9])
    moved = BoundaryMapping(bm.vertices, imgs)
    L2 = select_bend_line(moved, 0, "bisector")
    t2 = compute_split(moved, L2, bend_line_image(moved, L2)).t_star
    assert abs(t2 - base) <= 0.1


def test_maximality_and_oracle_on_generated_sites():
    sites = list(routine2_sites(range(60), limit=60))
    assert len(sites) >= 30
    for bm, v in sites:
        L = select_bend_line(bm, v)
        E = bend_line_image(bm, L)
        S = compute_split(bm, L, E)
        t_oracle, step = dense_split_oracle(bm, L, E, step_rel=1e-4)
        assert abs(S.t_star - t_oracle) <= 1e-4 * L.length + step
        if S.t_star < L.length:
            t = S.t_star + 1e-6 * L.length
            p = bm.vertices[v] + t * L.direction
            q = E.at(t)
            keep = [i for i in range(bm.n) if i not in (L.u, L.v, L.w)]
            gap = (np.linalg.norm(p - bm.vertices[keep], axis=1)
                   - np.linalg.norm(q - bm.images[keep], axis=1))
            assert gap.min() < 0
