import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holefold import gen, geom
from holefold.bend import (InfeasibleGeometry, bend_angle_interval, bend_line_image, choose_beta,
                           make_bend_line, select_bend_line, trilaterate)
from holefold.geom import GeometryError
from holefold.model import BoundaryMapping

from _support import bend_residual, corner_instance, random_rotation


def test_bend_angle_interval_examples():
    assert bend_angle_interval(np.pi / 2, np.pi / 3) == pytest.approx((np.pi / 12, 5 * np.pi / 12))
    assert bend_angle_interval(np.pi, np.pi / 2) == pytest.approx((np.pi / 4, 3 * np.pi / 4))
    lo, hi = bend_angle_interval(1.3, 0.0)
    assert lo == hi == pytest.approx(0.65)
    with pytest.raises(GeometryError):
        bend_angle_interval(1.0, 1.0)


def test_choose_beta_policies():
    rng = np.random.default_rng(0)
    th, ph = np.pi / 2, np.pi / 3
    assert choose_beta(th, ph, 3, "bisector", rng) == pytest.approx(np.pi / 4)
    assert choose_beta(th, ph, 2, "min-angle", rng) == pytest.approx(np.pi / 12)
    assert choose_beta(th, ph, 2, "max-angle", rng) == pytest.approx(5 * np.pi / 12)
    for _ in range(20):
        assert choose_beta(th, ph, 2, "random", rng) in (pytest.approx(np.pi / 12), pytest.approx(5 * np.pi / 12))
        assert np.pi / 12 <= choose_beta(th, ph, 3, "random", rng) <= 5 * np.pi / 12
    with pytest.raises(ValueError):
        choose_beta(th, ph, 3, "sideways", rng)


def test_random_policy_reproducible():
    bm = gen.build("I-SKEW")
    a = select_bend_line(bm, 0, "random", seed=42)
    b = select_bend_line(bm, 0, "random", seed=42)
    assert a.beta == b.beta


def test_skew_bisector():
    bm = gen.build("I-SKEW")
    L = select_bend_line(bm, 0, "bisector")
    assert L.theta == pytest.approx(np.pi / 2)
    assert L.beta == pytest.approx(np.pi / 4)
    assert L.carrier == ("vertex", 2)
    assert L.length == pytest.approx(np.sqrt(2))


def test_corner_min_angle_planar():
    bm = gen.build("I-CORNER")
    L = select_bend_line(bm, 0, "min-angle")
    assert L.theta == pytest.approx(np.pi / 2)
    assert L.phi == pytest.approx(np.pi / 3)
    assert L.beta == pytest.approx(np.pi / 12)
    E = bend_line_image(bm, L)
    # angle between the image ray and f(u) - f(v) equals beta
    assert geom.image_angle(bm.images[L.u], bm.images[L.v], bm.images[L.v] + E.direction) == pytest.approx(np.pi / 12)
    assert bend_residual(bm, L, E, np.linspace(0, L.length, 11)) <= 1e-12


def test_identity_corner_rejected():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    bm = BoundaryMapping(sq, sq)
    with pytest.raises(GeometryError):
        select_bend_line(bm, 0)


def test_trilaterate_examples():
    c = ([1, 0, 0], [0, 0, 0], [0, 1, 0])
    assert np.allclose(trilaterate(*c, 1, np.sqrt(2), 1, 1), [1, 1, 0])
    assert np.allclose(trilaterate(*c, np.sqrt(2), 1, np.sqrt(2), 1), [0, 0, 1])
    assert np.allclose(trilaterate(*c, np.sqrt(2), 1, np.sqrt(2), -1), [0, 0, -1])
    with pytest.raises(InfeasibleGeometry):
        trilaterate(*c, 0.1, 0.1, 0.1, 1)
    with pytest.raises(GeometryError):
        trilaterate([0, 0, 0], [1, 0, 0], [2, 0, 0], 1, 1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([3, 4, 5]))
def test_trilaterate_forward_fold_oracle(seed, d):
    rng = np.random.default_rng(seed)
    # three points in the plane, a fourth folded off it by a known dihedral
    c = rng.normal(size=(3, 2))
    p = rng.normal(size=2)
    alpha = rng.uniform(0.1, np.pi - 0.1)
    a, b = c[0], c[1]
    t = (b - a) / np.linalg.norm(b - a)
    nrm = np.array([-t[1], t[0]])
    s = float((p - a) @ nrm)
    foot = p - s * nrm
    lifted = np.array([*(foot + s * np.cos(alpha) * nrm), s * np.sin(alpha)])
    pts = np.zeros((4, d))
    pts[:3, :2] = c
    pts[3, :3] = lifted
    Q = random_rotation(d, rng)
    pts = pts @ Q.T
    r = np.linalg.norm(pts[:3] - pts[3], axis=1)
    got = [trilaterate(pts[0], pts[1], pts[2], *r, branch) for branch in (1, -1)]
    for g in got:
        assert np.abs(np.linalg.norm(pts[:3] - g, axis=1) - r).max() <= 1e-9
    if d == 3:
        # two mirror solutions; one of them is the folded point
        assert min(np.linalg.norm(g - pts[3]) for g in got) <= 1e-9


def test_dihedral_corner_reproduces_fold_direction():
    # square corner whose wedge beyond the 45 degree line folds up by pi/2
    g = np.pi / 4
    bm = gen.generate([[0, 0], [1, 0], [1, 1], [0, 1]],
                      [gen.FoldStep((0.0, 0.0), (np.cos(g), np.sin(g)), -1, np.pi / 2)], d=3)
    L = make_bend_line(bm, 0, np.pi / 4, "explicit")
    for branch in (1, -1):
        E = bend_line_image(bm, L, branch)
        # the crease itself stays in the plane: image direction equals the domain direction
        if np.allclose(E.direction[:2], L.direction) and abs(E.direction[2]) < 1e-9:
            break
    else:
        pytest.fail("no branch reproduced the crease direction")


def test_planar_interior_beta_infeasible():
    bm = gen.build("I-CORNER")
    lo, hi = bend_angle_interval(np.pi / 2, np.pi / 3)
    L = make_bend_line(bm, 0, 0.5 * (lo + hi), "explicit")
    with pytest.raises(InfeasibleGeometry):
        bend_line_image(bm, L)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([3, 4]))
def test_spatial_interior_beta_feasible(seed, d):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.3, 2 * np.pi - 0.3)
    phi = rng.uniform(0.0, 0.95 * min(theta, 2 * np.pi - theta))
    bm = corner_instance(theta, phi, d, rng)
    lo, hi = bend_angle_interval(theta, phi)
    L = make_bend_line(bm, 1, rng.uniform(lo, hi), "explicit")
    E = bend_line_image(bm, L, int(rng.choice([-1, 1])))
    scale = max(bm.diameter(), L.length)
    assert bend_residual(bm, L, E, rng.uniform(0, L.length, 5)) <= 1e-9 * scale


def test_rigid_motion_covariance():
    rng = np.random.default_rng(7)
    bm = gen.build("I-SKEW")
    Q = random_rotation(3, rng)
    shift = rng.normal(size=3)
    moved = BoundaryMapping(bm.vertices, bm.images @ Q.T + shift)
    L1 = select_bend_line(bm, 0)
    L2 = select_bend_line(moved, 0)
    assert L1.beta == pytest.approx(L2.beta)
    assert L1.length == pytest.approx(L2.length)
    E1 = bend_line_image(bm, L1)
    E2 = bend_line_image(moved, L2)
    # branch choice is frame dependent; either sign is a valid image
    alt = [Q @ E1.direction]
    E1m = bend_line_image(bm, L1, -1)
    alt.append(Q @ E1m.direction)
    assert min(np.linalg.norm(a - E2.direction) for a in alt) <= 1e-9
