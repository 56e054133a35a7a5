import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from hproj import DomainError, ExtentError, LinePencil, distance, exp_map, log_map, pi_theta, project
from hproj.metric import g_norm, metric_inner
from hproj.projection import (d2pi_dtheta2, dpi_dtheta, dpi_dtheta_perp_jacobi, eps_scan, pi_profile,
                              small_scale_slope, theta_perp)


def scan_foot(pencil, theta, q, lo=-2.0, hi=2.0):
    """Nearest line parameter by brute force on d(q, gamma(s)): coarse grid then bounded refine."""
    ss = np.linspace(lo, hi, 81)
    d = [distance(pencil.metric, q, pencil.line_point(theta, s)) for s in ss]
    k = int(np.argmin(d))
    a, b = ss[max(k - 1, 0)], ss[min(k + 1, len(ss) - 1)]
    res = minimize_scalar(lambda s: distance(pencil.metric, q, pencil.line_point(theta, s)),
                          bounds=(a, b), method="bounded", options={"xatol": 1e-7})
    return res.x, res.fun


def test_flat_examples(flat_pencil):
    r = project(flat_pencil, 0.0, (3, 4))
    assert r.s == pytest.approx(3, abs=1e-12) and r.dist == pytest.approx(4, abs=1e-12)
    assert pi_theta(flat_pencil, math.pi / 2, (3, 4)) == pytest.approx(4, abs=1e-12)
    assert pi_theta(flat_pencil, math.pi / 4, (1, 1)) == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("theta,q", [(0.0, (0.6, 0.6)), (1.1, (-0.4, 0.7)), (2.5, (0.3, -0.9)),
                                     (-0.7, (0.8, 0.1))])
def test_foot_matches_distance_scan(curved_pencil, theta, q):
    r = project(curved_pencil, theta, q)
    s_ref, d_ref = scan_foot(curved_pencil, theta, np.array(q))
    assert r.s == pytest.approx(s_ref, abs=1e-5)
    assert r.dist == pytest.approx(d_ref, abs=1e-6)
    assert np.allclose(r.foot, curved_pencil.line_point(theta, r.s), atol=1e-14)


def test_known_curved_foot(curved_pencil):
    assert project(curved_pencil, 0.0, (0.6, 0.6)).s == pytest.approx(0.532616, abs=1e-6)
    # a point on the other line of the frame pair projects to p
    assert abs(project(curved_pencil, 0.0, (0.0, 0.7)).s) <= 1e-12


def test_point_on_line(curved_pencil):
    q = curved_pencil.line_point(0.8, 0.9)
    r = project(curved_pencil, 0.8, q)
    assert r.s == pytest.approx(0.9, abs=1e-10)
    assert r.dist <= 1e-10


def test_pythagoras_type_inequality(curved_pencil):
    # CAT(0): d(q, y)^2 >= d(q, foot)^2 + d(foot, y)^2 for y on the line
    m = curved_pencil.metric
    rng = np.random.default_rng(2)
    for _ in range(10):
        theta = float(rng.uniform(0, 2 * math.pi))
        q = rng.uniform(-0.8, 0.8, 2)
        r = project(curved_pencil, theta, q)
        for s in rng.uniform(-1.5, 1.5, 5):
            y = curved_pencil.line_point(theta, s)
            assert distance(m, q, y) ** 2 >= r.dist ** 2 + (s - r.s) ** 2 - 1e-7


def test_offset_vector_orthogonal_to_line(curved_pencil):
    m = curved_pencil.metric
    theta, q = 0.4, np.array([-0.3, 0.6])
    r = project(curved_pencil, theta, q)
    foot = np.array(r.foot)
    u = log_map(m, foot, q).vec
    # unit tangent at the foot, by differencing the line
    h = 1e-5
    t = (curved_pencil.line_point(theta, r.s + h) - curved_pencil.line_point(theta, r.s - h)) / (2 * h)
    cos = metric_inner(m, foot, u, t) / (g_norm(m, foot, u) * g_norm(m, foot, t))
    assert abs(cos) <= 1e-6


def test_flat_reduction_random(flat_pencil):
    rng = np.random.default_rng(1)
    th = rng.uniform(0, 2 * math.pi, 50)
    ws = rng.uniform(-2, 2, (50, 2))
    for t, w in zip(th, ws):
        assert pi_theta(flat_pencil, t, w) == pytest.approx(math.hypot(*w) * math.cos(math.atan2(w[1], w[0]) - t),
                                                              abs=1e-9)


@given(t=st.floats(0, 2 * math.pi), phi=st.floats(0, 2 * math.pi), n=st.floats(0.05, 1.2))
@settings(max_examples=40, deadline=None)
def test_antisymmetry(curved_pencil, t, phi, n):
    w = curved_pencil.vector(phi, n)
    a, b = pi_profile(curved_pencil, [t, t + math.pi], w)
    assert abs(a + b) <= 1e-6


def test_profile_agrees_with_single_calls(curved_pencil):
    w = curved_pencil.vector(0.7, 0.8)
    ts = np.linspace(0, 2 * math.pi, 9)
    prof = pi_profile(curved_pencil, ts, w)
    single = [pi_theta(curved_pencil, t, w) for t in ts]
    assert np.allclose(prof, single, atol=1e-10)


def test_theta_perp_zero(curved_pencil):
    for phi in (0.0, 1.0, 3.0, 5.5):
        w = curved_pencil.vector(phi, 0.9)
        tp = theta_perp(curved_pencil, w)
        assert abs(metric_inner(curved_pencil.metric, (0, 0), w, curved_pencil.direction(tp))) <= 1e-14
        assert abs(pi_theta(curved_pencil, tp, w)) <= 1e-10


def test_pi_bounded_by_norm(curved_pencil):
    # the foot map is nonexpansive and fixes p
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = curved_pencil.vector(rng.uniform(0, 2 * math.pi), rng.uniform(0.1, 1.5))
        assert abs(pi_theta(curved_pencil, rng.uniform(0, 2 * math.pi), w)) <= curved_pencil.norm(w) + 1e-9


def test_example_value_in_range(curved_pencil):
    # the flat value 0.8 cos(pi/4) caps the curved one; the conformal factor at p is 1
    v = pi_theta(curved_pencil, math.pi / 4, (0.8, 0.0))
    assert 0 < v <= 0.8 * math.cos(math.pi / 4)
    assert v == pytest.approx(0.47240, abs=1e-5)


def test_flat_derivatives(flat_pencil):
    w = np.array([0.6, -0.8])
    tp = theta_perp(flat_pencil, w)
    assert dpi_dtheta(flat_pencil, tp, w) == pytest.approx(-1.0, abs=1e-8)
    assert abs(d2pi_dtheta2(flat_pencil, tp, w)) <= 1e-6
    assert dpi_dtheta_perp_jacobi(flat_pencil, w) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("n", [0.1, 0.5, 1.0, 2.0])
def test_derivative_two_routes_agree(curved_pencil, n):
    w = curved_pencil.vector(0.3, n)
    tp = theta_perp(curved_pencil, w)
    fd = dpi_dtheta(curved_pencil, tp, w)
    assert fd == pytest.approx(dpi_dtheta_perp_jacobi(curved_pencil, w), abs=1e-7)
    # the curved derivative lies strictly between -|w| and 0
    assert -n < fd < 0


def test_fd_step_validation(curved_pencil):
    with pytest.raises(ValueError):
        dpi_dtheta(curved_pencil, 0.0, (0.5, 0), h=1e-9)
    with pytest.raises(ValueError):
        d2pi_dtheta2(curved_pencil, 0.0, (0.5, 0), h=0.1)


def test_small_scale_slope(curved_pencil, flat_pencil):
    w = flat_pencil.vector(0.0, 1.0)
    assert small_scale_slope(flat_pencil, 0.0, w) == pytest.approx(1.0, abs=1e-9)
    w = curved_pencil.vector(0.0, 1.0)
    assert small_scale_slope(curved_pencil, math.pi / 4, w) == pytest.approx(math.cos(math.pi / 4), abs=1e-3)
    with pytest.raises(DomainError):
        small_scale_slope(curved_pencil, 0.0, (0, 0))


def test_eps_scan_flat_and_small(flat_pencil, curved_pencil):
    # flat: dpi/dtheta = -|w| cos(theta - theta_perp), inside [-|w|, -|w|/2] until pi/3
    sc = eps_scan(flat_pencil, (0.7, 0.0), max_eps=1.2, d_theta=0.01)
    assert not sc.capped
    assert sc.eps_star == pytest.approx(math.pi / 3, abs=0.011)
    sc = eps_scan(curved_pencil, curved_pencil.vector(0.3, 0.1))
    assert sc.capped and sc.eps_star == 0.5


def test_frame_validation(curved):
    with pytest.raises(DomainError):
        LinePencil(curved, e1=(2, 0), e2=(0, 1))
    with pytest.raises(DomainError):
        LinePencil(curved, e1=(0, 1), e2=(1, 0))
    p = LinePencil(curved, p=(0.5, 0.0))
    assert p.norm(p.e1) == pytest.approx(1, abs=1e-14)


def test_extent_error(curved):
    pencil = LinePencil(curved, line_extent=0.3)
    with pytest.raises(ExtentError):
        project(pencil, 0.0, (0.9, 0.1))


def test_line_point_is_geodesic(curved_pencil):
    a = curved_pencil.line_point(1.2, 0.5)
    b = curved_pencil.line_point(1.2, -0.7)
    assert distance(curved_pencil.metric, a, b) == pytest.approx(1.2, abs=1e-6)
    assert np.allclose(exp_map(curved_pencil.metric, (0, 0), 0.5 * curved_pencil.direction(1.2)), a)
