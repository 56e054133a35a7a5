import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from hproj import ConvergenceError, DomainError, TangentVector, TruncationError, distance, exp_map, log_map, shoot
from hproj.metric import christoffel, g_norm, metric_inner

# arc length of the x-axis from 0 to 1 under lambda = (x^2 + y^2) / 2
AXIS_LEN = quad(lambda t: math.exp(t * t / 2), 0, 1, epsabs=1e-14)[0]


def ivp_endpoint(metric, p, v, length):
    """Reference geodesic from the Christoffel symbols with a tight adaptive integrator."""

    def rhs(_, s):
        G = christoffel(metric, s[:2])
        u = s[2:]
        return np.concatenate([u, -np.einsum("kij,i,j->k", G, u, u)])

    v = np.asarray(v, float) / g_norm(metric, p, v)
    sol = solve_ivp(rhs, (0, length), np.concatenate([p, v]), method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:2, -1]


def test_axis_length_oracle():
    assert AXIS_LEN == pytest.approx(1.19496, abs=1e-5)


def test_shoot_examples(flat, curved):
    assert np.allclose(shoot(flat, (0, 0), (1, 0), 2).endpoint, (2, 0), atol=1e-14)
    assert np.allclose(shoot(curved, (0, 0), (1, 0), AXIS_LEN).endpoint, (1, 0), atol=1e-5)
    assert np.array_equal(shoot(curved, (0.2, 0.1), (1, 1), 0).endpoint, (0.2, 0.1))


def test_shoot_samples_and_speed(curved):
    path = shoot(curved, (0.3, -0.5), (0.2, 1.0), 2.0037, step=1e-3)
    dt = np.diff(path.t)
    assert np.all(dt > 0)
    assert np.allclose(dt[:-1], 1e-3, atol=1e-12)
    assert path.length == pytest.approx(2.0037, abs=1e-12)
    speed = [g_norm(curved, x, v) for x, v in zip(path.points, path.velocities)]
    assert max(abs(s - 1) for s in speed) <= 1e-7


@pytest.mark.parametrize("p,v,L", [((0.0, 0.0), (1.0, 0.3), 1.5), ((0.4, -0.3), (-0.2, 1.0), 1.0),
                                   ((-0.8, 0.5), (0.7, -0.7), 2.0)])
def test_shoot_matches_adaptive_reference(curved, p, v, L):
    ours = shoot(curved, p, v, L).endpoint
    assert np.allclose(ours, ivp_endpoint(curved, np.array(p), v, L), atol=1e-8)


def test_fourth_order_convergence(curved):
    p, v, L = (0.2, 0.1), (1.0, 0.4), 1.5
    ref = shoot(curved, p, v, L, step=0.1 / 8).endpoint
    e1 = np.linalg.norm(shoot(curved, p, v, L, step=0.1).endpoint - ref)
    e2 = np.linalg.norm(shoot(curved, p, v, L, step=0.05).endpoint - ref)
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.3)


def test_shoot_truncation(flat, curved):
    with pytest.raises(TruncationError) as exc:
        shoot(flat, (0, 0), (1, 0), 50)
    # reported at the first sample outside the box, so within one step
    assert 4.0 <= exc.value.t_exit <= 4.0 + 1e-3 + 1e-12
    edge = quad(lambda t: math.exp(t * t / 2), 0, 4)[0]
    with pytest.raises(TruncationError) as exc:
        shoot(curved, (0, 0), (1, 0), 1000, step=0.05)
    assert edge <= exc.value.t_exit <= edge + 0.05


def test_exp_examples(flat, curved):
    assert np.allclose(exp_map(flat, (0, 0), (0.3, 0.4)), (0.3, 0.4), atol=1e-15)
    assert np.array_equal(exp_map(curved, (0.1, 0.2), (0, 0)), (0.1, 0.2))
    assert np.array_equal(exp_map(curved, (0.1, 0.2), (1e-16, 0)), (0.1, 0.2))
    assert np.allclose(exp_map(curved, (0, 0), (AXIS_LEN, 0)), (1, 0), atol=1e-5)


def test_exp_consistent_with_shoot_and_distance(curved):
    p, w = np.array([0.1, -0.2]), np.array([0.5, 0.4])
    n = g_norm(curved, p, w)
    q = exp_map(curved, p, w)
    assert np.array_equal(q, shoot(curved, p, w / n, n).endpoint)
    assert distance(curved, p, q) == pytest.approx(n, abs=1e-6)


def test_distance_examples(flat, curved):
    assert distance(flat, (0, 0), (3, 4)) == 5
    assert distance(curved, (0.3, 0.3), (0.3, 0.3)) == 0
    assert distance(curved, (0, 0), (1, 0)) == pytest.approx(AXIS_LEN, abs=1e-5)


def test_log_examples(flat, curved):
    w = log_map(flat, (0, 0), (2, 1))
    assert np.allclose(w.components, (2, 1))
    assert log_map(curved, (0.5, 0.5), (0.5, 0.5)).g_norm == 0
    w = log_map(curved, (0, 0), (1, 0))
    assert w.components[1] == pytest.approx(0, abs=1e-12)
    assert w.components[0] > 0
    assert w.g_norm == pytest.approx(AXIS_LEN, abs=1e-5)


def test_round_trip_and_symmetry(curved):
    rng = np.random.default_rng(7)
    for _ in range(100):
        p, q = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        w = log_map(curved, p, q)
        assert np.linalg.norm(exp_map(curved, p, w) - q) <= 1e-6
        assert w.g_norm == pytest.approx(g_norm(curved, p, w.vec), rel=1e-12)
    for _ in range(20):
        p, q = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        assert abs(distance(curved, p, q) - distance(curved, q, p)) <= 1e-7


def test_triangle_inequality(curved):
    rng = np.random.default_rng(11)
    for _ in range(30):
        a, b, c = rng.uniform(-1, 1, (3, 2))
        assert distance(curved, a, c) <= distance(curved, a, b) + distance(curved, b, c) + 1e-7


def test_distance_below_chart_path_length(curved):
    # a straight chart segment is a competitor curve, so its g-length bounds the distance
    rng = np.random.default_rng(3)
    for _ in range(10):
        p, q = rng.uniform(-1, 1, (2, 2))
        seg = lambda t: math.exp(float(curved.lam(*(p + t * (q - p))))) * np.linalg.norm(q - p)
        assert distance(curved, p, q) <= quad(seg, 0, 1, epsabs=1e-13)[0] + 1e-9


def test_comparison_property(curved):
    rng = np.random.default_rng(5)
    p = np.zeros(2)
    for _ in range(30):
        w, v = rng.uniform(-0.7, 0.7, (2, 2))
        d = distance(curved, exp_map(curved, p, w), exp_map(curved, p, v))
        assert d >= math.sqrt(metric_inner(curved, p, w - v, w - v)) - 1e-7


def test_tangent_vector_norm(curved):
    t = TangentVector.at(curved, (1, 0), (1, 0))
    assert t.g_norm ** 2 == pytest.approx(metric_inner(curved, (1, 0), (1, 0), (1, 0)), rel=1e-12)


def test_domain_and_convergence_errors(curved):
    with pytest.raises(DomainError):
        distance(curved, (0, 0), (9, 0))
    with pytest.raises(DomainError):
        shoot(curved, (0, 0), (0, 0), 1)
    with pytest.raises(ConvergenceError):
        log_map(curved, (0, 0), (1, 0.5), maxit=1, tol=1e-15)
