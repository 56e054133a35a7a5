"""The ``verify all`` battery: named checks producing ``(check, case_id, residual, threshold, pass)`` rows.

Every residual is oriented so that a case passes when ``residual <= threshold``
(slack-type quantities are reported negated).  Checks are pure functions of
``(metric, seed)`` and may run in any order or in parallel.
"""
from __future__ import annotations

import math

import numpy as np

from . import analysis as A
from . import geodesic as G
from . import projection as P
from .metric import ConformalMetric, christoffel, g_norm

BOX = ((-1.0, -1.0), (1.0, 1.0))


def _rng(seed, name):
    # same seed, different but fixed stream per check
    return np.random.default_rng([seed, sum(map(ord, name))])


def _row(check, case, residual, threshold):
    residual = float(residual)
    return (check, case, residual, float(threshold), bool(residual <= threshold))


def c_curvature_sign(metric, seed):
    X, Y = metric.grid()
    K = -np.exp(-2.0 * metric.lam(X, Y)) * metric.laplacian_lam(X, Y)
    return [_row("curvature_sign", 0, K.max(), 1e-12)]


def c_christoffel_symmetry(metric, seed):
    rng = _rng(seed, "christoffel")
    rows = []
    for k in range(5):
        G_ = christoffel(metric, rng.uniform(*BOX))
        rows.append(_row("christoffel_symmetry", k, np.abs(G_ - G_.transpose(0, 2, 1)).max(), 0.0))
    return rows


def c_speed_conservation(metric, seed):
    rng = _rng(seed, "speed")
    rows = []
    for k in range(5):
        p = rng.uniform(*BOX)
        path = G.shoot(metric, p, rng.normal(size=2), 1.0)
        dev = max(abs(g_norm(metric, x, v) - 1.0) for x, v in zip(path.points, path.velocities))
        rows.append(_row("speed_conservation", k, dev, 1e-7))
    return rows


def c_exp_log_roundtrip(metric, seed):
    rng = _rng(seed, "roundtrip")
    rows = []
    for k in range(20):
        p, q = rng.uniform(*BOX), rng.uniform(*BOX)
        w = G.log_map(metric, p, q)
        rows.append(_row("exp_log_roundtrip", k, np.hypot(*(G.exp_map(metric, p, w) - q)), 1e-6))
    return rows


def c_distance_symmetry(metric, seed):
    rng = _rng(seed, "symmetry")
    rows = []
    for k in range(10):
        p, q = rng.uniform(*BOX), rng.uniform(*BOX)
        rows.append(_row("distance_symmetry", k, abs(G.distance(metric, p, q) - G.distance(metric, q, p)), 1e-7))
    return rows


def c_triangle_inequality(metric, seed):
    rng = _rng(seed, "triangle")
    rows = []
    for k in range(10):
        a, b, c = (rng.uniform(*BOX) for _ in range(3))
        d = G.distance(metric, a, c) - G.distance(metric, a, b) - G.distance(metric, b, c)
        rows.append(_row("triangle_inequality", k, d, 1e-7))
    return rows


def c_gauss_lemma(metric, seed):
    rng = _rng(seed, "gauss")
    rows = []
    for k in range(10):
        v = rng.uniform(-0.7, 0.7, 2)
        w = rng.uniform(-1.0, 1.0, 2)
        rows.append(_row("gauss_lemma", k, A.check_gauss_lemma(metric, (0.0, 0.0), v, w), 1e-4))
    return rows


def c_law_of_cosines(metric, seed):
    rng = _rng(seed, "cosines")
    rows = []
    for k in range(10):
        a, b, c = (rng.uniform(*BOX) for _ in range(3))
        rows.append(_row("law_of_cosines", k, -A.check_law_of_cosines(metric, a, b, c).slack, 1e-6))
    return rows


def c_comparison(metric, seed):
    rng = _rng(seed, "comparison")
    rows = []
    for k in range(10):
        w, v = rng.uniform(-0.7, 0.7, 2), rng.uniform(-0.7, 0.7, 2)
        rows.append(_row("comparison", k, -A.comparison_slack(metric, (0.0, 0.0), w, v), 1e-7))
    return rows


def c_dist_to_line(metric, seed):
    rng = _rng(seed, "dist_line")
    pencil = P.LinePencil(metric)
    rep = A.check_dist_convexity(pencil, float(rng.uniform(0, math.pi)), rng.uniform(*BOX), rng.uniform(*BOX),
                                 n_geodesics=5, seed=seed)
    return [_row("dist_lipschitz", 0, -rep.lipschitz_slack, 1e-7),
            _row("dist_convexity", 0, -rep.min_second_difference, 1e-6)]


def c_foot(metric, seed):
    rng = _rng(seed, "foot")
    pencil = P.LinePencil(metric)
    rows = []
    for k in range(10):
        t = float(rng.uniform(0, 2 * math.pi))
        x, y = rng.uniform(*BOX), rng.uniform(*BOX)
        rows.append(_row("foot_nonexpansive", k, -A.foot_nonexpansive_slack(pencil, t, x, y), 1e-7))
        if P.project(pencil, t, x).dist > 1e-6:
            rows.append(_row("foot_right_angle", k, abs(A.foot_angle(pencil, t, x) - math.pi / 2), 1e-5))
    return rows


def c_antisymmetry(metric, seed):
    rng = _rng(seed, "antisym")
    pencil = P.LinePencil(metric)
    rows = []
    for k in range(10):
        t = float(rng.uniform(0, 2 * math.pi))
        w = pencil.vector(rng.uniform(0, 2 * math.pi), rng.uniform(0.1, 1.0))
        a, b = P.pi_profile(pencil, [t, t + math.pi], w)
        rows.append(_row("pi_antisymmetry", k, abs(a + b), 1e-6))
    return rows


def c_derivatives_at_perp(metric, seed):
    pencil = P.LinePencil(metric)
    rows = []
    case = 0
    for n in (0.1, 0.5, 1.0, 2.0):
        for phi in np.arange(4) * (math.pi / 2) + 0.3:
            w = pencil.vector(phi, n)
            tp = P.theta_perp(pencil, w)
            rows.append(_row("dpi_identity", case, abs(P.dpi_dtheta(pencil, tp, w) + n), 1e-4))
            rows.append(_row("d2pi_zero", case, abs(P.d2pi_dtheta2(pencil, tp, w)), 1e-3))
            case += 1
    return rows


def c_small_scale_slope(metric, seed):
    rng = _rng(seed, "slope")
    pencil = P.LinePencil(metric)
    rows = []
    for k in range(5):
        phi = float(rng.uniform(0, 2 * math.pi))
        n = float(rng.uniform(0.2, 1.0))
        t = phi + math.pi / 2 + float(rng.uniform(0.1, math.pi - 0.1))
        est = P.small_scale_slope(pencil, t, pencil.vector(phi, n))
        rows.append(_row("small_scale_slope", k, abs(est - n * math.cos(phi - t)), 1e-3))
    return rows


def c_region_constants(metric, seed):
    pencil = P.LinePencil(metric)
    rows = []
    for i in (1, 2, 3):
        rc = A.estimate_region_constant(pencil, i, 0.2, n_dirs=4, n_norms=4, n_angles=16)
        rows.append(("region_constant", i, -rc.value, 0.0, bool(rc.value > 0)))
    return rows


def c_bessel(metric, seed):
    pencil = P.LinePencil(metric)
    w = pencil.vector(0.4, 0.5)
    prof = A.bessel_profile(pencil, w, 512)
    j = A.region_base_angle(pencil, w, 0.2)
    rows = []
    for k, z in enumerate((0.5, 2.0, 8.0, 20.0)):
        tol = 1e-6 * (1 + z)
        rows.append(_row("bessel_symmetry", k, abs(prof(z) - prof(-z)), tol))
        rows.append(_row("bessel_half_period", k, abs(prof(z) - 2 * A.bessel_half(pencil, w, z, j, 512)), 2 * tol))
    return rows


CHECKS = {
    "antisymmetry": c_antisymmetry,
    "bessel": c_bessel,
    "christoffel": c_christoffel_symmetry,
    "comparison": c_comparison,
    "curvature": c_curvature_sign,
    "derivatives": c_derivatives_at_perp,
    "dist_to_line": c_dist_to_line,
    "distance_symmetry": c_distance_symmetry,
    "exp_log": c_exp_log_roundtrip,
    "foot": c_foot,
    "gauss": c_gauss_lemma,
    "law_of_cosines": c_law_of_cosines,
    "regions": c_region_constants,
    "slope": c_small_scale_slope,
    "speed": c_speed_conservation,
    "triangle": c_triangle_inequality,
}


def run_check(task):
    """Worker entry: ``(name, metric, seed)`` -> rows; errors become failing rows."""
    name, metric, seed = task
    try:
        return CHECKS[name](metric, seed)
    except Exception as exc:  # a crashing check is a failed check, not a crashed suite
        return [(name, -1, math.inf, 0.0, False, f"{type(exc).__name__}: {exc}")]


def run_suite(metric: ConformalMetric, seed: int = 0, mapper=map, names=None):
    """All checks as ``(rows, errors)``; rows sorted by ``(check, case_id)``."""
    names = sorted(names or CHECKS)
    rows, errors = [], []
    for part in mapper(run_check, [(n, metric, seed) for n in names]):
        for r in part:
            rows.append(r[:5])
            if len(r) > 5:
                errors.append(f"{r[0]}: {r[5]}")
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows, sorted(errors)
