"""Numerical checks of the comparison geometry and the Bessel-type direction averages."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, TruncationError
from .geodesic import distance, exp_map, flow_end, log_map
from .metric import ConformalMetric, metric_inner
from .projection import LinePencil, _vec, pi_profile, project, theta_perp

TWO_PI = 2.0 * math.pi
GAUSS_FD_STEP = 1e-4
BESSEL_NODES = 1024
# base angles of the half-period windows, one per region
BASE_ANGLES = (0.0, 0.75 * math.pi, 1.25 * math.pi)
# R1 is written with "and" between its two angle bounds, which is empty; the
# sectors only cover the circle under the "or" reading used here
R1_NOTE = "R1 read as the double sector angle <= pi/2 - 3e/2 OR angle >= 3pi/2 + 3e/2"


# -- Gauss lemma, law of cosines, distance to a line -------------------------


def d_exp(metric: ConformalMetric, p, v, u, h: float = GAUSS_FD_STEP, step: float = 1e-3) -> np.ndarray:
    """``d(exp_p)_v u`` by central differences on the tangent argument."""
    v = _vec(v)
    u = _vec(u)
    a = exp_map(metric, p, v + h * u, step)
    b = exp_map(metric, p, v - h * u, step)
    return (a - b) / (2.0 * h)


def check_gauss_lemma(metric: ConformalMetric, p, v, w, h: float = GAUSS_FD_STEP) -> float:
    """Residual ``|g_q(D v, D w) - g_p(v, w)|`` with ``q = exp_p(v)`` and ``D = d(exp_p)_v``.

    Raises
    ------
    DomainError
        If ``exp_p`` leaves the domain box near ``v``.
    """
    p = metric.check_point(p)
    v = _vec(v)
    w = _vec(w)
    try:
        q = exp_map(metric, p, v)
        Dv = d_exp(metric, p, v, v, h)
        Dw = d_exp(metric, p, v, w, h)
    except TruncationError as exc:
        raise DomainError(f"exp_p leaves the domain box: {exc}") from exc
    return abs(metric_inner(metric, q, Dv, Dw) - metric_inner(metric, p, v, w))


@dataclass(frozen=True)
class CosineCheck:
    slack: float
    ab: float
    ac: float
    bc: float
    angle: float


def check_law_of_cosines(metric: ConformalMetric, A, B, C) -> CosineCheck:
    """Slack ``|BC|^2 - (|AB|^2 + |AC|^2 - 2 |AB| |AC| cos A)``; non-negative when ``K <= 0``."""
    u = log_map(metric, A, B)
    v = log_map(metric, A, C)
    ab, ac = u.g_norm, v.g_norm
    if min(ab, ac) < 1e-4:
        raise DomainError("triangle side shorter than 1e-4")
    bc = distance(metric, B, C)
    cosA = metric_inner(metric, A, u.vec, v.vec) / (ab * ac)
    cosA = min(1.0, max(-1.0, cosA))
    slack = bc * bc - (ab * ab + ac * ac - 2.0 * ab * ac * cosA)
    return CosineCheck(float(slack), ab, ac, bc, math.acos(cosA))


@dataclass
class ConvexityReport:
    lipschitz_slack: float
    min_second_difference: float
    n_geodesics: int
    witnesses: list = field(default_factory=list)

    def passed(self, lip_tol: float = 1e-7, conv_tol: float = 1e-6) -> bool:
        return self.lipschitz_slack >= -lip_tol and self.min_second_difference >= -conv_tol


def dist_to_line(pencil: LinePencil, theta: float, x) -> float:
    return project(pencil, theta, x).dist


def check_dist_convexity(pencil: LinePencil, theta: float, x, y, n_geodesics: int = 20,
                         n_samples: int = 21, seed: int = 0, box=(-1.0, -1.0, 1.0, 1.0)) -> ConvexityReport:
    """Check that ``d_C`` (distance to ``l_theta``) is 1-Lipschitz and convex.

    (a) ``d(x, y) - |d_C(x) - d_C(y)|`` is reported as ``lipschitz_slack``.
    (b) ``t -> d_C(alpha(t))`` along ``n_geodesics`` random geodesic segments
    with endpoints in ``box`` is sampled at ``n_samples`` points;
    ``min_second_difference`` is the smallest normalized second difference.
    """
    metric = pencil.metric
    dx = distance(metric, x, y)
    lip = dx - abs(dist_to_line(pencil, theta, x) - dist_to_line(pencil, theta, y))
    rng = np.random.default_rng(seed)
    worst = math.inf
    wit = []
    x0, y0, x1, y1 = box
    for k in range(n_geodesics):
        a = rng.uniform((x0, y0), (x1, y1))
        b = rng.uniform((x0, y0), (x1, y1))
        u = log_map(metric, a, b)
        ts = np.linspace(0.0, 1.0, n_samples)
        vals = np.array([dist_to_line(pencil, theta, exp_map(metric, a, t * u.vec)) for t in ts])
        dt = ts[1] - ts[0]
        second = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / (dt * dt)
        m = float(second.min())
        if m < worst:
            worst = m
            wit = [k, tuple(a), tuple(b)]
    return ConvexityReport(float(lip), worst, n_geodesics, wit)


def comparison_slack(metric: ConformalMetric, p, w, v) -> float:
    """``d(exp_p w, exp_p v) - |w - v|_{g(p)}``; non-negative when ``K <= 0``."""
    w = _vec(w)
    v = _vec(v)
    a = exp_map(metric, p, w)
    b = exp_map(metric, p, v)
    dv = w - v
    return distance(metric, a, b) - math.sqrt(metric_inner(metric, p, dv, dv))


def foot_nonexpansive_slack(pencil: LinePencil, theta: float, x, y) -> float:
    """``d(x, y) - |s(x) - s(y)|`` for the foot parameters on ``l_theta``."""
    sx = project(pencil, theta, x).s
    sy = project(pencil, theta, y).s
    return distance(pencil.metric, x, y) - abs(sx - sy)


# -- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class RegionLabel:
    labels: frozenset
    epsilon: float
    angle: float


def _region_tests(phi: float, eps: float):
    g = 1.5 * eps
    return {
        "R1": phi <= 0.5 * math.pi - g or phi >= 1.5 * math.pi + g,
        "R2": 0.25 * math.pi + g <= phi <= 1.25 * math.pi - g,
        "R3": 0.75 * math.pi + g <= phi <= 1.75 * math.pi - g,
    }


def region_classify(pencil: LinePencil, w, epsilon: float) -> RegionLabel:
    """Sector labels of ``w`` from its angle to ``e1`` in ``[0, 2 pi)``; sectors are closed."""
    if not 0.0 < epsilon < math.pi / 12:
        raise ValueError("epsilon must lie in (0, pi/12)")
    phi = pencil.arg(w)
    tests = _region_tests(phi, epsilon)
    return RegionLabel(frozenset(k for k, hit in tests.items() if hit), float(epsilon), phi)


def region_angle_range(i: int, epsilon: float):
    """Closed angle interval ``(lo, hi)`` of region ``i`` (1-based); R1 wraps through 0."""
    g = 1.5 * epsilon
    if i == 1:
        return (1.5 * math.pi + g - TWO_PI, 0.5 * math.pi - g)
    if i == 2:
        return (0.25 * math.pi + g, 1.25 * math.pi - g)
    if i == 3:
        return (0.75 * math.pi + g, 1.75 * math.pi - g)
    raise ValueError("region index must be 1, 2 or 3")


def admissible_thetas(i: int, t_perp: float, half_gap: float, n: int) -> np.ndarray:
    """``n`` angles spread over ``[j, t_perp - gap] U [t_perp + gap, j + pi]`` with ``j`` the region base angle."""
    j = BASE_ANGLES[i - 1]
    tp = j + ((t_perp - j) % TWO_PI)
    lo_b, hi_b = tp - half_gap, tp + half_gap
    if not (j <= lo_b and hi_b <= j + math.pi):
        raise DomainError("theta_perp is not inside the region's half-period window")
    n1 = n // 2
    left = np.linspace(j, lo_b, n1)
    right = np.linspace(hi_b, j + math.pi, n - n1)
    return np.concatenate([left, right])


@dataclass(frozen=True)
class RegionConstant:
    region: int
    epsilon: float
    half_gap: float
    value: float
    witness: tuple  # (direction angle, norm, theta)
    samples: int
    negative_samples: int


def estimate_region_constant(pencil: LinePencil, i: int, epsilon: float, half_gap: float = None,
                             n_dirs: int = 64, n_norms: int = 16, n_angles: int = 64) -> RegionConstant:
    """Grid estimate of the lower-bound constant of region ``i``.

    Samples ``n_dirs`` directions across the region, norms ``t = k / n_norms``
    and ``n_angles`` admissible angles, and returns the minimum of
    ``|pi_theta(w)| / min(|w|, 1)`` with its witness.  ``negative_samples``
    counts samples where the signed ``pi_theta(w)`` is negative.
    """
    if half_gap is None:
        half_gap = 0.5 * epsilon
    lo, hi = region_angle_range(i, epsilon)
    best = math.inf
    wit = None
    neg = 0
    count = 0
    for phi in np.linspace(lo, hi, n_dirs):
        u = pencil.vector(phi % TWO_PI)
        thetas = admissible_thetas(i, theta_perp(pencil, u), half_gap, n_angles)
        for t in np.arange(1, n_norms + 1) / n_norms:
            vals = pi_profile(pencil, thetas, t * u)
            ratio = np.abs(vals) / min(t, 1.0)
            k = int(np.argmin(ratio))
            neg += int(np.sum(vals < 0))
            count += len(vals)
            if ratio[k] < best:
                best = float(ratio[k])
                wit = (float(phi % TWO_PI), float(t), float(thetas[k]))
    return RegionConstant(i, float(epsilon), float(half_gap), best, wit, count, neg)


# -- Bessel-type averages ----------------------------------------------------


def _simpson_weights(n: int, length: float) -> np.ndarray:
    if n < 2 or n % 2:
        raise ValueError("Simpson rule needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (length / n / 3.0)


def _nodes(pencil: LinePencil, w, a: float, length: float, n: int) -> np.ndarray:
    thetas = a + np.linspace(0.0, length, n + 1)
    return pi_profile(pencil, thetas, w)


@dataclass
class BesselProfile:
    """Samples of ``J(z) = int_0^{2 pi} cos(z pi_theta(w)) d theta`` for one ``w``."""

    w: tuple
    n_nodes: int
    pis: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        out = np.empty(flat.shape)
        # chunk so the cosine table stays small
        for a in range(0, len(flat), 256):
            zz = flat[a:a + 256]
            out[a:a + 256] = np.cos(np.outer(zz, self.pis)) @ self.weights
        return out.reshape(z.shape) if z.ndim else float(out[0])

    def partial_integral(self, X: float, dz: float = 0.05) -> float:
        """Trapezoid value of ``int_0^X J(z) dz``."""
        if X <= 0 or dz > 0.05 or dz <= 0:
            raise ValueError("need X > 0 and 0 < dz <= 0.05")
        m = max(1, int(math.ceil(X / dz - 1e-9)))
        z = np.linspace(0.0, X, m + 1)
        vals = self(z)
        return float(np.trapezoid(vals, z))

    def partial_integrals(self, Xs, dz: float = 0.05) -> np.ndarray:
        """Partial integrals at increasing ``Xs`` sharing one z grid (``dz`` must divide them)."""
        Xs = np.asarray(Xs, dtype=float)
        zmax = float(Xs.max())
        m = int(round(zmax / dz))
        z = np.linspace(0.0, zmax, m + 1)
        vals = self(z)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(z))])
        idx = np.rint(Xs / (zmax / m)).astype(int)
        if not np.allclose(z[idx], Xs, rtol=0, atol=1e-9):
            return np.array([self.partial_integral(X, dz) for X in Xs])
        return cum[idx]


def bessel_profile(pencil: LinePencil, w, n: int = BESSEL_NODES) -> BesselProfile:
    if n < 256:
        raise ValueError("at least 256 quadrature nodes are required")
    return BesselProfile(tuple(map(float, _vec(w))), n, _nodes(pencil, w, 0.0, TWO_PI, n),
                         _simpson_weights(n, TWO_PI))


def bessel_tilde(pencil: LinePencil, w, z, n: int = BESSEL_NODES):
    """``J(z) = int_0^{2 pi} cos(z pi_theta(w)) d theta`` by composite Simpson on ``n`` intervals."""
    return bessel_profile(pencil, w, n)(z)


def bessel_half(pencil: LinePencil, w, z, t: float, n: int = BESSEL_NODES):
    """``J^t(z) = int_t^{t + pi} cos(z pi_theta(w)) d theta`` on ``n / 2`` Simpson intervals."""
    m = n // 2
    prof = BesselProfile(tuple(map(float, _vec(w))), m, _nodes(pencil, w, t, math.pi, m),
                         _simpson_weights(m, math.pi))
    return prof(z)


def bessel_partial_integral(pencil: LinePencil, w, X: float, dz: float = 0.05, n: int = BESSEL_NODES) -> float:
    return bessel_profile(pencil, w, n).partial_integral(X, dz)


def cauchy_spread(values) -> float:
    """``(max - min) / max|.|`` over the last three entries."""
    tail = np.asarray(values, dtype=float)[-3:]
    return float((tail.max() - tail.min()) / np.abs(tail).max())


def region_base_angle(pencil: LinePencil, w, epsilon: float) -> float:
    """Base angle ``j_i`` of the first region containing ``w``."""
    lab = region_classify(pencil, w, epsilon)
    for k, name in enumerate(("R1", "R2", "R3")):
        if name in lab.labels:
            return BASE_ANGLES[k]
    raise DomainError("direction is in no region")



def foot_angle(pencil: LinePencil, theta: float, q) -> float:
    """g-angle at the foot between the line tangent and the geodesic towards ``q``."""
    res = project(pencil, theta, q)
    v = pencil.direction(theta)
    sign = 1.0 if res.s >= 0 else -1.0
    foot, vel, *_ = flow_end(pencil.metric, pencil.base, sign * v, abs(res.s), pencil.step)
    tangent = sign * vel
    u = log_map(pencil.metric, foot, q).vec
    g = lambda a, b: metric_inner(pencil.metric, foot, a, b)
    c = g(tangent, u) / math.sqrt(g(tangent, tangent) * g(u, u))
    return math.acos(min(1.0, max(-1.0, c)))
