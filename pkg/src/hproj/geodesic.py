"""Geodesic shooting, the exponential map and the two-point distance problem."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConvergenceError, DomainError, TruncationError
from .metric import ConformalMetric, g_norm

DEFAULT_STEP = 1e-3
BVP_TOL = 1e-12
BVP_MAXIT = 200
_DEGENERATE = 1e-14


@dataclass(frozen=True)
class TangentVector:
    """Chart components of a tangent vector at ``base`` with its cached g-norm."""

    base: tuple
    components: tuple
    g_norm: float

    @classmethod
    def at(cls, metric: ConformalMetric, base, components) -> "TangentVector":
        b = metric.check_point(base)
        c = np.asarray(components, dtype=float)
        if c.shape != (2,) or not np.all(np.isfinite(c)):
            raise DomainError(f"not a finite 2-vector: {components!r}")
        return cls((float(b[0]), float(b[1])), (float(c[0]), float(c[1])), g_norm(metric, b, c))

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.components)


@dataclass(frozen=True)
class GeodesicPath:
    """Samples ``(t, point, velocity)`` of a unit-speed geodesic.

    All samples are ``step`` apart in arc length except possibly the last,
    which lands exactly on the requested length.
    """

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    step: float

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1].copy()

    @property
    def length(self) -> float:
        return float(self.t[-1])

    def rows(self):
        for t, (x, y), (vx, vy) in zip(self.t, self.points, self.velocities):
            yield float(t), float(x), float(y), float(vx), float(vy)


def _components(w) -> np.ndarray:
    if isinstance(w, TangentVector):
        return w.vec
    return np.asarray(w, dtype=float)


def shoot(metric: ConformalMetric, p, direction, length: float, step: float = DEFAULT_STEP) -> GeodesicPath:
    """Integrate the geodesic leaving ``p`` along ``direction`` for arc length ``length``.

    The direction is rescaled to unit g-speed.  Classical RK4 with fixed
    step on the first-order system (position, velocity).

    Raises
    ------
    TruncationError
        If the path leaves the domain box; ``t_exit`` holds the exit parameter.
    """
    p = metric.check_point(p)
    d = _components(direction)
    if length < 0 or step <= 0:
        raise ValueError("length must be >= 0 and step > 0")
    n = g_norm(metric, p, d)
    if n < _DEGENERATE:
        raise DomainError("direction has zero length")
    d = d / n
    status, count, out = K.flow_path(metric.packed(), metric.box, p[0], p[1], d[0], d[1],
                                     float(length), float(step))
    if status != K.OK:
        raise TruncationError(out[count - 1, 0])
    out = out[:count]
    return GeodesicPath(out[:, 0].copy(), out[:, 1:3].copy(), out[:, 3:5].copy(), float(step))


def flow_end(metric: ConformalMetric, p, unit, length: float, step: float = DEFAULT_STEP):
    """Endpoint data of the unit-speed geodesic: ``(point, velocity, ja, ja', jb, jb')``.

    ``ja``/``jb`` are the normal Jacobi scalars with (j, j') = (1, 0) and (0, 1)
    at the start.
    """
    r = K.flow(metric.packed(), metric.box, float(p[0]), float(p[1]), float(unit[0]),
               float(unit[1]), float(length), float(step))
    if r[0] != K.OK:
        raise TruncationError(r[1])
    return np.array(r[2:4]), np.array(r[4:6]), r[6], r[7], r[8], r[9]


def exp_map(metric: ConformalMetric, p, w, step: float = DEFAULT_STEP) -> np.ndarray:
    """``exp_p(w)``; returns ``p`` itself for ``|w|_g < 1e-14``."""
    p = metric.check_point(p)
    w = _components(w)
    n = g_norm(metric, p, w)
    if n < _DEGENERATE:
        return p.copy()
    point, *_ = flow_end(metric, p, w / n, n, step)
    return point


def log_map(metric: ConformalMetric, p, q, step: float = DEFAULT_STEP, tol: float = BVP_TOL,
            maxit: int = BVP_MAXIT) -> TangentVector:
    """Inverse of :func:`exp_map`: the tangent vector at ``p`` whose geodesic reaches ``q``.

    Solved by shooting: Newton on launch length and angle, with the exact
    derivatives supplied by the Jacobi fields along the shot, plus a
    backtracking line search on the chart miss distance.
    """
    p = metric.check_point(p)
    q = metric.check_point(q)
    status, rho, wx, wy, _it, res = K.log_map(metric.packed(), metric.box, p[0], p[1], q[0], q[1],
                                              float(step), float(tol), int(maxit))
    if status == K.EXITED:
        raise TruncationError(0.0, "initial shot left the domain box")
    if status != K.OK:
        raise ConvergenceError(res)
    return TangentVector((float(p[0]), float(p[1])), (float(wx), float(wy)), float(rho))


def distance(metric: ConformalMetric, p, q, step: float = DEFAULT_STEP) -> float:
    """Riemannian distance: length of the unique geodesic from ``p`` to ``q``."""
    p = metric.check_point(p)
    q = metric.check_point(q)
    if metric.is_flat:
        return float(math.hypot(*(q - p)))
    return log_map(metric, p, q, step).g_norm
