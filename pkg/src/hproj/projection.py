"""The pencil of lines through a base point and orthogonal projection onto its lines.

A line of the pencil is ``l_theta(s) = exp_p(s v_theta)`` with
``v_theta = cos(theta) e1 + sin(theta) e2``.  The foot of ``q`` on ``l_theta``
is found in the Fermi chart ``F(s, r) = exp_{l(s)}(r n(s))`` of the line,
which on a Hadamard surface is a global diffeomorphism, so ``q = F(s, r)``
has exactly one solution and it is the nearest point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ConvergenceError, DomainError, ExtentError, TruncationError
from .geodesic import DEFAULT_STEP, TangentVector, exp_map, flow_end
from .metric import ConformalMetric, metric_inner

DEFAULT_EXTENT = 8.0
FOOT_TOL = 1e-13
FOOT_MAXIT = 100
FRAME_TOL = 1e-12
TWO_PI = 2.0 * math.pi


def _vec(w) -> np.ndarray:
    if isinstance(w, TangentVector):
        return w.vec
    return np.asarray(w, dtype=float)


@dataclass(frozen=True)
class ProjectionResult:
    theta: float
    s: float
    foot: tuple
    dist: float
    iterations: int
    r: float = 0.0


@dataclass(frozen=True)
class LinePencil:
    """Lines through ``p`` with a positively oriented g-orthonormal frame ``{e1, e2}``.

    Parameters
    ----------
    metric : ConformalMetric
    p : (x, y)
    e1, e2 : 2-vectors, optional
        Frame at ``p``.  Defaults to the chart axes scaled to g-length one.
    line_extent : float
        Largest ``|s|`` at which a foot is accepted.
    step : float
        Integrator step used for every geodesic shot.
    """

    metric: ConformalMetric
    p: tuple = (0.0, 0.0)
    e1: tuple = None
    e2: tuple = None
    line_extent: float = DEFAULT_EXTENT
    step: float = DEFAULT_STEP
    tol: float = FOOT_TOL
    _p: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = self.metric.check_point(self.p)
        object.__setattr__(self, "p", (float(p[0]), float(p[1])))
        object.__setattr__(self, "_p", p)
        inv = 1.0 / self.metric.conformal_factor(p)
        e1 = np.array([inv, 0.0]) if self.e1 is None else np.asarray(self.e1, dtype=float)
        e2 = np.array([0.0, inv]) if self.e2 is None else np.asarray(self.e2, dtype=float)
        g11 = metric_inner(self.metric, p, e1, e1)
        g22 = metric_inner(self.metric, p, e2, e2)
        g12 = metric_inner(self.metric, p, e1, e2)
        if max(abs(g11 - 1), abs(g22 - 1), abs(g12)) > FRAME_TOL:
            raise DomainError("frame {e1, e2} is not g-orthonormal at p")
        if e1[0] * e2[1] - e1[1] * e2[0] <= 0:
            raise DomainError("frame {e1, e2} is not positively oriented")
        if not self.line_extent > 0 or not self.step > 0:
            raise ValueError("line_extent and step must be positive")
        object.__setattr__(self, "e1", (float(e1[0]), float(e1[1])))
        object.__setattr__(self, "e2", (float(e2[0]), float(e2[1])))

    @property
    def base(self) -> np.ndarray:
        return self._p.copy()

    def direction(self, theta: float) -> np.ndarray:
        """``v_theta`` in chart components."""
        c, s = math.cos(theta), math.sin(theta)
        return np.array([c * self.e1[0] + s * self.e2[0], c * self.e1[1] + s * self.e2[1]])

    def frame_coords(self, w) -> np.ndarray:
        """Components of ``w`` in the frame, ``(g(w, e1), g(w, e2))``."""
        w = _vec(w)
        return np.array([metric_inner(self.metric, self._p, w, self.e1),
                         metric_inner(self.metric, self._p, w, self.e2)])

    def arg(self, w) -> float:
        """Angle of ``w`` measured from ``e1`` towards ``e2``, in ``[0, 2 pi)``."""
        a, b = self.frame_coords(w)
        if math.hypot(a, b) == 0.0:
            raise DomainError("the zero vector has no direction")
        return math.atan2(b, a) % TWO_PI

    def norm(self, w) -> float:
        return float(math.hypot(*self.frame_coords(w)))

    def vector(self, angle: float, norm: float = 1.0) -> np.ndarray:
        """Chart components of the tangent vector with frame angle ``angle``."""
        return norm * self.direction(angle)

    def line_point(self, theta: float, s: float) -> np.ndarray:
        return exp_map(self.metric, self._p, s * self.direction(theta), self.step)

    def _packed(self):
        return self.metric.packed(), self.metric.box


def _check_status(status, res, s, extent):
    if status == K.EXTENT or (status == K.OK and abs(s) >= extent):
        raise ExtentError(f"foot parameter reached line extent {extent:g}; enlarge line_extent")
    if status == K.EXITED:
        raise TruncationError(0.0, "a Fermi-chart shot left the domain box")
    if status != K.OK:
        raise ConvergenceError(res)


def project(pencil: LinePencil, theta: float, q) -> ProjectionResult:
    """Nearest point to ``q`` on ``l_theta``.

    Returns the signed foot parameter ``s``, the foot, ``dist = d(q, l_theta)``
    and the Newton iteration count.  ``r`` is the signed Fermi offset (positive
    on the ``J v_theta`` side).

    Raises
    ------
    ExtentError
        Foot at or beyond ``+-line_extent``.
    ConvergenceError
        Newton stalled above tolerance.
    """
    metric = pencil.metric
    q = metric.check_point(q)
    mk, box = pencil._packed()
    px, py = pencil.p
    v = pencil.direction(theta)
    s0, r0 = K._chart_guess(mk, px, py, v[0], v[1], q[0], q[1])
    out = K.foot_solve(mk, box, px, py, v[0], v[1], q[0], q[1], s0, r0, pencil.step,
                       pencil.line_extent, pencil.tol, 0.0, FOOT_MAXIT, K._EMPTY, K._EMPTY, False)
    status, s, r, it, res = out[:5]
    _check_status(status, res, s, pencil.line_extent)
    foot = pencil.line_point(theta, s)
    return ProjectionResult(float(theta), float(s), (float(foot[0]), float(foot[1])), abs(float(r)),
                            int(it), float(r))


def pi_theta(pencil: LinePencil, theta: float, w) -> float:
    """``pi(theta, w)``: foot parameter of ``exp_p(w)`` on ``l_theta``."""
    q = exp_map(pencil.metric, pencil.base, _vec(w), pencil.step)
    return project(pencil, theta, q).s


def pi_profile(pencil: LinePencil, thetas, w) -> np.ndarray:
    """``pi(theta, w)`` for an array of angles, warm-starting along the sequence."""
    thetas = np.ascontiguousarray(np.asarray(thetas, dtype=float).ravel())
    q = exp_map(pencil.metric, pencil.base, _vec(w), pencil.step)
    return profile_point(pencil, thetas, q)


def profile_point(pencil: LinePencil, thetas, q) -> np.ndarray:
    mk, box = pencil._packed()
    thetas = np.ascontiguousarray(np.asarray(thetas, dtype=float).ravel())
    status, s, r, it = K.project_profile(mk, box, pencil.p[0], pencil.p[1], pencil.e1[0], pencil.e1[1],
                                         pencil.e2[0], pencil.e2[1], thetas, float(q[0]), float(q[1]),
                                         pencil.step, pencil.line_extent, pencil.tol, FOOT_MAXIT)
    bad = np.flatnonzero(status != K.OK)
    if bad.size:
        i = bad[0]
        # resolve once more on its own to raise the precise error
        project(pencil, thetas[i], q)
        raise ConvergenceError(math.nan, f"projection failed at theta={thetas[i]:.6g}")
    if np.any(np.abs(s) >= pencil.line_extent):
        raise ExtentError(f"foot parameter reached line extent {pencil.line_extent:g}")
    return s


def theta_perp(pencil: LinePencil, w) -> float:
    """Direction ``theta`` in ``[0, 2 pi)`` with ``g(w, v_theta) = 0`` and ``{w, v_theta}`` positive."""
    return (pencil.arg(w) + 0.5 * math.pi) % TWO_PI


def dpi_dtheta(pencil: LinePencil, theta: float, w, h: float = 1e-4) -> float:
    """Central difference ``(pi_{theta+h} - pi_{theta-h}) / 2h``."""
    _check_h(h)
    a, b = pi_profile(pencil, [theta - h, theta + h], w)
    return float((b - a) / (2.0 * h))


def d2pi_dtheta2(pencil: LinePencil, theta: float, w, h: float = 1e-3) -> float:
    """Second central difference of ``theta -> pi(theta, w)``."""
    _check_h(h)
    a, c, b = pi_profile(pencil, [theta - h, theta, theta + h], w)
    return float((b - 2.0 * c + a) / (h * h))


def _check_h(h):
    if not 1e-6 <= h <= 1e-2:
        raise ValueError(f"finite-difference step {h} outside [1e-6, 1e-2]")


def dpi_dtheta_perp_jacobi(pencil: LinePencil, w) -> float:
    """``d pi / d theta`` at ``theta_w_perp`` from Jacobi fields, without differencing.

    At the orthogonal angle the foot is ``p`` and ``exp_p(w)`` sits at Fermi
    offset ``r = |w|``.  Rotating the line about ``p`` moves that point by the
    Jacobi field ``jb(r)`` while sliding the foot moves it by ``ja(r)``, so
    the derivative equals ``-jb(r) / ja(r)`` (``-|w|`` when flat).
    """
    w = _vec(w)
    n = pencil.norm(w)
    if n == 0.0:
        raise DomainError("zero vector")
    _, _, ja, _, jb, _ = flow_end(pencil.metric, pencil.base, w / n, n, pencil.step)
    return -jb / ja


def small_scale_slope(pencil: LinePencil, theta: float, w, kmin: int = 4, kmax: int = 12) -> float:
    """Richardson estimate of ``lim_{t->0+} pi_theta(t w) / t`` from ``t = 2^-k``.

    The quotient is smooth in ``t`` with an expansion in integer powers, so
    repeated elimination with factors ``2, 4, 8, ...`` is applied to the
    sequence ``k = kmin..kmax``.
    """
    w = _vec(w)
    if pencil.norm(w) == 0.0:
        raise DomainError("zero vector")
    ks = np.arange(kmin, kmax + 1)
    vals = []
    for k in ks:
        t = 2.0 ** (-float(k))
        vals.append(pi_theta(pencil, theta, t * w) / t)
    T = list(vals)
    # Neville table; T[i] holds the estimate from levels i..i+j after pass j
    levels = min(4, len(T) - 1)
    for j in range(1, levels + 1):
        f = 2.0 ** j
        T = [(f * T[i + 1] - T[i]) / (f - 1.0) for i in range(len(T) - 1)]
    return float(T[-1])


@dataclass(frozen=True)
class EpsScan:
    """Result of the neighborhood scan around the orthogonal direction for one vector."""

    w: tuple
    norm: float
    theta_perp: float
    eps_star: float
    capped: bool
    worst_ratio: float


def eps_scan(pencil: LinePencil, w, d_theta: float = 2.5e-3, max_eps: float = 0.5,
             h: float = 1e-4, slack: float = 1e-3) -> EpsScan:
    """Largest offset ``e`` such that ``-|w| <= dpi/dtheta <= -|w|/2`` on ``|theta - theta_perp| < e``.

    Offsets ``0, d_theta, 2 d_theta, ...`` up to ``max_eps`` are probed on both
    sides; each bound carries ``slack``.  ``eps_star`` is the first failing
    offset (or ``max_eps`` with ``capped=True``).  ``worst_ratio`` is the
    derivative divided by ``-|w|`` at the worst probed point before failure.
    """
    w = _vec(w)
    n = pencil.norm(w)
    t0 = theta_perp(pencil, w)
    offs = np.arange(0.0, max_eps + 0.5 * d_theta, d_theta)
    first_fail = math.inf
    worst = 1.0
    for side in (1.0, -1.0):
        centers = t0 + side * offs
        nodes = np.empty(2 * len(centers))
        nodes[0::2] = centers - h
        nodes[1::2] = centers + h
        vals = pi_profile(pencil, nodes, w)
        d = (vals[1::2] - vals[0::2]) / (2.0 * h)
        ok = (d >= -n - slack) & (d <= -0.5 * n + slack)
        bad = np.flatnonzero(~ok)
        stop = bad[0] if bad.size else len(offs)
        if bad.size:
            first_fail = min(first_fail, offs[stop])
        if stop:
            ratios = d[:stop] / -n
            worst = min(worst, float(ratios.min()))
    capped = not math.isfinite(first_fail)
    return EpsScan(tuple(map(float, w)), n, t0, float(max_eps if capped else first_fail), capped, worst)
