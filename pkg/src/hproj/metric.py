"""Conformal metrics ``e^{2 lambda(x, y)} (dx^2 + dy^2)`` with non-positive curvature."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError, DomainError

KINDS = ("euclidean", "radial-quadratic", "polynomial")
DEFAULT_BOX = (-4.0, -4.0, 4.0, 4.0)
CURVATURE_TOL = 1e-12
_GRID = 101


def _as_matrix(coeffs) -> np.ndarray:
    C = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if C.ndim != 2 or C.size == 0:
        raise ConfigError("metric.coeffs", "polynomial coefficients must be a non-empty 2-D array")
    return C


def _padded(C: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape)
    out[: C.shape[0], : C.shape[1]] = C
    return out


@dataclass(frozen=True)
class ConformalMetric:
    """Riemannian metric ``g = e^{2 lambda}`` times the Euclidean one.

    Parameters
    ----------
    kind : {"euclidean", "radial-quadratic", "polynomial"}
        ``radial-quadratic`` is ``lambda = a (x^2 + y^2) / 2`` with ``coeffs = [a]``
        (default ``a = 1``).  ``polynomial`` takes ``coeffs[i][j]`` as the
        coefficient of ``x^i y^j``.
    coeffs : sequence
        Parameters of ``lambda`` as described above.
    domain_box : (xmin, ymin, xmax, ymax)
        Chart rectangle in which every computation must stay.

    Raises
    ------
    ConfigError
        If the kind is unknown or the Laplacian of ``lambda`` is below
        ``-1e-12`` somewhere on a 101x101 grid over the box (positive curvature).
    """

    kind: str = "euclidean"
    coeffs: tuple = ()
    domain_box: tuple = DEFAULT_BOX
    _packed: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("metric.kind", f"unknown metric kind {self.kind!r}")
        box = tuple(float(b) for b in self.domain_box)
        if len(box) != 4 or not (box[0] < box[2] and box[1] < box[3]) or not np.all(np.isfinite(box)):
            raise ConfigError("metric.domain_box", "expected [xmin, ymin, xmax, ymax] with xmin<xmax, ymin<ymax")
        object.__setattr__(self, "domain_box", box)
        dummy = np.zeros((1, 1))
        if self.kind == "euclidean":
            coeffs = ()
            packed = (0, 0.0, dummy, dummy, dummy, dummy)
        elif self.kind == "radial-quadratic":
            coeffs = tuple(float(c) for c in (self.coeffs or (1.0,)))
            if len(coeffs) != 1 or not np.isfinite(coeffs[0]) or coeffs[0] < 0:
                raise ConfigError("metric.coeffs", "radial-quadratic takes one non-negative coefficient [a]")
            packed = (1, coeffs[0], dummy, dummy, dummy, dummy)
        else:
            C = _as_matrix(self.coeffs)
            if not np.all(np.isfinite(C)):
                raise ConfigError("metric.coeffs", "coefficients must be finite")
            coeffs = tuple(tuple(float(c) for c in row) for row in C)
            shape = C.shape
            Cx = _padded(P.polyder(C, axis=0), shape) if C.shape[0] > 1 else np.zeros(shape)
            Cy = _padded(P.polyder(C, axis=1), shape) if C.shape[1] > 1 else np.zeros(shape)
            Cxx = P.polyder(C, 2, axis=0) if C.shape[0] > 2 else np.zeros((1, 1))
            Cyy = P.polyder(C, 2, axis=1) if C.shape[1] > 2 else np.zeros((1, 1))
            CL = _padded(Cxx, shape) + _padded(Cyy, shape)
            packed = (2, 0.0, np.ascontiguousarray(_padded(C, shape)), np.ascontiguousarray(Cx),
                      np.ascontiguousarray(Cy), np.ascontiguousarray(CL))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "_packed", packed)
        self._validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def euclidean(cls, domain_box=DEFAULT_BOX) -> "ConformalMetric":
        return cls("euclidean", (), domain_box)

    @classmethod
    def radial_quadratic(cls, a: float = 1.0, domain_box=DEFAULT_BOX) -> "ConformalMetric":
        return cls("radial-quadratic", (a,), domain_box)

    @classmethod
    def from_dict(cls, spec: dict) -> "ConformalMetric":
        """Build from the JSON form ``{"kind", "coeffs", "domain_box"}``."""
        if not isinstance(spec, dict):
            raise ConfigError("metric", "expected a JSON object")
        unknown = set(spec) - {"kind", "coeffs", "domain_box"}
        if unknown:
            raise ConfigError(f"metric.{sorted(unknown)[0]}", "unknown key")
        try:
            coeffs = tuple(spec.get("coeffs", ()) or ())
            box = tuple(float(b) for b in spec.get("domain_box", DEFAULT_BOX))
        except (TypeError, ValueError) as exc:
            raise ConfigError("metric", f"bad coefficient or box list: {exc}") from exc
        try:
            return cls(spec.get("kind", "euclidean"), coeffs, box)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("metric.coeffs", str(exc)) from exc

    def to_dict(self) -> dict:
        coeffs = [list(r) for r in self.coeffs] if self.kind == "polynomial" else list(self.coeffs)
        return {"kind": self.kind, "coeffs": coeffs, "domain_box": list(self.domain_box)}

    @property
    def ident(self) -> str:
        if self.kind == "euclidean":
            return "euclidean"
        if self.kind == "radial-quadratic":
            return f"radial-quadratic(a={self.coeffs[0]:g})"
        return "polynomial" + repr(self.coeffs)

    def packed(self) -> tuple:
        """Arguments expected by the compiled kernels."""
        return self._packed

    @property
    def box(self) -> np.ndarray:
        return np.array(self.domain_box)

    @property
    def is_flat(self) -> bool:
        if self.kind == "euclidean":
            return True
        if self.kind == "radial-quadratic":
            return self.coeffs[0] == 0.0
        return False

    # -- evaluation ---------------------------------------------------------

    def check_point(self, at) -> np.ndarray:
        pt = np.asarray(at, dtype=float)
        if pt.shape != (2,) or not np.all(np.isfinite(pt)):
            raise DomainError(f"not a finite plane point: {at!r}")
        x0, y0, x1, y1 = self.domain_box
        if not (x0 <= pt[0] <= x1 and y0 <= pt[1] <= y1):
            raise DomainError(f"point {tuple(pt)} outside domain box {self.domain_box}")
        return pt

    def lam(self, x, y):
        """``lambda`` evaluated elementwise."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "euclidean":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "radial-quadratic":
            return 0.5 * self.coeffs[0] * (x * x + y * y)
        return P.polyval2d(x, y, self._packed[2])

    def grad_lam(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if self.kind == "euclidean":
            return np.zeros(shape), np.zeros(shape)
        if self.kind == "radial-quadratic":
            a = self.coeffs[0]
            return np.broadcast_to(a * x, shape).copy(), np.broadcast_to(a * y, shape).copy()
        return P.polyval2d(x, y, self._packed[3]), P.polyval2d(x, y, self._packed[4])

    def laplacian_lam(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if self.kind == "euclidean":
            return np.zeros(shape)
        if self.kind == "radial-quadratic":
            return np.full(shape, 2.0 * self.coeffs[0])
        return P.polyval2d(x, y, self._packed[5])

    def conformal_factor(self, at) -> float:
        """``e^{lambda}``: g-length of a chart-unit vector at ``at``."""
        pt = self.check_point(at)
        return float(np.exp(self.lam(pt[0], pt[1])))

    def grid(self, n: int = _GRID):
        x0, y0, x1, y1 = self.domain_box
        return np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n), indexing="ij")

    def _validate(self):
        X, Y = self.grid()
        with np.errstate(all="ignore"):
            L = self.lam(X, Y)
            gx, gy = self.grad_lam(X, Y)
            D = self.laplacian_lam(X, Y)
        if not all(np.all(np.isfinite(a)) for a in (L, gx, gy, D)):
            raise ConfigError("metric.coeffs", "lambda or its derivatives are not finite on the domain box")
        if np.min(D) < -CURVATURE_TOL:
            i = np.unravel_index(np.argmin(D), D.shape)
            raise ConfigError(
                "metric.coeffs",
                f"Laplacian of lambda is {D[i]:.3g} < 0 at ({X[i]:.3g}, {Y[i]:.3g}); curvature would be positive",
            )

    def lam_upper_bound(self, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
        """Upper bound of ``lambda`` over each disc ``B(center, radius)``.

        ``lambda`` is subharmonic, so its maximum over a disc sits on the
        boundary circle; for polynomial metrics the circle is sampled and a
        first-order gap term is added.
        """
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        radii = np.asarray(radii, dtype=float).reshape(-1)
        if self.kind == "euclidean":
            return np.zeros(len(radii))
        if self.kind == "radial-quadratic":
            far = np.hypot(centers[:, 0], centers[:, 1]) + radii
            return 0.5 * self.coeffs[0] * far * far
        m = 64
        ang = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
        xs = centers[:, :1] + radii[:, None] * np.cos(ang)
        ys = centers[:, 1:] + radii[:, None] * np.sin(ang)
        gx, gy = self.grad_lam(xs, ys)
        pad = np.max(np.hypot(gx, gy), axis=1) * radii * (np.pi / m)
        return np.max(self.lam(xs, ys), axis=1) + pad


def metric_inner(metric: ConformalMetric, at, u: Sequence[float], v: Sequence[float]) -> float:
    """``g_at(u, v) = e^{2 lambda(at)} (u1 v1 + u2 v2)``."""
    pt = metric.check_point(at)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.exp(2.0 * metric.lam(pt[0], pt[1])) * (u[0] * v[0] + u[1] * v[1]))


def g_norm(metric: ConformalMetric, at, u) -> float:
    return float(np.sqrt(metric_inner(metric, at, u, u)))


def curvature(metric: ConformalMetric, at) -> float:
    """Gaussian curvature ``K = -e^{-2 lambda} Laplacian(lambda)``."""
    pt = metric.check_point(at)
    return float(-np.exp(-2.0 * metric.lam(pt[0], pt[1])) * metric.laplacian_lam(pt[0], pt[1]))


def christoffel(metric: ConformalMetric, at) -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` (upper index first).

    For a conformal metric ``G^k_ij = d^k_i l_j + d^k_j l_i - d_ij l_k`` with
    ``l = grad lambda``.
    """
    pt = metric.check_point(at)
    gx, gy = metric.grad_lam(pt[0], pt[1])
    grad = np.array([float(gx), float(gy)])
    eye = np.eye(2)
    G = (np.einsum("ki,j->kij", eye, grad) + np.einsum("kj,i->kij", eye, grad)
         - np.einsum("ij,k->kij", eye, grad))
    return G
