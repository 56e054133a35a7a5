"""Projections of cell covers in many directions: interval measure, Fourier energy, good fractions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .errors import HprojError
from .fractal import CellSet, IFSSpec, generate, similarity_dimension
from .metric import ConformalMetric
from .projection import LinePencil, _check_status

EXPERIMENT_STEP = 1e-2
ACCEPT_TOL = 1e-7
BATCH_TOL = 1e-12
BATCH_MAXIT = 60
MONOTONE_NOISE = 0.03


@dataclass
class ProjectedMeasure:
    """Disjoint sorted interval cover of ``pi_theta(K_n)`` plus the projected atoms."""

    theta: float
    intervals: np.ndarray
    total_length: float
    atoms_s: np.ndarray = field(repr=False)
    atoms_w: np.ndarray = field(repr=False)

    def reflected(self, theta: float) -> "ProjectedMeasure":
        """Image under ``s -> -s``, labelled with angle ``theta``."""
        iv = -self.intervals[::-1, ::-1]
        return ProjectedMeasure(theta, iv, self.total_length, -self.atoms_s, self.atoms_w)


@dataclass(frozen=True)
class EnergyEstimate:
    theta: float
    P: float
    dp: float
    energy: float


def theta_grid(n: int) -> np.ndarray:
    """``n`` uniform angles in ``(-pi/2, pi/2]``."""
    if n < 1:
        raise ValueError("need at least one direction")
    return -0.5 * math.pi + math.pi * np.arange(1, n + 1) / n


def canonical_angle(theta: float):
    """``(theta', sign)`` with ``theta' = theta - k pi`` in ``(-pi/2, pi/2]`` and ``sign = (-1)^k``."""
    k = math.ceil((theta - 0.5 * math.pi) / math.pi)
    t = theta - k * math.pi
    if t <= -0.5 * math.pi:
        t += math.pi
        k -= 1
    return t, (-1.0 if k % 2 else 1.0)


def merge_intervals(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Union of closed intervals as a sorted ``(m, 2)`` array of disjoint intervals."""
    if len(lo) == 0:
        return np.zeros((0, 2))
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = hi[order]
    reach = np.maximum.accumulate(hi)
    starts = np.concatenate([[0], np.flatnonzero(lo[1:] > reach[:-1]) + 1])
    ends = np.concatenate([starts[1:] - 1, [len(lo) - 1]])
    return np.column_stack([lo[starts], reach[ends]])


def union_length(intervals: np.ndarray) -> float:
    return math.fsum((intervals[:, 1] - intervals[:, 0]).tolist())


def inflation_radii(metric: ConformalMetric, cells: CellSet) -> np.ndarray:
    """g-radius bound of each cell: chart radius times the largest conformal factor on its disc."""
    return cells.radii * np.exp(metric.lam_upper_bound(cells.centers, cells.radii))


def foot_parameters(pencil: LinePencil, theta: float, points: np.ndarray) -> np.ndarray:
    """Foot parameters of many points on one line, solved in order with warm starts."""
    mk, box = pencil.metric.packed(), pencil.metric.box
    v = pencil.direction(theta)
    pts = np.ascontiguousarray(points, dtype=float)
    status, s, r, it = K.project_batch(mk, box, pencil.p[0], pencil.p[1], v[0], v[1], pts, pencil.step,
                                       pencil.line_extent, BATCH_TOL, ACCEPT_TOL, BATCH_MAXIT)
    bad = np.flatnonzero(status != K.OK) if status.size else []
    if len(bad):
        k = int(bad[0])
        try:
            _check_status(status[k], math.nan, s[k], pencil.line_extent)
        except HprojError as exc:
            raise type(exc)(f"cell {k}: {exc}") from exc
    if np.any(np.abs(s) >= pencil.line_extent):
        k = int(np.argmax(np.abs(s)))
        _check_status(K.EXTENT, math.nan, s[k], pencil.line_extent)
    return s


def project_set(pencil: LinePencil, theta: float, cells: CellSet, canonical: bool = True) -> ProjectedMeasure:
    """Outer cover of the projected cell set on ``l_theta``.

    Each cell contributes ``[s_c - rho, s_c + rho]`` with ``s_c`` the foot
    parameter of its center and ``rho`` its inflated g-radius; projection onto
    a line is nonexpansive on a Hadamard surface, so the union covers the
    projection of the whole cell.  With ``canonical`` the angle is first
    reduced to ``(-pi/2, pi/2]`` and the result reflected, so ``theta + pi``
    is exactly the mirror image of ``theta``.
    """
    if canonical:
        t, sign = canonical_angle(theta)
        if sign < 0 or t != theta:
            base = project_set(pencil, t, cells, canonical=False)
            if sign < 0:
                return base.reflected(float(theta))
            base.theta = float(theta)
            return base
    s = foot_parameters(pencil, theta, cells.centers)
    rho = inflation_radii(pencil.metric, cells)
    iv = merge_intervals(s - rho, s + rho)
    return ProjectedMeasure(float(theta), iv, union_length(iv), s, cells.weights)


@dataclass
class Spectrum:
    measures: list
    failures: list


def measure_spectrum(pencil: LinePencil, cells: CellSet, thetas) -> Spectrum:
    """Projected measure at every angle; failures are collected as ``(theta, message)``."""
    out, fails = [], []
    for t in np.asarray(thetas, dtype=float):
        try:
            out.append(project_set(pencil, float(t), cells))
        except HprojError as exc:
            fails.append((float(t), str(exc)))
    return Spectrum(out, fails)


def energy_of_atoms(s: np.ndarray, w: np.ndarray, P: float, dp: float) -> float:
    """Riemann sum of ``|mu^(p)|^2`` over ``|p| <= P`` with ``mu^(p) = (2 pi)^-1/2 sum w e^{-i s p}``."""
    if P < 1 or not 0 < dp <= 0.1:
        raise ValueError("need P >= 1 and 0 < dp <= 0.1")
    k = int(math.floor(P / dp + 1e-9))
    sq = K.fourier_energy_sum(np.ascontiguousarray(s, dtype=float), np.ascontiguousarray(w, dtype=float),
                              float(dp), k)
    # |mu^| is even in p, so the window [-P, P] is the k = 0 term plus twice the rest
    return float(dp * (sq[0] + 2.0 * np.sum(sq[1:])) / (2.0 * math.pi))


def fourier_energy(pencil: LinePencil, theta: float, cells: CellSet, P: float = 64.0, dp: float = 0.05,
                   measure: ProjectedMeasure = None) -> EnergyEstimate:
    if measure is None:
        measure = project_set(pencil, theta, cells)
    return EnergyEstimate(float(theta), float(P), float(dp), energy_of_atoms(measure.atoms_s, measure.atoms_w, P, dp))


def good_fraction(lengths, delta: float) -> float:
    lengths = np.asarray(lengths, dtype=float)
    return float(np.mean(lengths >= delta)) if lengths.size else 0.0


# -- full report ----------------------------------------------------------------


@lru_cache(maxsize=8)
def _cells(ifs: IFSSpec, depth: int) -> CellSet:
    return generate(ifs, depth)


def direction_task(task):
    """Worker entry: ``(metric, pencil kwargs, ifs, depth, thetas, P, dp)`` -> rows.

    Rows are ``(depth, theta, total_length, energy, error)``; pure and picklable.
    """
    metric, pen_kw, ifs, depth, thetas, P, dp = task
    pencil = LinePencil(metric, **pen_kw)
    cells = _cells(ifs, depth)
    rows = []
    for t in thetas:
        try:
            m = project_set(pencil, t, cells)
            e = energy_of_atoms(m.atoms_s, m.atoms_w, P, dp)
            rows.append((depth, float(t), m.total_length, e, ""))
        except HprojError as exc:
            rows.append((depth, float(t), math.nan, math.nan, str(exc)))
    return rows


@dataclass
class MarstrandReport:
    metric: str
    ifs: str
    dimension: float
    depths: list
    deltas: list
    rows: list  # (depth, theta, total_length, energy)
    good_fraction: dict  # depth -> {delta: fraction}
    failures: list
    monotone_in_depth: dict  # delta -> bool

    def lengths(self, depth: int) -> np.ndarray:
        return np.array([r[2] for r in self.rows if r[0] == depth])

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "ifs": self.ifs,
            "dimension": self.dimension,
            "depths": list(self.depths),
            "delta": list(self.deltas),
            "good_fraction": {str(d): {repr(float(k)): v for k, v in sorted(g.items())}
                              for d, g in sorted(self.good_fraction.items())},
            "max_total_length": {str(d): float(np.nanmax(self.lengths(d))) if len(self.lengths(d)) else None
                                 for d in self.depths},
            "monotone_in_depth": {repr(float(k)): v for k, v in sorted(self.monotone_in_depth.items())},
            "failures": [{"depth": r[0], "theta": r[1], "error": r[2]} for r in self.failures],
        }


def marstrand_report(metric: ConformalMetric, ifs: IFSSpec, depths, theta_count: int = 360,
                     deltas=(0.1, 0.2, 0.4), P: float = 64.0, dp: float = 0.05, pencil_kw: dict = None,
                     mapper=map, chunk: int = 30) -> MarstrandReport:
    """Run the projection experiment over all depths and angles.

    ``mapper`` distributes :func:`direction_task` over chunks of angles (the
    builtin ``map`` by default, or ``Executor.map``); rows are sorted by
    ``(depth, theta)`` afterwards so the result does not depend on scheduling.
    """
    pen_kw = {"step": EXPERIMENT_STEP}
    pen_kw.update(pencil_kw or {})
    thetas = theta_grid(theta_count)
    tasks = [(metric, pen_kw, ifs, int(d), tuple(thetas[a:a + chunk]), float(P), float(dp))
             for d in depths for a in range(0, len(thetas), chunk)]
    rows, fails = [], []
    for part in mapper(direction_task, tasks):
        for depth, t, length, e, err in part:
            if err:
                fails.append((depth, t, err))
            else:
                rows.append((depth, t, length, e))
    rows.sort(key=lambda r: (r[0], r[1]))
    fails.sort()
    gf = {}
    for d in depths:
        L = [r[2] for r in rows if r[0] == d]
        gf[int(d)] = {float(x): good_fraction(L, x) for x in deltas}
    ordered = sorted(int(d) for d in depths)
    mono = {float(x): all(gf[b][float(x)] >= gf[a][float(x)] - MONOTONE_NOISE
                          for a, b in zip(ordered, ordered[1:]))
            for x in deltas}
    return MarstrandReport(metric.ident, ifs.name, similarity_dimension(ifs), list(map(int, depths)),
                           [float(x) for x in deltas], rows, gf, fails, mono)
