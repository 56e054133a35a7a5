"""Self-similar sets from planar IFS, their finite-depth cell covers and dimension estimates."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from shapely.affinity import affine_transform
from shapely.geometry import box as shp_box

from .errors import BudgetError, ConfigError, FitError

UNIT_CENTER = (0.5, 0.5)
UNIT_HALF_DIAG = math.sqrt(2.0) / 2.0
MAX_CELLS = 10 ** 7
OSC_TOL = 1e-12


@dataclass(frozen=True)
class Similarity:
    """``x -> ratio * R(angle) x + translation``."""

    ratio: float
    angle: float = 0.0
    translation: tuple = (0.0, 0.0)

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return self.ratio * np.array([[c, -s], [s, c]])

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.matrix.T + np.asarray(self.translation)


@dataclass(frozen=True)
class IFSSpec:
    """A list of contracting similarities satisfying the open set condition on the unit square."""

    maps: tuple
    depth_cap: int = 12
    name: str = "custom"

    def __post_init__(self):
        maps = tuple(m if isinstance(m, Similarity) else Similarity(*m) for m in self.maps)
        object.__setattr__(self, "maps", maps)
        if not maps:
            raise ConfigError("ifs.maps", "at least one map is required")
        for k, m in enumerate(maps):
            if not 0.0 < m.ratio < 1.0:
                raise ConfigError(f"ifs.maps[{k}].ratio", "ratio must lie in (0, 1)")
        check_open_set_condition(maps)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])

    @classmethod
    def theorem(cls) -> "IFSSpec":
        """Four corners of the unit square, ratio 1/3 (dimension log 4 / log 3)."""
        r = 1.0 / 3.0
        return cls(tuple(Similarity(r, 0.0, (tx, ty)) for tx in (0.0, 2 / 3) for ty in (0.0, 2 / 3)),
                   name="theorem")

    @classmethod
    def control(cls) -> "IFSSpec":
        """Two maps on the diagonal, ratio 1/3 (dimension log 2 / log 3)."""
        r = 1.0 / 3.0
        return cls((Similarity(r, 0.0, (0.0, 0.0)), Similarity(r, 0.0, (2 / 3, 2 / 3))), name="control")

    @classmethod
    def full_square(cls) -> "IFSSpec":
        """Four quarters of the unit square (the square itself, dimension 2)."""
        return cls(tuple(Similarity(0.5, 0.0, (tx, ty)) for tx in (0.0, 0.5) for ty in (0.0, 0.5)),
                   name="full-square")

    @classmethod
    def from_dict(cls, spec: dict, name: str = "custom") -> "IFSSpec":
        if not isinstance(spec, dict) or "maps" not in spec:
            raise ConfigError("ifs", "expected an object with a 'maps' list")
        unknown = set(spec) - {"maps", "depth_cap", "name"}
        if unknown:
            raise ConfigError(f"ifs.{sorted(unknown)[0]}", "unknown key")
        maps = []
        for k, m in enumerate(spec["maps"]):
            try:
                maps.append(Similarity(float(m["ratio"]), float(m.get("angle", 0.0)),
                                       tuple(float(t) for t in m.get("translation", (0.0, 0.0)))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"ifs.maps[{k}]", f"bad map: {exc}") from exc
        return cls(tuple(maps), int(spec.get("depth_cap", 12)), spec.get("name", name))

    @classmethod
    def load(cls, path) -> "IFSSpec":
        p = Path(path)
        if not p.is_file():
            raise ConfigError("ifs", f"file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("ifs", f"malformed JSON: {exc}") from exc
        return cls.from_dict(data, name=p.stem)

    @classmethod
    def builtin(cls, name: str) -> "IFSSpec":
        table = {"theorem": cls.theorem, "control": cls.control, "full-square": cls.full_square}
        if name not in table:
            raise ConfigError("ifs", f"unknown builtin IFS {name!r}")
        return table[name]()


def check_open_set_condition(maps) -> None:
    """Images of the open unit square must be pairwise disjoint and inside the square."""
    sq = shp_box(0.0, 0.0, 1.0, 1.0)
    images = []
    for m in maps:
        A = m.matrix
        images.append(affine_transform(sq, [A[0, 0], A[0, 1], A[1, 0], A[1, 1], *m.translation]))
    for k, im in enumerate(images):
        if im.difference(sq).area > OSC_TOL:
            raise ConfigError(f"ifs.maps[{k}]", "image of the unit square leaves the square")
        for j in range(k):
            if im.intersection(images[j]).area > OSC_TOL:
                raise ConfigError(f"ifs.maps[{k}]", f"image overlaps the image of map {j}")


@dataclass
class CellSet:
    """Level-``depth`` images of the unit square: centers, half-diameters, uniform weights.

    ``scales`` holds the product of ratios along each word.
    """

    depth: int
    centers: np.ndarray
    radii: np.ndarray
    scales: np.ndarray
    words: list = field(repr=False)
    name: str = ""

    @property
    def weights(self) -> np.ndarray:
        n = len(self.radii)
        return np.full(n, 1.0 / n)

    def __len__(self):
        return len(self.radii)

    def masses(self, d: float) -> np.ndarray:
        """Cell masses ``scale^d``, the natural discretization of ``m_d``."""
        return self.scales ** d

    def rows(self):
        w = self.weights
        for k in range(len(self)):
            yield self.words[k], self.centers[k, 0], self.centers[k, 1], self.radii[k], w[k]


def generate(ifs: IFSSpec, depth: int) -> CellSet:
    """All ``depth``-fold compositions applied to the unit-square center, in lexicographic word order.

    Raises
    ------
    BudgetError
        If ``depth`` exceeds the cap or the cell count exceeds 10^7.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth > ifs.depth_cap:
        raise BudgetError(f"depth {depth} exceeds the IFS depth cap {ifs.depth_cap}")
    k = len(ifs.maps)
    if k ** depth > MAX_CELLS:
        raise BudgetError(f"{k}^{depth} cells exceed the budget of {MAX_CELLS}")
    pts = np.array([UNIT_CENTER])
    scales = np.ones(1)
    words = [""]
    ratios = ifs.ratios
    for _ in range(depth):
        # word i.w means f_i applied after f_w, so the new first letter is outermost
        pts = np.concatenate([m(pts) for m in ifs.maps])
        scales = np.concatenate([r * scales for r in ratios])
        words = [str(i) + w for i in range(k) for w in words] if k <= 10 else \
            [f"{i}." + w for i in range(k) for w in words]
    return CellSet(depth, pts, scales * UNIT_HALF_DIAG, scales, words, ifs.name)


def similarity_dimension(ifs: IFSSpec, tol: float = 1e-12) -> float:
    """Root ``d`` of ``sum r_i^d = 1`` by bisection."""
    r = ifs.ratios
    f = lambda d: float(np.sum(r ** d)) - 1.0
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        hi *= 2.0
    if f(lo) <= 0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def box_counts(cells: CellSet, scales) -> np.ndarray:
    """Number of grid boxes of side ``delta`` containing at least one cell center."""
    out = []
    for d in scales:
        ij = np.floor(cells.centers / d).astype(np.int64)
        out.append(len(np.unique(ij, axis=0)))
    return np.array(out)


def box_dimension_estimate(cells: CellSet, scales) -> tuple:
    """Least-squares slope of ``log N(delta)`` against ``log(1/delta)`` and its ``r^2``.

    Raises
    ------
    FitError
        Fewer than two distinct scales.
    """
    scales = np.asarray(scales, dtype=float)
    x = np.log(1.0 / scales)
    if len(scales) < 2 or np.ptp(x) == 0:
        raise FitError("box-counting fit needs at least two distinct scales")
    y = np.log(box_counts(cells, scales))
    slope, icpt = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(r2)


@dataclass(frozen=True)
class FrostmanEstimate:
    C: float
    center: tuple
    radius: float
    probes: int


def frostman_check(cells: CellSet, d: float, n_random: int = 256, n_radii: int = 24,
                   max_centers: int = 2048, seed: int = 0) -> FrostmanEstimate:
    """Max of ``mu(B_r(x)) / r^d`` over probe centers and radii ``r`` in ``[min radius, 1]``.

    Cells carry mass ``scale^d``; a cell counts towards ``B_r(x)`` when its
    center does.  Probe centers are up to ``max_centers`` evenly spaced cell
    centers plus ``n_random`` uniform points of the unit square.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    rng = np.random.default_rng(seed)
    n = len(cells)
    idx = np.unique(np.linspace(0, n - 1, min(n, max_centers)).astype(int))
    probes = np.concatenate([cells.centers[idx], rng.uniform(0.0, 1.0, (n_random, 2))])
    rmin = float(cells.radii.min())
    radii = np.geomspace(rmin, 1.0, n_radii) if rmin < 1.0 else np.array([rmin])
    mass = cells.masses(d)
    tree = cKDTree(cells.centers)
    uniform = np.ptp(mass) == 0
    best = (-math.inf, None, None)
    for r in radii:
        if uniform:
            counts = tree.query_ball_point(probes, r, return_length=True)
            mu = counts * mass[0]
        else:
            mu = np.array([mass[ix].sum() for ix in tree.query_ball_point(probes, r)])
        ratio = mu / r ** d
        k = int(np.argmax(ratio))
        if ratio[k] > best[0]:
            best = (float(ratio[k]), tuple(map(float, probes[k])), float(r))
    return FrostmanEstimate(best[0], best[1], best[2], len(probes) * len(radii))
