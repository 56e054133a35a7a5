"""Run configuration: JSON document + flag overrides -> validated :class:`RunConfig`."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .fractal import IFSSpec
from .metric import ConformalMetric

DEFAULTS = {
    "metric": {"kind": "euclidean"},
    "pencil": {"p": [0.0, 0.0], "e1": None, "e2": None, "line_extent": 8.0, "step": None},
    "ifs": "theorem",
    "depths": [5, 6, 7],
    "theta_count": 360,
    "delta": [0.1, 0.2, 0.4],
    "P": 64.0,
    "dp": 0.05,
    "seed": 1,
    "svg": False,
}

HELP = """config keys (JSON object, all optional):
  metric       {"kind": euclidean|radial-quadratic|polynomial, "coeffs": [...], "domain_box": [x0,y0,x1,y1]}
               default euclidean on [-4,4]^2
  pencil       {"p": [x,y], "e1": [..], "e2": [..], "line_extent": 8, "step": h}
               default origin, normalized chart axes, extent 8, step 1e-3 (1e-2 for marstrand)
  ifs          "theorem" | "control" | "full-square" | path to an IFS JSON file; default theorem
  depths       list of IFS depths, default [5, 6, 7]
  theta_count  number of directions in (-pi/2, pi/2], integer >= 36, default 360
  delta        good-fraction thresholds (> 0), default [0.1, 0.2, 0.4]
  P            Fourier window, >= 1, default 64
  dp           frequency step, in (0, 0.1], default 0.05
  seed         integer, default 1
  svg          write spectrum.svg, default false
"""


@dataclass
class RunConfig:
    metric: ConformalMetric
    pencil: dict
    ifs: IFSSpec
    ifs_source: str
    depths: list
    theta_count: int
    delta: list
    P: float
    dp: float
    seed: int
    svg: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def pencil_kwargs(self, default_step: float) -> dict:
        kw = {"p": tuple(self.pencil["p"]), "line_extent": float(self.pencil["line_extent"]),
              "step": float(self.pencil["step"] or default_step)}
        if self.pencil.get("e1") is not None:
            kw["e1"] = tuple(self.pencil["e1"])
        if self.pencil.get("e2") is not None:
            kw["e2"] = tuple(self.pencil["e2"])
        return kw


def _number(name, v, lo=-math.inf, hi=math.inf, lo_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
        raise ConfigError(name, f"expected {'an integer' if integer else 'a number'}, got {v!r}")
    if not math.isfinite(v) or v < lo or v > hi or (lo_open and v == lo):
        raise ConfigError(name, f"value {v!r} out of range")
    return v


def _vector(name, v, n=2):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        raise ConfigError(name, f"expected a list of {n} numbers")
    return [float(_number(f"{name}[{k}]", x)) for k, x in enumerate(v)]


def parse_config(source=None, overrides: dict = None, base_dir=None) -> RunConfig:
    """Validate a config given as a path, a JSON string, a dict or ``None`` (all defaults).

    ``overrides`` are applied on top (flag values).  Unknown keys, malformed
    JSON, out-of-range values and missing files raise :class:`ConfigError`
    carrying the field path.
    """
    if source is None:
        doc = {}
    elif isinstance(source, dict):
        doc = dict(source)
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {source}")
        base_dir = base_dir or path.parent
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")
    doc.update(overrides or {})
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    cfg = {k: doc.get(k, v) for k, v in DEFAULTS.items()}

    metric = ConformalMetric.from_dict(cfg["metric"])

    pen = cfg["pencil"]
    if not isinstance(pen, dict):
        raise ConfigError("pencil", "expected a JSON object")
    bad = set(pen) - set(DEFAULTS["pencil"])
    if bad:
        raise ConfigError(f"pencil.{sorted(bad)[0]}", "unknown key")
    pen = {**DEFAULTS["pencil"], **pen}
    pen["p"] = _vector("pencil.p", pen["p"])
    for k in ("e1", "e2"):
        if pen[k] is not None:
            pen[k] = _vector(f"pencil.{k}", pen[k])
    pen["line_extent"] = float(_number("pencil.line_extent", pen["line_extent"], 0.0, lo_open=True))
    if pen["step"] is not None:
        pen["step"] = float(_number("pencil.step", pen["step"], 0.0, 0.1, lo_open=True))

    src = cfg["ifs"]
    if not isinstance(src, str):
        raise ConfigError("ifs", "expected a builtin name or a file path")
    if src in ("theorem", "control", "full-square"):
        ifs = IFSSpec.builtin(src)
    else:
        path = Path(src)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        ifs = IFSSpec.load(path)

    depths = cfg["depths"]
    if not isinstance(depths, list) or not depths:
        raise ConfigError("depths", "expected a non-empty list of integers")
    depths = [int(_number(f"depths[{k}]", d, 0, ifs.depth_cap, integer=True)) for k, d in enumerate(depths)]
    if len(set(depths)) != len(depths):
        raise ConfigError("depths", "depths must be distinct")

    theta_count = int(_number("theta_count", cfg["theta_count"], 36, 100000, integer=True))
    delta = cfg["delta"]
    if not isinstance(delta, list) or not delta:
        raise ConfigError("delta", "expected a non-empty list of thresholds")
    delta = [float(_number(f"delta[{k}]", x, 0.0, lo_open=True)) for k, x in enumerate(delta)]
    P = float(_number("P", cfg["P"], 1.0))
    dp = float(_number("dp", cfg["dp"], 0.0, 0.1, lo_open=True))
    seed = int(_number("seed", cfg["seed"], 0, integer=True))
    if not isinstance(cfg["svg"], bool):
        raise ConfigError("svg", "expected true or false")
    return RunConfig(metric, pen, ifs, src, depths, theta_count, delta, P, dp, seed, cfg["svg"], cfg)


def load_metric(path) -> ConformalMetric:
    """Metric from a JSON file (``None`` gives the euclidean metric)."""
    if path is None:
        return ConformalMetric.euclidean()
    p = Path(path)
    if not p.is_file():
        raise ConfigError("metric", f"file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("metric", f"malformed JSON: {exc}") from exc
    if isinstance(data, dict) and "metric" in data and "kind" not in data:
        data = data["metric"]
    return ConformalMetric.from_dict(data)
