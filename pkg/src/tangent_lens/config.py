"""Run configuration: a single JSON document describing an IFS, weights, a
zoom point and the scales to look at.  See README for the schema."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from tangent_lens.affine import AffineMap2, Address, IFSSystem, snap_to_attractor
from tangent_lens.symbolic import BernoulliWeights, DomainError

FIXTURES = ("example-4-2", "example-4-3", "example-4-5", "carpet-cor-1-2")


class ConfigError(DomainError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


@dataclass
class RunConfig:
    name: str
    maps: list                       # [(matrix 2x2, translation 2)]
    weights: list                    # numbers or "a/b" strings, as written
    point: dict                      # {"prefix": [...], "tail": k} or {"coordinates": [x, y]}
    scales: list
    K: int = 3
    samples: int = 2000
    seed: int = 0
    min_scale: float | None = None
    line_region: list | None = None
    extra: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.maps)

    def ifs(self) -> IFSSystem:
        return IFSSystem([AffineMap2(np.array(a, float), np.array(b, float))
                          for a, b in self.maps], self.name)

    def bernoulli(self) -> BernoulliWeights:
        return BernoulliWeights(tuple(self.weights))

    def address(self, ifs: IFSSystem) -> tuple[Address, float]:
        """The zoom address and the snap distance (0 for symbolic points)."""
        if "coordinates" in self.point:
            return snap_to_attractor(ifs, self.point["coordinates"])
        return Address(tuple(self.point.get("prefix", [])), int(self.point["tail"])), 0.0

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "maps": [{"matrix": [list(r) for r in a], "translation": list(b)} for a, b in self.maps],
            "weights": list(self.weights),
            "point": self.point,
            "scales": list(self.scales),
            "K": self.K,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.min_scale is not None:
            d["min_scale"] = self.min_scale
        if self.line_region is not None:
            d["line_region"] = self.line_region
        d.update(self.extra)
        return d


def serialize(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def _num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _int(v, path: str, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be >= {lo}")
    return v


_KNOWN = {"name", "maps", "weights", "point", "scales", "K", "samples", "seed",
          "min_scale", "line_region"}


def parse_config(document) -> RunConfig:
    """Validate a config given as JSON text, bytes or an already-parsed dict."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"malformed JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ConfigError("", "top level must be an object")
    for key in ("maps", "weights", "point", "scales"):
        if key not in doc:
            raise ConfigError(key, "missing")

    maps_in = doc["maps"]
    if not isinstance(maps_in, list) or len(maps_in) < 2:
        raise ConfigError("maps", "need a list of at least two maps")
    maps = []
    for k, mp in enumerate(maps_in):
        p = f"maps[{k}]"
        if not isinstance(mp, dict) or "matrix" not in mp or "translation" not in mp:
            raise ConfigError(p, "need 'matrix' and 'translation'")
        mat = mp["matrix"]
        if not isinstance(mat, list) or len(mat) != 2 or any(
                not isinstance(r, list) or len(r) != 2 for r in mat):
            raise ConfigError(p + ".matrix", "must be a 2x2 nested list")
        mat = [[_num(mat[i][j], f"{p}.matrix[{i}][{j}]") for j in range(2)] for i in range(2)]
        tr = mp["translation"]
        if not isinstance(tr, list) or len(tr) != 2:
            raise ConfigError(p + ".translation", "must have two entries")
        tr = [_num(tr[i], f"{p}.translation[{i}]") for i in range(2)]
        try:
            AffineMap2(np.array(mat, float), np.array(tr, float))
        except DomainError as exc:
            raise ConfigError(p, str(exc)) from None
        maps.append((mat, tr))

    w = doc["weights"]
    if not isinstance(w, list) or len(w) != len(maps):
        raise ConfigError("weights", f"need {len(maps)} entries")
    for k, v in enumerate(w):
        if isinstance(v, str):
            try:
                Fraction(v)
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"weights[{k}]", f"not a number: {v!r}") from None
        else:
            _num(v, f"weights[{k}]")
    try:
        BernoulliWeights(tuple(w))
    except DomainError as exc:
        raise ConfigError("weights", str(exc)) from None

    pt = doc["point"]
    if not isinstance(pt, dict):
        raise ConfigError("point", "must be an object")
    if "coordinates" in pt:
        c = pt["coordinates"]
        if not isinstance(c, list) or len(c) != 2:
            raise ConfigError("point.coordinates", "need two numbers")
        for i, v in enumerate(c):
            _num(v, f"point.coordinates[{i}]")
    elif "tail" in pt:
        _int(pt["tail"], "point.tail", 1)
        if pt["tail"] > len(maps):
            raise ConfigError("point.tail", "letter out of range")
        pre = pt.get("prefix", [])
        if not isinstance(pre, list):
            raise ConfigError("point.prefix", "must be a list")
        for i, v in enumerate(pre):
            _int(v, f"point.prefix[{i}]", 1)
            if v > len(maps):
                raise ConfigError(f"point.prefix[{i}]", "letter out of range")
    else:
        raise ConfigError("point", "need 'coordinates' or 'prefix'/'tail'")

    sc = doc["scales"]
    if not isinstance(sc, list) or not sc:
        raise ConfigError("scales", "need a non-empty list")
    for i, v in enumerate(sc):
        if _num(v, f"scales[{i}]") <= 0:
            raise ConfigError(f"scales[{i}]", "must be positive")
        if i and v >= sc[i - 1]:
            raise ConfigError(f"scales[{i}]", "scales must be strictly decreasing")

    K = _int(doc.get("K", 3), "K", 0)
    samples = _int(doc.get("samples", 2000), "samples", 1)
    seed = _int(doc.get("seed", 0), "seed", 0)
    min_scale = doc.get("min_scale")
    if min_scale is not None and _num(min_scale, "min_scale") <= 0:
        raise ConfigError("min_scale", "must be positive")
    region = doc.get("line_region")
    if region is not None:
        if not isinstance(region, list) or len(region) != 2 or any(
                not isinstance(r, list) or len(r) != 2 for r in region):
            raise ConfigError("line_region", "need [[x0, y0], [x1, y1]]")
        for i in range(2):
            for j in range(2):
                _num(region[i][j], f"line_region[{i}][{j}]")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ConfigError("name", "must be a string")
    extra = {k: v for k, v in doc.items() if k not in _KNOWN}
    return RunConfig(name, maps, list(w), pt, list(sc), K, samples, seed, min_scale,
                     region, extra)


def load_config(ref: str) -> tuple[RunConfig, bytes]:
    """Read a config from a path or a bundled fixture name; returns the raw bytes too."""
    p = Path(ref)
    if p.is_file():
        raw = p.read_bytes()
    elif ref in FIXTURES:
        raw = resources.files("tangent_lens.fixtures").joinpath(ref + ".json").read_bytes()
    else:
        raise ConfigError("", f"no such config file or fixture: {ref}")
    return parse_config(raw), raw
