"""Experiment configuration: TOML or JSON in, validated dataclass out.

Validation happens before any computation; every error names the offending
key path, e.g. ``regions.Y: overlaps X at sites [2]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..fock import DENSITY_DIM_CAP, PURE_DIM_CAP
from ..lattice import MAX_SITES

KINDS = ("simulate", "ot", "bound-check", "protocol", "oracle")
CHECKS = ("unified", "theorem1", "theorem2", "velocity")
PROTOCOLS = ("sequential_mott", "supersonic", "lemma")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    seeds: list[int] = field(default_factory=lambda: [0])
    lattice: dict = field(default_factory=lambda: {"dimension": 1, "extents": [5]})
    model: dict = field(default_factory=dict)
    regions: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    checks: list[str] = field(default_factory=list)
    protocol: dict = field(default_factory=dict)
    ot: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    return tomllib.loads(text.decode())


def _int(d: dict, key: str, path: str, lo: int | None = None, default=None) -> int:
    v = d.get(key, default)
    if v is None:
        raise ConfigError(f"{path}.{key}", "required")
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}", f"must be >= {lo}, got {v}")
    return v


def _float(d: dict, key: str, path: str, default=None, positive: bool = False) -> float:
    v = d.get(key, default)
    if v is None:
        raise ConfigError(f"{path}.{key}", "required")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {v}")
    return float(v)


def _validate_lattice(d: dict) -> dict:
    D = _int(d, "dimension", "lattice", 1, default=1)
    ext = d.get("extents")
    if not isinstance(ext, list) or len(ext) != D or not all(isinstance(e, int) and e >= 1 for e in ext):
        raise ConfigError("lattice.extents", f"expected {D} positive integers, got {ext!r}")
    if math.prod(ext) > MAX_SITES:
        raise ConfigError("lattice.extents", f"{math.prod(ext)} sites exceeds the cap {MAX_SITES}")
    return {"dimension": D, "extents": list(ext)}


def _validate_regions(d: dict, n_sites: int, required: bool) -> dict:
    if not d:
        if required:
            raise ConfigError("regions", "X and Y are required for this experiment")
        return {}
    out = {}
    for key in ("X", "Y"):
        r = d.get(key)
        if not isinstance(r, list) or not r or not all(isinstance(i, int) for i in r):
            raise ConfigError(f"regions.{key}", f"expected a nonempty list of site indices, got {r!r}")
        bad = [i for i in r if not 0 <= i < n_sites]
        if bad:
            raise ConfigError(f"regions.{key}", f"sites {bad} outside 0..{n_sites - 1}")
        out[key] = sorted(set(r))
    both = sorted(set(out["X"]) & set(out["Y"]))
    if both:
        raise ConfigError("regions.Y", f"overlaps X at sites {both}")
    for key in ("N0", "dN0"):
        if key in d:
            out[key] = _int(d, key, "regions", 0 if key == "N0" else 1)
    return out


def _validate_bounds(d: dict, D: int, alpha: float | None) -> dict:
    out = dict(d)
    if alpha is not None and not alpha > D:
        raise ConfigError("model.alpha", f"must exceed the dimension D={D}, got {alpha}")
    if "eps" in d:
        eps = _float(d, "eps", "bounds")
        if alpha is not None and not 0 < eps < alpha - D:
            raise ConfigError("bounds.eps", f"must lie in (0, alpha - D) = (0, {alpha - D})")
    if "gamma" in d:
        _float(d, "gamma", "bounds", positive=True)
    if "mu" in d:
        mu = _float(d, "mu", "bounds")
        if not 0 < mu <= 1:
            raise ConfigError("bounds.mu", "must lie in (0, 1]")
    return out


def validate(raw: dict) -> ExperimentConfig:
    """Check every section against the preconditions of the modules it feeds."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError("kind", f"expected one of {KINDS}, got {kind!r}")
    seed = _int(raw, "seed", "<root>", 0, default=0)
    seeds = raw.get("seeds", [seed])
    if isinstance(seeds, int) and not isinstance(seeds, bool):
        seeds = list(range(seed, seed + seeds))
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("seeds", f"expected a count or a list of nonnegative integers, got {seeds!r}")
    lattice = _validate_lattice(raw.get("lattice", {"dimension": 1, "extents": [5]}))
    n_sites = math.prod(lattice["extents"])
    model = dict(raw.get("model", {}))
    alpha = None
    if model:
        N = _int(model, "N", "model", 1)
        dim = math.comb(n_sites + N - 1, N)
        if dim > PURE_DIM_CAP:
            raise ConfigError("model.N", f"sector dimension {dim} exceeds the cap {PURE_DIM_CAP}")
        if model.get("density") and dim > DENSITY_DIM_CAP:
            raise ConfigError("model.density", f"density matrices are capped at dim {DENSITY_DIM_CAP}")
        _float(model, "J", "model", default=1.0, positive=True)
        alpha = _float(model, "alpha", "model", default=3.0)
        _float(model, "horizon", "model", default=1.0, positive=True)
        _int(model, "stages", "model", 1, default=3)
        _float(model, "U_max", "model", default=1.0)
    checks = raw.get("checks", ["unified"] if kind == "bound-check" else [])
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ConfigError("checks", f"expected a subset of {CHECKS}, got {checks!r}")
    if kind in ("simulate", "bound-check") and not model:
        raise ConfigError("model", f"required for kind {kind!r}")
    regions = _validate_regions(raw.get("regions", {}), n_sites,
                                required=kind == "bound-check" and any(c in ("theorem1", "theorem2") for c in checks))
    if "theorem2" in checks and ("N0" not in regions or "dN0" not in regions):
        raise ConfigError("regions", "theorem2 needs N0 and dN0")
    bounds = _validate_bounds(raw.get("bounds", {}), lattice["dimension"], alpha)
    protocol = dict(raw.get("protocol", {}))
    if kind == "protocol":
        name = protocol.get("name")
        if name not in PROTOCOLS:
            raise ConfigError("protocol.name", f"expected one of {PROTOCOLS}, got {name!r}")
        if name == "lemma":
            lemma = _int(protocol, "lemma", "protocol", 1)
            if lemma not in (1, 2, 3, 4):
                raise ConfigError("protocol.lemma", "expected 1, 2, 3 or 4")
            M = _int(protocol, "M", "protocol", 3)
            if lemma in (2, 4):
                k = _int(protocol, "k", "protocol", 1)
                if k > M:
                    raise ConfigError("protocol.k", f"must lie in 1..{M}")
        else:
            _int(protocol, "L", "protocol", 3 if name == "supersonic" else 2)
            if name == "sequential_mott":
                _int(protocol, "N", "protocol", 3)
            if name == "supersonic" and protocol.get("variant", "three_stage") not in ("three_stage", "stepwise"):
                raise ConfigError("protocol.variant", "expected 'three_stage' or 'stepwise'")
        _float(protocol, "J", "protocol", default=1.0, positive=True)
        _float(protocol, "U", "protocol", default=1e5, positive=True)
        _int(protocol, "samples", "protocol", 2, default=16)
    ot = dict(raw.get("ot", {}))
    if kind == "ot":
        x, y = ot.get("x"), ot.get("y")
        if not isinstance(x, list) or not isinstance(y, list) or len(x) != len(y) or not x:
            raise ConfigError("ot.x", "x and y must be equal-length nonempty lists")
        if any((not isinstance(v, (int, float))) or v < 0 for v in x + y):
            raise ConfigError("ot.x", "marginals must be nonnegative numbers")
        if abs(sum(x) - 1) > 1e-10 or abs(sum(y) - 1) > 1e-10:
            raise ConfigError("ot.x", "marginals must each sum to 1 within 1e-10")
        if "cost" in ot:
            c = ot["cost"]
            if not isinstance(c, list) or len(c) != len(x) or any(not isinstance(r, list) or len(r) != len(x) for r in c):
                raise ConfigError("ot.cost", f"expected a {len(x)}x{len(x)} table")
        else:
            ae = _float(ot, "alpha_eps", "ot", default=1.0)
            if not 0 < ae <= 1:
                raise ConfigError("ot.alpha_eps", "must lie in (0, 1]")
            if len(x) != n_sites:
                raise ConfigError("ot.x", f"length {len(x)} does not match the lattice's {n_sites} sites")
    oracle = dict(raw.get("oracle", {}))
    if kind == "oracle":
        _int(oracle, "M_max", "oracle", 2, default=25)
    output = dict(raw.get("output", {}))
    return ExperimentConfig(kind, seed, seeds, lattice, model, regions, bounds, checks, protocol, ot, oracle,
                            output, raw)
