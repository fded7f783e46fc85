"""
Experiment configuration: an INI-style file (``key = value`` under sections).

Example::

    [experiment]
    scenario = bourgain
    name = desk
    seed = 0

    [equation]
    kind = power
    n = 2
    beta = 1.5
    alpha = 1

    [grid]
    L = 8
    M = 128

    [datum]
    kind = gaussian-mix
    widths = 2, 1, 0.5

    [numerics]
    p_or_s = 2.2
    N = 4
    horizon = 0.5

All cross-field constraints are checked in :func:`parse_config`, before any
computation starts.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .exponents import target_exponent
from .grid import Field, Grid, make_grid, radial_profile
from .nonlinearity import EquationSpec

__all__ = ["SCENARIOS", "ConfigError", "Numerics", "ExperimentConfig", "parse_config", "load_config", "build_datum"]

SCENARIOS = ("evolve", "norms", "split", "interaction", "bourgain", "strichartz", "exponents", "verify")
DATUM_KINDS = ("gaussian", "sech-bump", "ring", "gaussian-mix", "random-radial")
# scenarios whose output is only meaningful inside the well-posedness hypotheses
_SCOPED = ("split", "interaction", "bourgain")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(";"):
        if item.strip():
            q, r = _floats(item)
            out.append((q, r))
    return tuple(out)


@dataclass(frozen=True)
class Numerics:
    tol: float = 1e-10
    max_iter: int = 50
    subintervals: int = 16
    stages: int = 3
    steps: int = 1000
    snapshots: int = 10
    horizon: float = 1.0
    C: float = 1.0
    calibrate: bool = False
    K_max: int = 64
    N: float = 4.0
    N_list: tuple = (2.0, 4.0, 8.0, 16.0)
    T_list: tuple = (0.0625, 0.125, 0.25, 0.5)
    p_or_s: float | None = None
    method: str = "both"
    pairs: tuple = ((3.0, 4.0),)
    norm_pairs: tuple = ((2.0, 2.0), (3.0, 1.5))
    family_size: int = 4
    filter: str | None = None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    scenario: str
    name: str
    seed: int
    equation: EquationSpec | None
    grid: Grid | None
    datum: dict
    numerics: Numerics
    output_dir: str = "results"
    allow_unscoped: bool = False
    warnings: tuple = field(default_factory=tuple)

    def canonical(self) -> dict:
        return {
            "scenario": self.scenario,
            "name": self.name,
            "seed": self.seed,
            "equation": asdict(self.equation) if self.equation else None,
            "grid": asdict(self.grid) if self.grid else None,
            "datum": dict(sorted(self.datum.items())),
            "numerics": {k: v for k, v in asdict(self.numerics).items()},
            "allow_unscoped": self.allow_unscoped,
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=_jsonable).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["seed"] = int(seed)
        return ExperimentConfig(**d)


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"not serializable: {v!r}")


_NUMERIC_PARSERS = {
    "tol": float, "max_iter": int, "subintervals": int, "stages": int, "steps": int,
    "snapshots": int, "horizon": float, "C": float, "K_max": int, "N": float,
    "N_list": _floats, "T_list": _floats, "p_or_s": float, "method": str, "pairs": _pairs,
    "norm_pairs": _pairs, "family_size": int, "filter": str,
}


def _get(sec, key, conv, default=None):
    if sec is None or key not in sec:
        return default
    try:
        return conv(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key} = {sec[key]!r}: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (L, M, C, N)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    known = {"experiment", "equation", "grid", "datum", "numerics", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown section(s): {sorted(extra)}")
    exp = cp["experiment"] if cp.has_section("experiment") else None
    scenario = _get(exp, "scenario", str)
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    name = _get(exp, "name", str, scenario)
    seed = _get(exp, "seed", int, 0)
    try:
        allow = exp.getboolean("allow_unscoped", fallback=False) if exp is not None else False
    except ValueError as exc:
        raise ConfigError(f"[experiment] allow_unscoped: {exc}") from None

    num_sec = cp["numerics"] if cp.has_section("numerics") else None
    kw = {}
    if num_sec is not None:
        for key in num_sec:
            if key == "calibrate":
                kw[key] = num_sec.getboolean(key)
                continue
            if key not in _NUMERIC_PARSERS:
                raise ConfigError(f"[numerics] unknown key {key!r}")
            kw[key] = _get(num_sec, key, _NUMERIC_PARSERS[key])
    num = Numerics(**kw)
    out_sec = cp["output"] if cp.has_section("output") else None
    out_dir = _get(out_sec, "dir", str, "results")

    if scenario == "verify":
        return ExperimentConfig(scenario, name, seed, None, None, {}, num, out_dir, allow)

    eq_sec = cp["equation"] if cp.has_section("equation") else None
    if eq_sec is None:
        raise ConfigError("missing [equation] section")
    try:
        spec = EquationSpec(
            kind=_get(eq_sec, "kind", str, "power"),
            beta=_get(eq_sec, "beta", float),
            n=_get(eq_sec, "n", int),
            alpha=_get(eq_sec, "alpha", float),
            nu=_get(eq_sec, "nu", float),
            sign=_get(eq_sec, "sign", int, 1),
            coupling=_get(eq_sec, "coupling", float, 1.0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[equation] {exc}") from None
    warnings = tuple(spec.hypothesis_violations())
    if warnings and scenario in _SCOPED and not allow:
        raise ConfigError("; ".join(warnings) + " (set allow_unscoped = true for exploratory runs)")

    grid = None
    datum = {}
    if scenario != "exponents":
        g_sec = cp["grid"] if cp.has_section("grid") else None
        if g_sec is None:
            raise ConfigError("missing [grid] section")
        try:
            grid = make_grid(spec.n, _get(g_sec, "L", float, 8.0), _get(g_sec, "M", int, 128))
        except ValueError as exc:
            raise ConfigError(f"[grid] {exc}") from None
        d_sec = cp["datum"] if cp.has_section("datum") else None
        datum = dict(d_sec) if d_sec is not None else {"kind": "gaussian"}
        datum.setdefault("kind", "gaussian")

    cfg = ExperimentConfig(scenario, name, seed, spec, grid, datum, num, out_dir, allow, warnings)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    num, spec, grid = cfg.numerics, cfg.equation, cfg.grid
    if not num.tol > 0:
        raise ConfigError("[numerics] tol must be positive")
    if num.max_iter < 1 or num.subintervals < 1 or num.stages < 1:
        raise ConfigError("[numerics] max_iter, subintervals and stages must be >= 1")
    if not num.horizon > 0:
        raise ConfigError("[numerics] horizon must be positive")
    if not num.C > 0:
        raise ConfigError("[numerics] window constant C must be positive")
    if cfg.scenario == "evolve":
        if num.steps < 1 or num.snapshots < 1 or num.steps % num.snapshots:
            raise ConfigError("[numerics] snapshots must divide steps (both >= 1)")
        if num.method not in ("split", "picard", "both"):
            raise ConfigError("[numerics] method must be split, picard or both")
    if cfg.scenario in ("split", "interaction", "bourgain", "norms"):
        if 2.0 * grid.L < 4 or math.floor(grid.M / (4 * grid.L)) + 1 < 4:
            raise ConfigError(
                "[grid] modulation partition needs L >= 2 and M/(4L) >= 3 (K_max >= 4)"
            )
    if cfg.scenario in ("split", "interaction", "bourgain"):
        if num.p_or_s is None:
            raise ConfigError("[numerics] p_or_s is required for this scenario")
        r = target_exponent(spec)
        if not 2 < num.p_or_s < r:
            raise ConfigError(f"[numerics] p_or_s = {num.p_or_s} must lie in (2, {r:g})")
        Ns = (num.N,) if cfg.scenario == "bourgain" else num.N_list
        if any(not N > 1 for N in Ns):
            raise ConfigError("[numerics] splitting parameter N must exceed 1")
        if num.K_max < 1:
            raise ConfigError("[numerics] K_max must be >= 1")
    if cfg.scenario == "interaction" and any(not T > 0 for T in num.T_list):
        raise ConfigError("[numerics] T_list entries must be positive")
    if cfg.scenario == "strichartz":
        from .analysis import AdmissiblePair

        for q, r in num.pairs:
            try:
                AdmissiblePair(q, r, spec.beta, spec.n)
            except ValueError as exc:
                raise ConfigError(f"[numerics] pairs: {exc}") from None
    if cfg.scenario != "exponents":
        try:
            build_datum(cfg)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[datum] {exc}") from None


def build_datum(cfg: ExperimentConfig) -> Field:
    from .families import gaussian_mix, random_radial

    d = cfg.datum
    kind = d.get("kind", "gaussian")
    amp = float(d.get("amplitude", 1.0))
    g = cfg.grid
    if kind in ("gaussian", "sech-bump"):
        return radial_profile(g, kind, amplitude=amp, a=float(d.get("a", 1.0)))
    if kind == "ring":
        return radial_profile(g, "ring", amplitude=amp, r0=float(d.get("r0", 2.0)),
                              sigma=float(d.get("sigma", 0.5)))
    if kind == "gaussian-mix":
        widths = _floats(d.get("widths", "2, 1, 0.5"))
        weights = _floats(d["weights"]) if "weights" in d else None
        return gaussian_mix(g, widths, weights, amplitude=amp)
    if kind == "random-radial":
        f = random_radial(g, 1, seed=cfg.seed, terms=int(d.get("terms", 3)))[0]
        return f * amp
    raise ValueError(f"unknown datum kind {kind!r}; expected one of {DATUM_KINDS}")


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"configuration file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))
