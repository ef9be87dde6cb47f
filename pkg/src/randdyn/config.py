"""Experiment configuration files.

INI syntax with five sections; keys are case-sensitive::

    [space]
    dimension = 1                 ; N, maps act on P^N
    asserted_morphisms = q        ; optional labels trusted as morphisms

    [maps]
    f = 2*x^2                     ; one map per line, label = map
    g = x^2 + x

    [measure]
    type = finite                 ; or: family
    f = 1/2                       ; finite: label = exact rational weight
    g = 1/2
    # family: name = power_plus_c, plus its parameters (c = 1)

    [point]
    P = -1                        ; affine value on the line or [a : b : ...]

    [run]
    seed = 0
    trials = 64
    n_max = 20
    eps = 1e-6
    threads = 1

Unknown ``[run]`` keys are kept as strings in ``ExperimentConfig.run`` for
subcommand-specific options (``n``, ``n_list``, ``k``, ``d1``, ``d2``,
``mode``, ``depth``, ``budget``, ``state_cap``, ``max_bits``, ``B_grid``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, RandDynError
from .heights import ProjPoint, parse_point
from .maps import RationalMap, parse_map
from .random_model import FiniteMeasure, family_measure

SECTIONS = ("space", "maps", "measure", "point", "run")

RUN_DEFAULTS = {"seed": 0, "trials": 64, "n_max": 20, "eps": 1e-6, "threads": 1}


@dataclass
class ExperimentConfig:
    dimension: int
    maps: dict
    measure: object | None
    point: ProjPoint | None
    run: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.run.get("seed", RUN_DEFAULTS["seed"]))

    def get(self, key, cast=str, default=None):
        if key not in self.run:
            return default
        try:
            return cast(self.run[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[run] {key} = {self.run[key]!r}: {exc}") from None

    def int_list(self, key, default=None):
        if key not in self.run:
            return default
        try:
            return tuple(int(x) for x in str(self.run[key]).replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"[run] {key} must be a list of integers") from None

    def float_list(self, key, default=None):
        if key not in self.run:
            return default
        try:
            return tuple(float(x) for x in str(self.run[key]).replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"[run] {key} must be a list of numbers") from None


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    return cp


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}; expected {list(SECTIONS)}")
    raw = {s: dict(cp[s]) for s in cp.sections()}

    space = raw.get("space", {})
    try:
        dim = int(space.get("dimension", 1))
    except ValueError:
        raise ConfigError("[space] dimension must be an integer") from None
    if dim < 1:
        raise ConfigError("[space] dimension must be at least 1")
    asserted = {x.strip() for x in space.get("asserted_morphisms", "").split(",") if x.strip()}

    maps: dict[str, RationalMap] = {}
    for lab, text_ in raw.get("maps", {}).items():
        try:
            maps[lab] = parse_map(text_, dim, label=lab, asserted_morphism=lab in asserted)
        except RandDynError as exc:
            raise ConfigError(f"[maps] {lab}: {exc}") from None
    missing = asserted - set(maps)
    if missing:
        raise ConfigError(f"asserted_morphisms names undefined maps {sorted(missing)}")

    measure = None
    msec = dict(raw.get("measure", {}))
    if msec:
        kind = msec.pop("type", "finite")
        if kind == "finite":
            weights = {}
            for lab, w in msec.items():
                if lab not in maps:
                    raise ConfigError(f"[measure] references undefined map {lab!r}")
                try:
                    weights[lab] = Fraction(w.strip())
                except (ValueError, ZeroDivisionError):
                    raise ConfigError(f"[measure] {lab}: weight {w!r} is not an exact rational") from None
            measure = FiniteMeasure(weights, {lab: maps[lab] for lab in weights})
        elif kind == "family":
            name = msec.pop("name", None)
            if name is None:
                raise ConfigError("[measure] family needs a name")
            params = {}
            for k, v in msec.items():
                try:
                    params[k] = Fraction(v.strip())
                except ValueError:
                    raise ConfigError(f"[measure] parameter {k} = {v!r} is not rational") from None
            if dim != 1:
                raise ConfigError("built-in families act on the line (dimension 1)")
            measure = family_measure(name, **params)
        else:
            raise ConfigError(f"[measure] type must be finite or family, not {kind!r}")
    elif maps:
        measure = FiniteMeasure.uniform(maps)

    point = None
    psec = raw.get("point", {})
    if psec:
        if "P" not in psec:
            raise ConfigError("[point] needs a key P")
        try:
            point = parse_point(psec["P"], dim)
        except RandDynError as exc:
            raise ConfigError(f"[point] {exc}") from None
        if point.n != dim:
            raise ConfigError(f"[point] lives in P^{point.n}, expected P^{dim}")

    run = dict(RUN_DEFAULTS)
    run.update(raw.get("run", {}))
    return ExperimentConfig(dim, maps, measure, point, run, raw)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config_text(text, str(p))
