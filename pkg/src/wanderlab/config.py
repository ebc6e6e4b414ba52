"""Scenario files: flat INI sections with a fixed key list per section."""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields

from .errors import ConfigError

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class CycleSection:
    scenario: str = "reference"
    collar_fraction: float = 0.1
    contracting_modulus: float = 0.5
    expanding_modulus: float = 2.0
    rotation: float = GOLDEN
    tangency_iterate: int = 1
    parabola_offset: float = 0.3
    patch_samples: int = 201


@dataclass
class HopfSection:
    mu: float = 0.04
    a: float = 1.0
    beta: float = 2 * math.pi * GOLDEN
    gamma: float = 0.5
    period: int = 1
    radial_r4: float = 0.0
    angular_r2: float = 0.0
    scan_min: float = -0.05
    scan_max: float = 0.05
    scan_grid: int = 21


@dataclass
class DenjoySection:
    alpha: float = GOLDEN
    mass: float = 0.5
    family: str = "power"
    p: float = 2.0
    q: float = 0.5
    i_max: int = 100_000
    strict: bool = True
    verify_horizon: int = 1000


@dataclass
class TubesSection:
    delta_fraction: float = 0.4


@dataclass
class CertifySection:
    horizon: int = 1000
    max_period: int = 50
    diameter_tol: float = 1e-6
    omega_seeds: int = 20
    omega_start: int = 10_000
    omega_stop: int = 100_000
    omega_stride: int = 1000
    resolution: float = 1e-3
    lyapunov_iterates: int = 100_000
    lyapunov_tol: float = 1e-2
    density_iterates: int = 1_000_000
    density_eps: float = 1e-3
    seed: int = 0


@dataclass
class TolerancesSection:
    first: float = 1e-7
    second: float = 1e-7
    meet: float = 1e-6
    off: float = 1e-4
    trans: float = 1e-4
    ratio: float = 1e-3


@dataclass
class Scenario:
    cycle: CycleSection = field(default_factory=CycleSection)
    hopf: HopfSection = field(default_factory=HopfSection)
    denjoy: DenjoySection = field(default_factory=DenjoySection)
    tubes: TubesSection = field(default_factory=TubesSection)
    certify: CertifySection = field(default_factory=CertifySection)
    tolerances: TolerancesSection = field(default_factory=TolerancesSection)

    def dumps(self) -> str:
        out = io.StringIO()
        for sec in fields(self):
            out.write(f"[{sec.name}]\n")
            body = getattr(self, sec.name)
            for f in fields(body):
                out.write(f"{f.name} = {_format(getattr(body, f.name))}\n")
            out.write("\n")
        return out.getvalue()


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(kind, text: str, where: str):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as {kind.__name__}") from None


_POSITIVE_INTS = {"patch_samples", "tangency_iterate", "period", "scan_grid", "i_max", "verify_horizon",
                  "horizon", "max_period", "omega_seeds", "omega_stride", "lyapunov_iterates",
                  "density_iterates"}


def _validate(sc: Scenario):
    for name, val in vars(sc.tolerances).items():
        if not val > 0.0:
            raise ConfigError(f"tolerances.{name} must be positive")
    for sec in fields(sc):
        body = getattr(sc, sec.name)
        for f in fields(body):
            v = getattr(body, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"{sec.name}.{f.name} must be finite")
            if f.name in _POSITIVE_INTS and v < 1:
                raise ConfigError(f"{sec.name}.{f.name} must be a positive integer")
    if sc.cycle.scenario not in ("reference", "heterodimensional"):
        raise ConfigError(f"cycle.scenario must be 'reference' or 'heterodimensional', not {sc.cycle.scenario!r}")
    if sc.denjoy.family not in ("power", "geometric"):
        raise ConfigError(f"denjoy.family must be 'power' or 'geometric', not {sc.denjoy.family!r}")
    if not 0.0 < sc.tubes.delta_fraction:
        raise ConfigError("tubes.delta_fraction must be positive")
    if sc.certify.omega_start > sc.certify.omega_stop:
        raise ConfigError("certify.omega_start must not exceed certify.omega_stop")
    if sc.hopf.scan_min >= sc.hopf.scan_max:
        raise ConfigError("hopf.scan_min must be below hopf.scan_max")


def loads(text: str) -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sc = Scenario()
    sections = {f.name: f for f in fields(sc)}
    for name in parser.sections():
        if name not in sections:
            raise ConfigError(f"unknown section [{name}]")
        body = getattr(sc, name)
        known = {f.name: f for f in fields(body)}
        for key, text_val in parser.items(name):
            if key not in known:
                raise ConfigError(f"unknown key '{key}' in section [{name}]")
            kind = type(getattr(body, key))
            setattr(body, key, _parse(kind, text_val, f"{name}.{key}"))
    _validate(sc)
    return sc


def load(path) -> Scenario:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def default_scenario() -> Scenario:
    return Scenario()
