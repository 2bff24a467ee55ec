"""Experiment configuration: one TOML schema, frozen defaults, strict keys.

Layout (every key optional; an empty file means all defaults)::

    schema = 1
    threads = 4          # default: BML_THREADS, then the core count
    nodes = 1024         # radial quadrature size

    [theorem1]
    k_list = [8, 16, 32, 64, 128, 256]
    t = 0.1
    phi0 = [0.0]                 # polynomial coefficients c0, c1, ...
    v = [-0.5, 1.0]              # or {constant = [...], terms = [{mode = 1, kind = "sin", coeffs = [0, 1]}]}
    slope_max = 0.65

Functions are polynomials in the moment coordinate given by coefficient
lists, or real Fourier series given as a table with ``constant`` and a list
of ``terms`` (``kind`` is ``"cos"`` or ``"sin"``, ``mode`` >= 1).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import tomli

from .errors import ConfigError
from .geometry import FourierFunction, MomentPoly
from .quadrature import DEFAULT_NODES

SCHEMA_VERSION = 1
SCENARIOS = (
    "theorem1",
    "theorem2",
    "correspondence",
    "chen-sun",
    "tian-zelditch",
    "subprincipal",
    "kernel-decay",
)
STANDARD_K = (8, 16, 32, 64, 128, 256)
SUBPRINCIPAL_K = (16, 32, 64, 128, 256)

LINEAR = (-0.5, 1.0)  # x - 1/2
IDENTITY = (0.0, 1.0)  # x
TILTED = (-0.05, 0.1)  # 0.1 (x - 1/2)


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of one scenario; function fields hold TOML-style specs."""

    scenario: str
    k_list: tuple[int, ...] = STANDARD_K
    t: float = 0.1
    phi0: object = (0.0,)
    v: object = LINEAR
    v1: object = IDENTITY
    v2: object = field(default_factory=lambda: {"terms": [{"mode": 1, "kind": "sin", "coeffs": [0.0, 1.0]}]})
    f: object = IDENTITY
    g: object = IDENTITY
    x1: float = 0.0
    x2: float = 0.5
    fd_step: float = 1e-3
    nodes: int = DEFAULT_NODES
    threads: int | None = None
    slope_max: float | None = None
    slope_min: float | None = None
    ratio_max: float | None = None
    tolerance: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown scenario {self.scenario!r}")
        ks = tuple(int(k) for k in self.k_list)
        if not ks:
            raise ConfigError(f"{self.scenario}.k_list: must be non-empty")
        if any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError(f"{self.scenario}.k_list: must be strictly increasing positive integers")
        object.__setattr__(self, "k_list", ks)
        if self.nodes < 1:
            raise ConfigError("nodes: must be positive")
        if not self.fd_step > 0:
            raise ConfigError(f"{self.scenario}.fd_step: must be positive")
        for name in ("phi0", "v", "v1", "v2", "f", "g"):
            try:
                parse_function(getattr(self, name))
            except ConfigError as exc:
                raise ConfigError(f"{self.scenario}.{name}: {exc}") from None

    def fn(self, name: str) -> FourierFunction:
        return parse_function(getattr(self, name))

    def poly(self, name: str) -> MomentPoly:
        ff = self.fn(name)
        if not ff.is_invariant:
            raise ConfigError(f"{self.scenario}.{name}: must be S^1-invariant")
        return ff.invariant_part()

    def window(self, key: str, default: float) -> float:
        value = getattr(self, key)
        return default if value is None else float(value)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @property
    def thread_count(self) -> int:
        return resolve_threads(self.threads)


SCENARIO_DEFAULTS = {
    "theorem1": {},
    "theorem2": {},
    "correspondence": {},
    "chen-sun": {},
    "tian-zelditch": {"phi0": TILTED},
    "subprincipal": {"k_list": SUBPRINCIPAL_K},
    "kernel-decay": {},
}

_SCENARIO_KEYS = {f.name for f in fields(ExperimentConfig)} - {"scenario", "nodes", "threads"}
_TOP_KEYS = {"schema", "threads", "nodes"}


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("BML_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"BML_THREADS: not an integer: {env!r}") from None
    return os.cpu_count() or 1


def _coeffs(value, where: str):
    if isinstance(value, (int, float)):
        return [float(value)]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where}: expected a non-empty list of coefficients")
    try:
        return [float(c) for c in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: coefficients must be numbers") from None


def parse_function(spec) -> FourierFunction:
    """Build a real FourierFunction from a coefficient list or a term table."""
    if isinstance(spec, FourierFunction):
        return spec
    if isinstance(spec, MomentPoly):
        return FourierFunction.invariant(spec)
    if not isinstance(spec, dict):
        return FourierFunction.invariant(MomentPoly(_coeffs(spec, "polynomial")))
    unknown = set(spec) - {"constant", "terms"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    constant = MomentPoly(_coeffs(spec.get("constant", [0.0]), "constant"))
    cos, sin = {}, {}
    for i, term in enumerate(spec.get("terms", [])):
        if not isinstance(term, dict) or set(term) != {"mode", "kind", "coeffs"}:
            raise ConfigError(f"terms[{i}]: needs exactly mode, kind, coeffs")
        mode, kind = term["mode"], term["kind"]
        if not isinstance(mode, int) or mode < 1:
            raise ConfigError(f"terms[{i}].mode: must be a positive integer")
        target = {"cos": cos, "sin": sin}.get(kind)
        if target is None:
            raise ConfigError(f"terms[{i}].kind: must be 'cos' or 'sin'")
        p = MomentPoly(_coeffs(term["coeffs"], f"terms[{i}].coeffs"))
        target[mode] = target.get(mode, MomentPoly()) + p
    return FourierFunction.trig(constant, cos=cos, sin=sin)


@dataclass(frozen=True)
class RunConfig:
    """A parsed configuration file: global settings plus every scenario."""

    threads: int | None = None
    nodes: int = DEFAULT_NODES
    scenarios: dict = field(default_factory=dict)

    def scenario(self, name: str) -> ExperimentConfig:
        return self.scenarios[name]


def default_config(name: str, **overrides) -> ExperimentConfig:
    kw = dict(SCENARIO_DEFAULTS[name])
    kw.update(overrides)
    return ExperimentConfig(scenario=name, **kw)


def load_config(data: dict) -> RunConfig:
    unknown = set(data) - _TOP_KEYS - set(SCENARIOS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema: unsupported version {schema!r} (expected {SCHEMA_VERSION})")
    threads = data.get("threads")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError("threads: must be a positive integer")
    nodes = data.get("nodes", DEFAULT_NODES)
    if not isinstance(nodes, int) or nodes < 1:
        raise ConfigError("nodes: must be a positive integer")
    scenarios = {}
    for name in SCENARIOS:
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"{name}: expected a table")
        bad = set(section) - _SCENARIO_KEYS
        if bad:
            raise ConfigError(f"{name}: unknown keys {', '.join(sorted(bad))}")
        kw = dict(section)
        if "k_list" in kw:
            if not isinstance(kw["k_list"], list) or not all(isinstance(k, int) for k in kw["k_list"]):
                raise ConfigError(f"{name}.k_list: must be a list of integers")
        scenarios[name] = default_config(name, nodes=nodes, threads=threads, **kw)
    return RunConfig(threads, nodes, scenarios)


def read_config(path) -> RunConfig:
    if path is None:
        return load_config({})
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return load_config(data)
