"""Solver configuration, with flat TOML loading and dumping."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .adaptation import DEFAULT_POOL
from .constraints import CHT_KINDS, ComparatorConfig

VARIANTS = ("auto", "ns", "ns-l")
ABLATIONS = ("none", "a", "b")


class ConfigError(ValueError):
    pass


def default_np_max(dim: int) -> int:
    if dim <= 10:
        return 24 * dim
    if dim <= 30:
        return 19 * dim
    return 16 * dim


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.  ``None`` for ``np_max``/``fes_max`` means the
    dimension-dependent default (``24/19/16 * D`` and ``20000 * D``)."""

    np_max: int | None = None
    np_min: int = 6
    k: int = 4
    min_subpop: int = 5
    se0: float = 1.0
    s_size: int = 6
    lehmer_cr: bool = False
    cc: float = 0.3
    p_frac: float = 0.11
    delta: float = 1e-4
    fes_max: int | None = None
    cht: str = "sf"
    epsilon: float = 0.0
    variant: str = "auto"
    pool: tuple[tuple[float, float], ...] = DEFAULT_POOL
    lp: int = 50
    pool_floor: float = 0.05
    pool_s0: float = 1.0
    ablation: str = "none"
    const_np: int | None = None
    baseline_np: int | None = None
    baseline_f: float = 0.5
    baseline_cr: float = 0.9
    seed: int = 0
    trace_every: int = 10

    def __post_init__(self):
        if self.cht not in CHT_KINDS:
            raise ConfigError(f"cht: expected one of {CHT_KINDS}, got {self.cht!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant: expected one of {VARIANTS}, got {self.variant!r}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation: expected one of {ABLATIONS}, got {self.ablation!r}")
        if self.k != 4:
            raise ConfigError("k: the strategy set is defined for exactly 4 subpopulations")
        if self.np_min < 4:
            raise ConfigError("np_min: at least 4 members are needed for rand/1 donors")
        if self.epsilon < 0 and not math.isinf(self.epsilon):
            raise ConfigError("epsilon: must be non-negative")
        if self.s_size < 1:
            raise ConfigError("s_size: must be positive")
        if self.lp < 1:
            raise ConfigError("lp: must be positive")
        if self.trace_every < 1:
            raise ConfigError("trace_every: must be positive")
        object.__setattr__(self, "pool", tuple(tuple(float(v) for v in p) for p in self.pool))
        if any(len(p) != 2 for p in self.pool) or not self.pool:
            raise ConfigError("pool: expected a non-empty list of (cr, f) pairs")

    @property
    def comparator(self) -> ComparatorConfig:
        return ComparatorConfig(self.cht, self.epsilon)

    def resolved_variant(self, dim: int) -> str:
        if self.variant == "auto":
            return "ns-l" if dim <= 10 else "ns"
        return self.variant

    def resolved_np_max(self, dim: int) -> int:
        if self.const_np is not None:
            return self.const_np * dim
        return self.np_max if self.np_max is not None else default_np_max(dim)

    def resolved_fes_max(self, dim: int) -> int:
        return self.fes_max if self.fes_max is not None else 20000 * dim

    def replace(self, **changes) -> SolverConfig:
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in fields(SolverConfig)}
_NULLABLE = ("np_max", "fes_max", "const_np", "baseline_np")


def _coerce(key: str, value):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = _FIELDS[key].default
    if key in _NULLABLE and (value is None or (isinstance(value, str) and value.lower() == "none")):
        return None
    if value is None:
        raise ConfigError(f"{key}: a value is required")
    try:
        if key == "pool":
            return tuple(tuple(float(v) for v in pair) for pair in value)
        if key == "epsilon":
            return float(value)
        if key in ("cht", "variant", "ablation"):
            return str(value).lower()
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int) or key in _NULLABLE:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: invalid value {value!r}") from None
    return value


def config_from_dict(data: dict, base: SolverConfig | None = None) -> SolverConfig:
    values = {k: _coerce(k, v) for k, v in data.items()}
    base = base or SolverConfig()
    try:
        return dataclasses.replace(base, **values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with TOML value syntax; bare words are strings."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = (s.strip() for s in text.split("=", 1))
    if raw.lower() in ("inf", "+inf"):
        return key, math.inf
    try:
        return key, tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return key, raw


def load_config(path: str | Path | None = None, overrides=()) -> SolverConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    for item in overrides:
        key, value = parse_override(item)
        data[key] = value
    return config_from_dict(data)


def config_to_dict(cfg: SolverConfig) -> dict:
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name == "pool":
            value = [list(p) for p in value]
        out[f.name] = value
    return out


def dump_config(cfg: SolverConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def loads_config(text: str) -> SolverConfig:
    return config_from_dict(tomllib.loads(text))
