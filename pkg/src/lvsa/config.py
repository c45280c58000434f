"""Run configuration: flat ``key = value`` text files with validated keys."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class RunConfig:
    d: int = 1000
    seed: int = 0
    lr: float = 5e-4
    batch_size: int = 512
    alpha: float = 1.0
    beta: float = 1.0
    epochs: int = 100
    float_width: int = 64
    leaky_slope: float = 0.01
    layers_i: int = 2
    layers_d: int = 3
    layers_n: int = 2
    init_scale: float = 0.1
    l2: float = 0.0
    patience: int = 10
    eval_every: int = 5
    relation_prediction: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be >= 0")
        if self.float_width not in (32, 64):
            raise ConfigError("float_width must be 32 or 64")
        if self.leaky_slope < 0:
            raise ConfigError("leaky_slope must be >= 0")
        if min(self.layers_i, self.layers_d, self.layers_n) < 1:
            raise ConfigError("layer counts must be >= 1")
        if self.init_scale <= 0 or self.l2 < 0:
            raise ConfigError("init_scale must be > 0 and l2 >= 0")
        if self.patience < 1 or self.eval_every < 1:
            raise ConfigError("patience and eval_every must be >= 1")
        if self.relation_prediction:
            # reserved: the auxiliary relation-prediction objective has no defined formula
            raise ConfigError("relation_prediction is reserved and not implemented")

    @property
    def layers(self) -> tuple[int, int, int]:
        return self.layers_i, self.layers_d, self.layers_n

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    typ = _FIELDS[key].type
    try:
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val)
    base = base or RunConfig()
    return base.replace(**values)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name in _FIELDS:
        val = getattr(cfg, name)
        lines.append(f"{name} = {str(val).lower() if isinstance(val, bool) else val}")
    return "\n".join(lines) + "\n"
