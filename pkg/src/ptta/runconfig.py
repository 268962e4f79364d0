"""JSON run configuration: defaults, strict key validation, dotted overrides.

One top-level ``seed`` drives every stage (the stages mix in their own
constants); the ``PTTA_SEED`` environment variable overrides it. Unknown keys
are rejected so typos fail loudly instead of silently using defaults.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .adapter import DEFAULT_DOMAIN_NAMES
from .bench import SynthConfig
from .errors import ConfigError
from .stylegen import StyleGenConfig
from .trainer import TrainConfig

DEFAULT_CLASS_NAMES = ("dog", "elephant", "giraffe", "guitar", "horse", "house", "person")

SEED_ENV_VAR = "PTTA_SEED"


@dataclass
class EncoderConfig:
    token_dim: int = 32
    feature_dim: int = 64

    def validate(self) -> None:
        if self.token_dim < 1 or self.feature_dim < 1:
            raise ConfigError("encoder dimensions must be >= 1")


@dataclass
class BenchSettings:
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    alpha_grid: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 4.0, 5.0])
    beta_grid: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 4.0, 5.0])

    def validate(self) -> None:
        if not self.seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in self.seeds):
            raise ConfigError("bench.seeds must be a non-empty list of integers")
        for name, grid in (("alpha_grid", self.alpha_grid), ("beta_grid", self.beta_grid)):
            if not grid or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in grid):
                raise ConfigError(f"bench.{name} must be a non-empty list of numbers")


@dataclass
class RunConfig:
    seed: int = 0
    class_names: list[str] = field(default_factory=lambda: list(DEFAULT_CLASS_NAMES))
    domain_names: list[str] = field(default_factory=lambda: list(DEFAULT_DOMAIN_NAMES))
    adapter_init: str = "template"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    styles: StyleGenConfig = field(default_factory=StyleGenConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    bench: BenchSettings = field(default_factory=BenchSettings)

    def validate(self) -> None:
        if not self.class_names or not all(isinstance(n, str) and n.strip() for n in self.class_names):
            raise ConfigError("class_names must be a non-empty list of non-empty strings")
        if not self.domain_names or not all(isinstance(n, str) and n.strip() for n in self.domain_names):
            raise ConfigError("domain_names must be a non-empty list of non-empty strings")
        if self.adapter_init not in ("template", "random"):
            raise ConfigError(f"adapter_init must be 'template' or 'random', got {self.adapter_init!r}")
        self.encoder.validate()
        self.styles.validate()
        self.train.validate()
        self.synth.validate()
        self.bench.validate()

    def resolve_seeds(self) -> None:
        """Propagate the global seed into every stage config."""
        self.styles.seed = self.seed
        self.train.seed = self.seed
        self.synth.seed = self.seed


_SECTIONS = {
    "encoder": EncoderConfig,
    "styles": StyleGenConfig,
    "train": TrainConfig,
    "synth": SynthConfig,
    "bench": BenchSettings,
}
_SCALAR_KEYS = ("seed", "class_names", "domain_names", "adapter_init")
# per-stage seeds are not part of the file schema; the top-level seed rules them
_HIDDEN_FIELDS = {"seed"}


def _section_keys(cls) -> set[str]:
    return {f.name for f in fields(cls)} - _HIDDEN_FIELDS


def _apply_section(target, cls, payload: dict, section: str) -> None:
    allowed = _section_keys(cls)
    for key, value in payload.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {section}.{key}")
        setattr(target, key, _coerce(getattr(target, key), value, f"{section}.{key}"))


def _coerce(current, value, path: str):
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be a boolean, got {value!r}")
        return value
    if isinstance(current, int) and not isinstance(current, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}")
        return value
    if isinstance(current, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be a list, got {value!r}")
        return list(value)
    raise ConfigError(f"{path} has unsupported type")


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> RunConfig:
    config = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        _apply_payload(config, payload)
    for item in overrides or []:
        _apply_override(config, item)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            config.seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc
    config.resolve_seeds()
    config.validate()
    return config


def _apply_payload(config: RunConfig, payload: dict) -> None:
    for key, value in payload.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            _apply_section(getattr(config, key), _SECTIONS[key], value, key)
        elif key in _SCALAR_KEYS:
            setattr(config, key, _coerce(getattr(config, key), value, key))
        else:
            raise ConfigError(f"unknown config key {key}")


def _apply_override(config: RunConfig, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if "." in key:
        section, leaf = key.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r} in --set {item!r}")
        _apply_section(getattr(config, section), _SECTIONS[section], {leaf: value}, section)
        return
    if key in _SCALAR_KEYS:
        setattr(config, key, _coerce(getattr(config, key), value, key))
        return
    # bare key: accepted when it names exactly one section field
    matches = [name for name, cls in _SECTIONS.items() if key in _section_keys(cls)]
    if not matches:
        raise ConfigError(f"unknown config key {key!r} in --set {item!r}")
    if len(matches) > 1:
        raise ConfigError(
            f"--set key {key!r} is ambiguous (sections: {', '.join(matches)}); use section.key"
        )
    _apply_section(getattr(config, matches[0]), _SECTIONS[matches[0]], {key: value}, matches[0])
