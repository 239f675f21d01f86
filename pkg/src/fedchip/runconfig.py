"""Simulation run configuration: TOML file with data/partition/train/eval sections.

See docs in the README for an annotated example. Unknown keys anywhere in
the file are rejected so typos fail loudly instead of silently falling back
to defaults.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .fedsim.training import TrainConfig


@dataclass(frozen=True)
class DataConfig:
    count: int = 3000
    seed: int = 7
    test_size: int = 100
    corpus_path: str | None = None

    def __post_init__(self):
        if self.corpus_path is None and self.count < 1:
            raise ValidationError(f"count must be >= 1, got {self.count}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        if self.test_size < 1:
            raise ValidationError(f"test_size must be >= 1, got {self.test_size}")


@dataclass(frozen=True)
class PartitionConfig:
    k: int = 3
    fraction: float = 0.2
    alpha: float = 1.0
    per_point: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValidationError(f"fraction must be in [0, 1], got {self.fraction}")
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class EvalConfig:
    ks: tuple[int, ...] = (1,)
    slack_mode: str = "literal"
    per_round: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        if not self.ks or any(k < 1 for k in self.ks):
            raise ValidationError(f"ks must be a nonempty list of k >= 1, got {self.ks}")
        if self.slack_mode not in ("literal", "direction_aware"):
            raise ValidationError(f"unknown slack_mode {self.slack_mode!r}")


@dataclass(frozen=True)
class RunConfig:
    """Canonical desk-scale experiment: see configs/run.example.toml."""

    data: DataConfig = field(default_factory=DataConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(
            rounds=20,
            steps_per_round=16,
            learning_rate=3.2e-3,
            n_candidates=20,
            seed=7,
        )
    )
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["eval"]["ks"] = list(self.eval.ks)
        return obj


_SECTIONS = {
    "data": DataConfig,
    "partition": PartitionConfig,
    "train": TrainConfig,
    "eval": EvalConfig,
}


def _build_section(name: str, cls, values: dict):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - allowed
    if unknown:
        raise ValidationError(f"unknown keys in [{name}]: {sorted(unknown)}")
    if name == "eval" and "ks" in values:
        values = dict(values)
        values["ks"] = tuple(values["ks"])
    try:
        return cls(**values)
    except TypeError as exc:
        raise ValidationError(f"bad [{name}] section: {exc}") from exc


def load_run_config(path: str | Path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"invalid config file: {exc}") from exc
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ValidationError(f"unknown config sections: {sorted(unknown)}")
    if "train" not in raw or "rounds" not in raw["train"]:
        raise ValidationError("config file must contain a [train] section with 'rounds'")
    built = {
        name: _build_section(name, cls, raw.get(name, {}))
        for name, cls in _SECTIONS.items()
    }
    return RunConfig(**built)
