"""Design-record corpus: data model, JSONL persistence, and the synthetic generator.

A corpus is an ordered list of design records, each pairing a natural-language
instruction with the design parameters it describes and the ground-truth PPA
metrics (area / total power / timing slack) of the resulting accelerator.
Real synthesis flows are replaced here by a deterministic analytic cost model
so that every record's metrics are exactly reproducible from its parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ParseError, ValidationError

# Metric column order used everywhere a corpus is turned into a matrix.
METRIC_FIELDS = ("area", "total_power", "slack")

# Compile-time parameter domains of the systolic-array family.
ARRAY_DIMS = (4, 8, 16, 32, 64, 128, 256)
DATA_WIDTH_MIN, DATA_WIDTH_MAX = 4, 32
APPROX_MODES = (0, 1, 2)
# The tiling invariant is only ">= 1"; the synthetic generator (and the
# surrogate model's tiling head) draw from this fixed range.
TILING_CHOICES = (1, 2, 3, 4, 5, 6, 7, 8)

INSTRUCTION_TEMPLATE = (
    "Design a systolic array accelerator with array dimension {dim}x{dim}, "
    "data width {width} bits, approximation mode {mode}, "
    "and memory tiling factor {tiling}."
)


@dataclass(frozen=True)
class DesignParams:
    """Compile-time parameters of one accelerator configuration."""

    array_dim: int
    data_width: int
    approx_mode: int
    tiling: int

    def __post_init__(self):
        if self.array_dim not in ARRAY_DIMS:
            raise ValidationError(
                f"array_dim must be one of {ARRAY_DIMS}, got {self.array_dim}"
            )
        if not DATA_WIDTH_MIN <= self.data_width <= DATA_WIDTH_MAX:
            raise ValidationError(
                f"data_width must be in [{DATA_WIDTH_MIN}, {DATA_WIDTH_MAX}], "
                f"got {self.data_width}"
            )
        if self.approx_mode not in APPROX_MODES:
            raise ValidationError(
                f"approx_mode must be one of {APPROX_MODES}, got {self.approx_mode}"
            )
        if self.tiling < 1:
            raise ValidationError(f"tiling must be >= 1, got {self.tiling}")

    def render_instruction(self) -> str:
        return INSTRUCTION_TEMPLATE.format(
            dim=self.array_dim,
            width=self.data_width,
            mode=self.approx_mode,
            tiling=self.tiling,
        )


@dataclass(frozen=True)
class PpaMetrics:
    """The (area, total power, slack) triple attached to a design.

    Units: area in um^2, total power in W, slack in ns (signed; negative
    means a timing violation).
    """

    area: float
    total_power: float
    slack: float

    def __post_init__(self):
        if not (math.isfinite(self.area) and self.area > 0):
            raise ValidationError(f"area must be positive, got {self.area}")
        if not (math.isfinite(self.total_power) and self.total_power > 0):
            raise ValidationError(
                f"total_power must be positive, got {self.total_power}"
            )
        if not math.isfinite(self.slack):
            raise ValidationError(f"slack must be finite, got {self.slack}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.area, self.total_power, self.slack)


@dataclass(frozen=True)
class DesignRecord:
    """One instruction/design pair with ground-truth metrics.

    `params` is absent on records imported from external exports that carry
    the design source text instead; such text is kept verbatim in
    `design_text`.
    """

    id: str
    instruction: str
    metrics: PpaMetrics
    params: DesignParams | None = None
    design_text: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be a nonempty string")


@dataclass(frozen=True)
class Corpus:
    """Ordered, id-unique collection of design records."""

    records: tuple[DesignRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(f"duplicate record id: {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DesignRecord]:
        return iter(self.records)

    def __getitem__(self, idx: int) -> DesignRecord:
        return self.records[idx]

    def ids(self) -> tuple[str, ...]:
        return tuple(rec.id for rec in self.records)

    def metric_matrix(self) -> np.ndarray:
        """Ground-truth metrics as an (n, 3) array in METRIC_FIELDS order."""
        return np.array([rec.metrics.as_tuple() for rec in self.records], dtype=float)


@dataclass(frozen=True)
class NormStats:
    """Per-metric mean and population standard deviation, METRIC_FIELDS order."""

    mean: tuple[float, float, float]
    sigma: tuple[float, float, float]

    def __post_init__(self):
        for name, s in zip(METRIC_FIELDS, self.sigma):
            if s < 0:
                raise ValidationError(f"sigma must be >= 0 for {name}, got {s}")


def cost_model(params: DesignParams) -> PpaMetrics:
    """Analytic surrogate for the synthesis + place-and-route evaluation flow.

    With d = array_dim, w = data_width, m = approx_mode, t = tiling:

        area        = 120 * d^2 * w * (1 - 0.08 * m) + 400 * t     [um^2]
        total_power = 0.0009 * d^2 * w * (1 - 0.12 * m)            [W]
        slack       = 2.0 - 0.012 * d * w + 0.15 * m               [ns]

    The coefficients make the three metrics conflict: larger arrays cost
    area and power while eating into timing slack, and the approximation
    mode trades area/power against slack. Pure function; equal inputs give
    bit-identical outputs.
    """
    d, w = float(params.array_dim), float(params.data_width)
    m, t = float(params.approx_mode), float(params.tiling)
    area = 120.0 * d * d * w * (1.0 - 0.08 * m) + 400.0 * t
    total_power = 0.0009 * d * d * w * (1.0 - 0.12 * m)
    slack = 2.0 - 0.012 * d * w + 0.15 * m
    return PpaMetrics(area=area, total_power=total_power, slack=slack)


def generate_synthetic(count: int, seed: int) -> Corpus:
    """Generate `count` records with parameters drawn uniformly from their domains.

    Instructions are rendered from the fixed template, metrics come from
    `cost_model`, and the whole corpus is a deterministic function of `seed`.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    width = len(str(count - 1))
    records = []
    for i in range(count):
        params = DesignParams(
            array_dim=int(rng.choice(ARRAY_DIMS)),
            data_width=int(rng.integers(DATA_WIDTH_MIN, DATA_WIDTH_MAX + 1)),
            approx_mode=int(rng.integers(0, len(APPROX_MODES))),
            tiling=int(rng.choice(TILING_CHOICES)),
        )
        records.append(
            DesignRecord(
                id=f"syn-{i:0{width}d}",
                instruction=params.render_instruction(),
                metrics=cost_model(params),
                params=params,
            )
        )
    return Corpus(tuple(records))


# ---------------------------------------------------------------------------
# JSONL persistence
#
# One record per line:
#   {"id": str, "instruction": str,
#    "params": {"array_dim": int, "data_width": int, "approx_mode": int,
#               "tiling": int},                      # optional
#    "metrics": {"area_um2": num, "total_power_w": num, "slack_ns": num},
#    "design_text": str}                             # optional
# Unknown keys are rejected. Floats survive the round trip exactly (repr
# serialization).
# ---------------------------------------------------------------------------

_TOP_KEYS = {"id", "instruction", "params", "metrics", "design_text"}
_PARAM_KEYS = {"array_dim", "data_width", "approx_mode", "tiling"}
_METRIC_KEYS = {"area_um2", "total_power_w", "slack_ns"}


def _record_from_obj(obj: dict, line: int) -> DesignRecord:
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line)
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", line)
    for key in ("id", "instruction", "metrics"):
        if key not in obj:
            raise ParseError(f"missing required key {key!r}", line)
    metrics_obj = obj["metrics"]
    if not isinstance(metrics_obj, dict) or set(metrics_obj) != _METRIC_KEYS:
        raise ParseError(
            f"metrics must be an object with keys {sorted(_METRIC_KEYS)}", line
        )
    params = None
    if "params" in obj:
        params_obj = obj["params"]
        if not isinstance(params_obj, dict) or set(params_obj) != _PARAM_KEYS:
            raise ParseError(
                f"params must be an object with keys {sorted(_PARAM_KEYS)}", line
            )
        if not all(isinstance(params_obj[k], int) for k in _PARAM_KEYS):
            raise ParseError("params fields must be integers", line)
        params = DesignParams(**params_obj)
    try:
        metrics = PpaMetrics(
            area=float(metrics_obj["area_um2"]),
            total_power=float(metrics_obj["total_power_w"]),
            slack=float(metrics_obj["slack_ns"]),
        )
        return DesignRecord(
            id=obj["id"],
            instruction=obj["instruction"],
            metrics=metrics,
            params=params,
            design_text=obj.get("design_text"),
        )
    except ValidationError as exc:
        raise ValidationError(f"line {line}: {exc}") from exc


def _record_to_obj(rec: DesignRecord) -> dict:
    obj: dict = {"id": rec.id, "instruction": rec.instruction}
    if rec.params is not None:
        obj["params"] = {
            "array_dim": rec.params.array_dim,
            "data_width": rec.params.data_width,
            "approx_mode": rec.params.approx_mode,
            "tiling": rec.params.tiling,
        }
    obj["metrics"] = {
        "area_um2": rec.metrics.area,
        "total_power_w": rec.metrics.total_power,
        "slack_ns": rec.metrics.slack,
    }
    if rec.design_text is not None:
        obj["design_text"] = rec.design_text
    return obj


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus, preserving file order. Blank lines are skipped."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from exc
            records.append(_record_from_obj(obj, lineno))
    return Corpus(tuple(records))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL; load_corpus(save_corpus(c)) == c field-for-field."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus:
            fh.write(json.dumps(_record_to_obj(rec), ensure_ascii=False))
            fh.write("\n")


def zscore_normalize(corpus: Corpus) -> tuple[np.ndarray, NormStats]:
    """Z-score the corpus metrics column-wise using population sigma.

    Returns the (n, 3) normalized matrix and the original per-metric
    mean/sigma. Every output column has mean 0 and sigma 1 (within 1e-9).
    """
    if len(corpus) < 2:
        raise ValidationError("normalization needs at least 2 records")
    mat = corpus.metric_matrix()
    mean = mat.mean(axis=0)
    sigma = mat.std(axis=0)  # population std, divisor N
    for name, s in zip(METRIC_FIELDS, sigma):
        if s == 0.0:
            raise ValidationError(f"constant metric column: {name}")
    normalized = (mat - mean) / sigma
    stats = NormStats(mean=tuple(float(v) for v in mean),
                      sigma=tuple(float(v) for v in sigma))
    return normalized, stats


def train_test_split(corpus: Corpus, test_size: int, seed: int) -> tuple[Corpus, Corpus]:
    """Deterministic disjoint split; test gets exactly `test_size` records.

    Record order within each part follows the original corpus order.
    """
    n = len(corpus)
    if test_size < 0:
        raise ValidationError(f"test_size must be >= 0, got {test_size}")
    if test_size >= n:
        raise ValidationError(f"test_size must be < corpus size ({n}), got {test_size}")
    rng = np.random.default_rng(seed)
    picks = rng.permutation(n)[:test_size]
    test_idx = set(int(i) for i in picks)
    train = tuple(rec for i, rec in enumerate(corpus) if i not in test_idx)
    test = tuple(rec for i, rec in enumerate(corpus) if i in test_idx)
    return Corpus(train), Corpus(test)
