"""Surrogate instruction-to-design model with low-rank adapters.

The model is one frozen linear head per design parameter: head h maps the
instruction feature vector to logits over that parameter's value set. All
training happens in the adapter, a per-head (A, B) factor pair whose
effective weight delta is (alpha / rank) * B @ A. B starts at zero, so a
fresh adapter leaves the base model's outputs untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import DesignParams, PpaMetrics, cost_model
from ..errors import ValidationError
from ..seeding import ADAPTER_INIT_TAG, MODEL_INIT_TAG, derived_rng
from .features import FEATURE_DIM, HEAD_FIELDS, HEAD_VALUES, featurize

_BASE_INIT_SCALE = 0.01
_ADAPTER_A_SCALE = 0.01


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (works on 1-D and 2-D arrays)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class SurrogateModel:
    """Frozen base weights, one (V_h, F) matrix per output head.

    `create` builds the production model with one head per design-parameter
    field; hand-assembled instances with other head layouts are fine for the
    generic forward/loss/gradient machinery.
    """

    heads: dict[str, np.ndarray]
    feature_dim: int = FEATURE_DIM

    def __post_init__(self):
        for field, w in self.heads.items():
            if w.ndim != 2 or w.shape[1] != self.feature_dim:
                raise ValidationError(
                    f"head {field!r} must be (V, {self.feature_dim}), got {w.shape}"
                )
            if not np.all(np.isfinite(w)):
                raise ValidationError(f"head {field!r} contains non-finite entries")
            w.flags.writeable = False  # base stays frozen; only adapters train

    @classmethod
    def create(cls, seed: int) -> "SurrogateModel":
        rng = derived_rng(seed, MODEL_INIT_TAG)
        heads = {
            field: rng.normal(0.0, _BASE_INIT_SCALE, (len(HEAD_VALUES[field]), FEATURE_DIM))
            for field in HEAD_FIELDS
        }
        return cls(heads=heads)


@dataclass
class LoraAdapter:
    """Trainable low-rank delta: per head A is (rank, F), B is (V_h, rank)."""

    heads: dict[str, tuple[np.ndarray, np.ndarray]]
    rank: int
    alpha: float

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError(f"rank must be >= 1, got {self.rank}")
        for field, (a, b) in self.heads.items():
            if a.shape[0] != self.rank or b.shape[1] != self.rank:
                raise ValidationError(f"head {field!r} factors disagree with rank {self.rank}")

    @classmethod
    def init(cls, model: SurrogateModel, rank: int, alpha: float, seed: int) -> "LoraAdapter":
        """Seeded noise in A, zeros in B: the initial delta is exactly zero."""
        rng = derived_rng(seed, ADAPTER_INIT_TAG)
        heads = {}
        for field, w in model.heads.items():
            a = rng.normal(0.0, _ADAPTER_A_SCALE, (rank, model.feature_dim))
            b = np.zeros((w.shape[0], rank))
            heads[field] = (a, b)
        return cls(heads=heads, rank=rank, alpha=float(alpha))

    def delta(self, field: str) -> np.ndarray:
        a, b = self.heads[field]
        return (self.alpha / self.rank) * (b @ a)

    def copy(self) -> "LoraAdapter":
        return LoraAdapter(
            heads={f: (a.copy(), b.copy()) for f, (a, b) in self.heads.items()},
            rank=self.rank,
            alpha=self.alpha,
        )

    def zeros_like(self) -> "LoraAdapter":
        return LoraAdapter(
            heads={f: (np.zeros_like(a), np.zeros_like(b)) for f, (a, b) in self.heads.items()},
            rank=self.rank,
            alpha=self.alpha,
        )

    def equals(self, other: "LoraAdapter") -> bool:
        """Exact (bitwise) equality of shapes and entries."""
        if self.rank != other.rank or self.alpha != other.alpha:
            return False
        if set(self.heads) != set(other.heads):
            return False
        return all(
            np.array_equal(self.heads[f][0], other.heads[f][0])
            and np.array_equal(self.heads[f][1], other.heads[f][1])
            for f in self.heads
        )

    def max_abs_difference(self, other: "LoraAdapter") -> float:
        return max(
            max(
                float(np.max(np.abs(self.heads[f][0] - other.heads[f][0]))),
                float(np.max(np.abs(self.heads[f][1] - other.heads[f][1]))),
            )
            for f in self.heads
        )

    # --- wire representation (JSON-friendly, lossless float round-trip) ---

    def to_wire_obj(self) -> dict:
        return {
            "rank": self.rank,
            "alpha": self.alpha,
            "heads": {
                field: {"A": a.tolist(), "B": b.tolist()}
                for field, (a, b) in self.heads.items()
            },
        }

    @classmethod
    def from_wire_obj(cls, obj: dict) -> "LoraAdapter":
        heads = {
            field: (
                np.array(head["A"], dtype=float),
                np.array(head["B"], dtype=float),
            )
            for field, head in obj["heads"].items()
        }
        return cls(heads=heads, rank=int(obj["rank"]), alpha=float(obj["alpha"]))


def effective_weights(model: SurrogateModel, adapter: LoraAdapter, field: str) -> np.ndarray:
    return model.heads[field] + adapter.delta(field)


def forward_batch(
    model: SurrogateModel, adapter: LoraAdapter, features: np.ndarray
) -> dict[str, np.ndarray]:
    """Per-head probabilities for a batch of feature rows: field -> (N, V_h)."""
    if features.ndim != 2 or features.shape[1] != model.feature_dim:
        raise ValidationError(
            f"features must be (N, {model.feature_dim}), got {features.shape}"
        )
    return {
        field: softmax(features @ effective_weights(model, adapter, field).T)
        for field in model.heads
    }


def forward(
    model: SurrogateModel, adapter: LoraAdapter, features: np.ndarray
) -> dict[str, np.ndarray]:
    """Per-head probability vectors for a single feature vector."""
    probs = forward_batch(model, adapter, np.asarray(features, dtype=float)[None, :])
    return {field: p[0] for field, p in probs.items()}


def generate_candidates(
    model: SurrogateModel,
    adapter: LoraAdapter,
    instruction: str,
    n: int,
    temperature: float,
    seed: int,
) -> list[tuple[DesignParams, PpaMetrics]]:
    """Sample n candidate designs for an instruction and attach their metrics.

    Each head is sampled independently from its temperature-scaled softmax;
    decoded parameter values run through the analytic cost model, so a
    candidate's metrics are always consistent with its parameters. As
    temperature approaches zero the sampling collapses to argmax decoding.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not temperature > 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    for field in HEAD_FIELDS:
        if field not in model.heads or model.heads[field].shape[0] != len(HEAD_VALUES[field]):
            raise ValidationError(
                f"model lacks a decodable {field!r} head; candidate generation "
                "needs the production head layout"
            )
    x = featurize(instruction)
    rng = np.random.default_rng(seed)
    draws: dict[str, np.ndarray] = {}
    for field in HEAD_FIELDS:
        logits = effective_weights(model, adapter, field) @ x
        probs = softmax(logits / temperature)
        probs = probs / probs.sum()  # guard choice() against rounding drift
        draws[field] = rng.choice(len(probs), size=n, p=probs)
    out = []
    for i in range(n):
        params = DesignParams(
            array_dim=HEAD_VALUES["array_dim"][draws["array_dim"][i]],
            data_width=HEAD_VALUES["data_width"][draws["data_width"][i]],
            approx_mode=HEAD_VALUES["approx_mode"][draws["approx_mode"][i]],
            tiling=HEAD_VALUES["tiling"][draws["tiling"][i]],
        )
        out.append((params, cost_model(params)))
    return out
