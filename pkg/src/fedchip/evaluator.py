"""Statistical design-quality scoring: sigma-based acceptance and Chip@k.

A generated design is accepted when, for each of the three PPA metrics, its
deviation from the ground-truth design stays below one corpus standard
deviation of that metric. Chip@k then estimates, per instruction, the
probability that at least one of the top-k sampled candidates is accepted,
and averages that probability over the test set.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus, PpaMetrics
from .errors import ValidationError

SLACK_MODES = ("literal", "direction_aware")


@dataclass(frozen=True)
class SigmaThresholds:
    """Per-metric acceptance widths (one population sigma each)."""

    sigma_area: float
    sigma_power: float
    sigma_slack: float

    def __post_init__(self):
        for name in ("sigma_area", "sigma_power", "sigma_slack"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")


@dataclass(frozen=True)
class CandidateSet:
    """All candidates generated for one design description, plus ground truth."""

    description_id: str
    gt: PpaMetrics
    candidates: tuple[PpaMetrics, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if len(self.candidates) < 1:
            raise ValidationError(
                f"candidate set {self.description_id!r} must not be empty"
            )


@dataclass(frozen=True)
class EvalReport:
    """Per-description (n, c) counts and the aggregate Chip@k values."""

    per_description: tuple[tuple[str, int, int], ...]  # (description_id, n, c)
    chip_at_k: dict[int, float]

    def to_json(self) -> str:
        return json.dumps({str(k): v for k, v in sorted(self.chip_at_k.items())})

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["description_id", "n", "c"])
            for desc_id, n, c in self.per_description:
                writer.writerow([desc_id, n, c])


def sigma_thresholds(corpus: Corpus) -> SigmaThresholds:
    """Population standard deviation of each ground-truth metric column."""
    if len(corpus) < 2:
        raise ValidationError("sigma thresholds need at least 2 records")
    mat = corpus.metric_matrix()
    sigmas = mat.std(axis=0)  # divisor N, consistent with zscore_normalize
    for name, s in zip(("area", "total_power", "slack"), sigmas):
        if s == 0.0:
            raise ValidationError(f"constant metric column: {name}")
    return SigmaThresholds(
        sigma_area=float(sigmas[0]),
        sigma_power=float(sigmas[1]),
        sigma_slack=float(sigmas[2]),
    )


def deviations(
    generated: PpaMetrics, gt: PpaMetrics
) -> tuple[float, float, float]:
    """Componentwise generated - gt; negative area/power deviations are good."""
    return (
        generated.area - gt.area,
        generated.total_power - gt.total_power,
        generated.slack - gt.slack,
    )


def accepts(
    deltas: tuple[float, float, float],
    thresholds: SigmaThresholds,
    slack_mode: str = "literal",
) -> bool:
    """Joint acceptance: every metric's deviation strictly below its sigma.

    In the default "literal" mode the slack check is delta_slack <
    sigma_slack, which (like area and power) accepts arbitrarily *lower*
    slack. "direction_aware" flips the slack test to -delta_slack <
    sigma_slack so that slack losses, not gains, are penalized.
    """
    if slack_mode not in SLACK_MODES:
        raise ValidationError(f"slack_mode must be one of {SLACK_MODES}, got {slack_mode!r}")
    d_area, d_power, d_slack = deltas
    if slack_mode == "direction_aware":
        d_slack = -d_slack
    return (
        d_area < thresholds.sigma_area
        and d_power < thresholds.sigma_power
        and d_slack < thresholds.sigma_slack
    )


def chip_at_k_single(n: int, c: int, k: int) -> float:
    """Probability that a uniform size-k subset of n candidates hits one of c accepted.

    Equals 1 - C(n-c, k)/C(n, k), evaluated through the numerically stable
    running product 1 - prod_{i<k} (n-c-i)/(n-i). Exactly 1.0 when n-c < k
    and exactly c/n when k = 1.
    """
    if not isinstance(n, int) or not isinstance(c, int) or not isinstance(k, int):
        raise ValidationError("n, c, k must be integers")
    if k < 1 or k > n:
        raise ValidationError(f"k must satisfy 1 <= k <= n (n={n}), got k={k}")
    if c < 0 or c > n:
        raise ValidationError(f"c must satisfy 0 <= c <= n (n={n}), got c={c}")
    if k == 1:
        return c / n
    if n - c < k:
        return 1.0
    return 1.0 - math.prod((n - c - i) / (n - i) for i in range(k))


def chip_at_k(
    sets: Sequence[CandidateSet],
    thresholds: SigmaThresholds,
    k: int | Iterable[int],
    slack_mode: str = "literal",
) -> EvalReport:
    """Score candidate sets and average chip_at_k_single over descriptions.

    `k` may be a single value or an iterable of values; every set must have
    at least max(k) candidates.
    """
    ks = (k,) if isinstance(k, int) else tuple(k)
    if not ks:
        raise ValidationError("need at least one k")
    if not sets:
        raise ValidationError("need at least one candidate set")
    per_description = []
    for cand_set in sets:
        n = len(cand_set.candidates)
        for kk in ks:
            if n < kk:
                raise ValidationError(
                    f"candidate set {cand_set.description_id!r} has n={n} < k={kk}"
                )
        c = sum(
            accepts(deviations(cand, cand_set.gt), thresholds, slack_mode)
            for cand in cand_set.candidates
        )
        per_description.append((cand_set.description_id, n, c))
    scores = {
        kk: sum(chip_at_k_single(n, c, kk) for _, n, c in per_description)
        / len(per_description)
        for kk in ks
    }
    return EvalReport(per_description=tuple(per_description), chip_at_k=scores)
