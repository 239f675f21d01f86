"""Split a corpus into manufacturer-style client sub-datasets.

The pipeline clusters records by their normalized PPA metrics (Lloyd's
k-means with k-means++ seeding), then randomly reassigns a fraction of the
points to clusters sampled from a symmetric Dirichlet distribution. The
result is a set of client corpora that keep the broad cluster structure but
differ enough to be meaningfully non-IID.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, zscore_normalize
from .errors import ValidationError


@dataclass(frozen=True)
class DirichletSpec:
    """Reassignment knobs: symmetric concentration and the fraction moved."""

    alpha: float = 1.0
    fraction: float = 0.2

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValidationError(f"fraction must be in [0, 1], got {self.fraction}")


@dataclass(frozen=True)
class Partition:
    """Cluster assignment over a corpus plus the ids that were reassigned."""

    labels: tuple[int, ...]
    k: int
    centroids: np.ndarray
    reassigned_ids: frozenset[str]
    seed: int
    alpha: float
    fraction: float

    def to_json_obj(self) -> dict:
        return {
            "labels": list(self.labels),
            "centroids": self.centroids.tolist(),
            "reassigned_ids": sorted(self.reassigned_ids),
            "seed": self.seed,
            "alpha": self.alpha,
            "fraction": self.fraction,
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_trace: tuple[float, ...]


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centroids by squared-distance weighting."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=float)
    centroids[0] = points[int(rng.integers(n))]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:  # all remaining points coincide with a chosen centroid
            idx = int(rng.integers(n))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans(
    points: Sequence[Sequence[float]] | np.ndarray,
    k: int,
    seed: int,
    max_iters: int = 300,
    tol: float = 1e-8,
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, deterministic under `seed`.

    Ties in the nearest-centroid assignment go to the lowest centroid index,
    and a cluster emptied during iteration is re-seeded at the point farthest
    from its assigned centroid. Stops once the largest centroid shift drops
    below `tol` or after `max_iters` passes. The per-iteration inertia trace
    (recorded after each assignment step) is returned alongside the result;
    it is non-increasing.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if n < k:
        raise ValidationError(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(pts, k, rng)

    trace: list[float] = []
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iters):
        dist2 = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dist2, axis=1)  # argmin takes the lowest index on ties
        inertia = float(dist2[np.arange(n), labels].sum())
        assert not trace or inertia <= trace[-1] + 1e-9, "inertia increased"
        trace.append(inertia)

        new_centroids = centroids.copy()
        for j in range(k):
            members = pts[labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
            else:
                farthest = int(np.argmax(dist2[np.arange(n), labels]))
                new_centroids[j] = pts[farthest]
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < tol:
            break

    # final assignment against the converged centroids
    dist2 = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(dist2, axis=1)
    inertia = float(dist2[np.arange(n), labels].sum())
    if not trace or inertia < trace[-1]:
        trace.append(inertia)
    return KMeansResult(
        labels=labels,
        centroids=centroids,
        inertia=inertia,
        inertia_trace=tuple(trace),
    )


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def dirichlet_reassign(
    labels: Sequence[int] | np.ndarray,
    k: int,
    spec: DirichletSpec,
    seed: int,
    per_point: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Relabel a random `spec.fraction` of the points from Dirichlet draws.

    Exactly round(fraction * t) distinct indices are chosen uniformly without
    replacement. In per-point mode (default) each chosen point gets its own
    probability vector drawn from Dirichlet(alpha, ..., alpha); with
    `per_point=False` a single shared vector is drawn for the whole batch.
    A reassigned point may land back on its original label. Returns the new
    labels and the sorted array of reassigned indices.
    """
    labels = np.asarray(labels, dtype=int)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValidationError(f"labels must lie in [0, {k})")
    t = labels.size
    m = _round_half_away(spec.fraction * t)
    rng = np.random.default_rng(seed)
    new_labels = labels.copy()
    if m == 0:
        return new_labels, np.empty(0, dtype=int)
    chosen = np.sort(rng.choice(t, size=m, replace=False))
    if per_point:
        probs = rng.dirichlet(np.full(k, spec.alpha), size=m)
        u = rng.random(m)
        picks = (probs.cumsum(axis=1) > u[:, None]).argmax(axis=1)
    else:
        shared = rng.dirichlet(np.full(k, spec.alpha))
        picks = rng.choice(k, size=m, p=shared)
    new_labels[chosen] = picks
    return new_labels, chosen


def partition_corpus(
    corpus: Corpus,
    spec: DirichletSpec,
    seed: int,
    k: int = 3,
    per_point: bool = True,
) -> tuple[Partition, list[Corpus]]:
    """Normalize -> k-means -> Dirichlet reassignment -> per-cluster corpora.

    The returned sub-corpora preserve corpus order within each cluster and
    together contain every record exactly once.
    """
    normalized, _ = zscore_normalize(corpus)
    # independent deterministic seeds for the two stochastic stages
    stage_seeds = np.random.default_rng(seed).integers(2**63, size=2)
    km = kmeans(normalized, k, seed=int(stage_seeds[0]))
    labels, reassigned = dirichlet_reassign(
        km.labels, k, spec, seed=int(stage_seeds[1]), per_point=per_point
    )
    ids = corpus.ids()
    partition = Partition(
        labels=tuple(int(l) for l in labels),
        k=k,
        centroids=km.centroids,
        reassigned_ids=frozenset(ids[i] for i in reassigned),
        seed=seed,
        alpha=spec.alpha,
        fraction=spec.fraction,
    )
    subcorpora = [
        Corpus(tuple(rec for rec, lab in zip(corpus, labels) if lab == j))
        for j in range(k)
    ]
    return partition, subcorpora
