"""Histogram-based KL and Jensen-Shannon divergence between client corpora.

Used to quantify how non-IID the client sub-datasets are: for each PPA
metric, per-client histograms are built over a shared (pooled) range and
compared pairwise. All divergences are reported in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .errors import ValidationError

# additive smoothing applied per bin so KL stays finite on disjoint supports
SMOOTHING_EPS = 1e-10

LN2 = float(np.log(2.0))

# metric selector -> attribute on PpaMetrics
_METRIC_ATTR = {"area": "area", "power": "total_power", "slack": "slack"}


@dataclass(frozen=True)
class Histogram:
    """A normalized histogram: B+1 sorted edges and B probabilities."""

    bin_edges: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "probs", probs)
        if edges.ndim != 1 or probs.ndim != 1 or len(edges) != len(probs) + 1:
            raise ValidationError("need B+1 edges for B probabilities")
        if not np.all(np.diff(edges) > 0):
            raise ValidationError("bin edges must be strictly increasing")
        if np.any(np.isnan(probs)) or np.any(probs < 0):
            raise ValidationError("probabilities must be nonnegative and not NaN")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValidationError(f"probabilities must sum to 1, got {probs.sum()!r}")


def build_histogram(
    values: Sequence[float] | np.ndarray,
    bins: int,
    range: tuple[float, float],
) -> Histogram:
    """Equal-width histogram over [lo, hi] with boundary clamping.

    Values outside the range are counted in the first/last bin. A value that
    falls exactly on an interior edge belongs to the bin on its right. The
    empirical frequencies get SMOOTHING_EPS added per bin and are then
    renormalized, so every bin carries strictly positive probability.
    """
    lo, hi = range
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    if not lo < hi:
        raise ValidationError(f"need lo < hi, got ({lo}, {hi})")
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValidationError("cannot build a histogram from no values")
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, vals, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(float)
    probs = counts / counts.sum() + SMOOTHING_EPS
    probs /= probs.sum()
    return Histogram(bin_edges=edges, probs=probs)


def _check_same_edges(p: Histogram, q: Histogram) -> None:
    if not np.array_equal(p.bin_edges, q.bin_edges):
        raise ValidationError("histograms must share identical bin edges")


def kl_divergence(p: Histogram, q: Histogram) -> float:
    """KL(P || Q) = sum_i p_i * ln(p_i / q_i) in nats, with 0*ln(0/q) = 0.

    Nonnegative (Gibbs inequality) and asymmetric; finite whenever Q has no
    empty bins, which `build_histogram` guarantees via smoothing.
    """
    _check_same_edges(p, q)
    pi, qi = p.probs, q.probs
    mask = pi > 0
    if np.any(qi[mask] == 0):
        raise ValidationError("KL undefined: P has mass where Q is zero")
    return float(np.sum(pi[mask] * np.log(pi[mask] / qi[mask])))


def js_divergence(p: Histogram, q: Histogram) -> float:
    """Jensen-Shannon divergence in nats: symmetric and bounded by ln 2."""
    _check_same_edges(p, q)
    m = Histogram(bin_edges=p.bin_edges, probs=(p.probs + q.probs) / 2.0)
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m)


def divergence_matrix(
    subcorpora: Sequence[Corpus],
    metric: str,
    bins: int = 50,
    measure: str = "JSD",
) -> np.ndarray:
    """Pairwise divergence matrix between client corpora for one metric.

    All histograms share equal-width bins over the pooled min/max across the
    sub-corpora, so entries are directly comparable. `metric` is one of
    "area" / "power" / "slack"; `measure` is "KL" or "JSD". The diagonal is
    exactly zero, and the JSD matrix is symmetric.
    """
    if metric not in _METRIC_ATTR:
        raise ValidationError(f"metric must be one of {sorted(_METRIC_ATTR)}, got {metric!r}")
    measure = measure.upper()
    if measure not in ("KL", "JSD"):
        raise ValidationError(f"measure must be 'KL' or 'JSD', got {measure!r}")
    if len(subcorpora) < 2:
        raise ValidationError("need at least 2 sub-corpora")
    attr = _METRIC_ATTR[metric]
    columns = [
        np.array([getattr(rec.metrics, attr) for rec in sub], dtype=float)
        for sub in subcorpora
    ]
    for i, col in enumerate(columns):
        if col.size == 0:
            raise ValidationError(f"sub-corpus {i} is empty")
    lo = min(float(col.min()) for col in columns)
    hi = max(float(col.max()) for col in columns)
    hists = [build_histogram(col, bins, (lo, hi)) for col in columns]
    fn = kl_divergence if measure == "KL" else js_divergence
    n = len(hists)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = fn(hists[i], hists[j])
    return out
