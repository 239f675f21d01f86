import itertools

import numpy as np
import pytest

from fedchip import (
    DirichletSpec,
    ValidationError,
    dirichlet_reassign,
    generate_synthetic,
    kmeans,
    partition_corpus,
    zscore_normalize,
)


def brute_force_inertia(points: np.ndarray, k: int) -> float:
    """Exact optimal k-means inertia by enumerating every label assignment."""
    best = np.inf
    n = len(points)
    for labels in itertools.product(range(k), repeat=n):
        cost = 0.0
        for j in range(k):
            members = points[[i for i in range(n) if labels[i] == j]]
            if len(members):
                cost += float(((members - members.mean(axis=0)) ** 2).sum())
        best = min(best, cost)
    return best


class TestKMeans:
    def test_well_separated_pairs_reach_exact_optimum(self):
        points = np.array([[0.0], [0.1], [10.0], [10.1]])
        result = kmeans(points, k=2, seed=0)
        assert result.labels[0] == result.labels[1]
        assert result.labels[2] == result.labels[3]
        assert result.labels[0] != result.labels[2]
        assert sorted(float(c) for c in result.centroids[:, 0]) == pytest.approx(
            [0.05, 10.05], abs=1e-12
        )
        assert result.inertia == pytest.approx(0.01, abs=1e-12)
        assert result.inertia == pytest.approx(brute_force_inertia(points, 2), abs=1e-12)

    def test_k_one_gives_mean(self):
        points = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 0.0]])
        result = kmeans(points, k=1, seed=3)
        assert set(result.labels) == {0}
        assert result.centroids[0] == pytest.approx(points.mean(axis=0), abs=1e-12)

    def test_k_equals_n_zero_inertia(self):
        points = np.array([[0.0], [1.0], [2.0], [5.0]])
        result = kmeans(points, k=4, seed=1)
        assert result.inertia == 0.0
        assert sorted(result.labels) == [0, 1, 2, 3]

    def test_too_few_points_rejected(self):
        with pytest.raises(ValidationError):
            kmeans(np.zeros((2, 1)), k=3, seed=0)

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(42)
        points = rng.normal(size=(60, 3))
        a = kmeans(points, k=4, seed=9)
        b = kmeans(points, k=4, seed=9)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.inertia == b.inertia

    def test_inertia_trace_non_increasing(self):
        rng = np.random.default_rng(1)
        points = rng.normal(size=(200, 3))
        result = kmeans(points, k=5, seed=2)
        trace = np.array(result.inertia_trace)
        assert np.all(np.diff(trace) <= 1e-9)

    def test_labels_are_argmin_post_hoc(self):
        rng = np.random.default_rng(5)
        points = rng.normal(size=(120, 2))
        result = kmeans(points, k=4, seed=8)
        dist2 = ((points[:, None, :] - result.centroids[None, :, :]) ** 2).sum(axis=2)
        assert np.array_equal(result.labels, np.argmin(dist2, axis=1))


class TestDirichletReassign:
    def test_fraction_zero_is_identity(self):
        labels = np.array([0, 1, 2, 0, 1, 2])
        new, moved = dirichlet_reassign(labels, 3, DirichletSpec(alpha=1.0, fraction=0.0), seed=4)
        assert np.array_equal(new, labels)
        assert moved.size == 0

    def test_exact_reassignment_count(self):
        labels = np.zeros(10, dtype=int)
        _, moved = dirichlet_reassign(labels, 3, DirichletSpec(alpha=1.0, fraction=0.2), seed=0)
        assert moved.size == 2

    def test_rounding_is_half_away_from_zero(self):
        labels = np.zeros(10, dtype=int)
        _, moved = dirichlet_reassign(labels, 3, DirichletSpec(alpha=1.0, fraction=0.25), seed=0)
        assert moved.size == 3  # round(2.5) away from zero

    def test_unselected_labels_unchanged(self):
        rng = np.random.default_rng(10)
        labels = rng.integers(0, 3, size=500)
        new, moved = dirichlet_reassign(labels, 3, DirichletSpec(alpha=0.5, fraction=0.2), seed=3)
        untouched = np.setdiff1d(np.arange(500), moved)
        assert np.array_equal(new[untouched], labels[untouched])
        assert moved.size == 100

    def test_deterministic(self):
        labels = np.arange(30) % 3
        spec = DirichletSpec(alpha=1.0, fraction=0.5)
        a = dirichlet_reassign(labels, 3, spec, seed=7)
        b = dirichlet_reassign(labels, 3, spec, seed=7)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_high_concentration_limit_is_uniform(self):
        # alpha -> inf makes every Dirichlet draw ~(1/k, ..., 1/k); the
        # reassigned labels must then be uniform over k.
        t, k = 100_000, 3
        labels = np.zeros(t, dtype=int)
        new, moved = dirichlet_reassign(
            labels, k, DirichletSpec(alpha=1e6, fraction=1.0), seed=11
        )
        assert moved.size == t
        freqs = np.bincount(new, minlength=k) / t
        assert np.all(np.abs(freqs - 1.0 / k) < 0.02)

    def test_per_batch_mode_shares_one_vector(self):
        # with a tiny alpha a single shared draw concentrates on one label
        labels = np.zeros(1000, dtype=int)
        new, moved = dirichlet_reassign(
            labels, 5, DirichletSpec(alpha=1e-3, fraction=1.0), seed=2, per_point=False
        )
        top = np.bincount(new, minlength=5).max() / 1000
        assert top > 0.95

    def test_bad_labels_rejected(self):
        with pytest.raises(ValidationError):
            dirichlet_reassign([0, 3], 3, DirichletSpec(), seed=0)


class TestPartitionCorpus:
    def test_subcorpora_partition_ids_exactly(self):
        corpus = generate_synthetic(300, seed=7)
        partition, subs = partition_corpus(corpus, DirichletSpec(1.0, 0.2), seed=7)
        assert len(subs) == 3
        assert all(len(sub) > 0 for sub in subs)
        all_ids = [rec.id for sub in subs for rec in sub]
        assert sorted(all_ids) == sorted(corpus.ids())
        assert len(partition.reassigned_ids) == 60  # round(0.2 * 300)

    def test_fraction_zero_matches_pure_kmeans_clusters(self):
        corpus = generate_synthetic(200, seed=3)
        partition, _ = partition_corpus(corpus, DirichletSpec(1.0, 0.0), seed=3)
        normalized, _ = zscore_normalize(corpus)
        dist2 = (
            (normalized[:, None, :] - partition.centroids[None, :, :]) ** 2
        ).sum(axis=2)
        assert np.array_equal(np.array(partition.labels), np.argmin(dist2, axis=1))
        assert partition.reassigned_ids == frozenset()

    def test_same_seed_identical_partition(self):
        corpus = generate_synthetic(150, seed=5)
        a, _ = partition_corpus(corpus, DirichletSpec(1.0, 0.2), seed=9)
        b, _ = partition_corpus(corpus, DirichletSpec(1.0, 0.2), seed=9)
        assert a.labels == b.labels
        assert a.reassigned_ids == b.reassigned_ids
        assert np.array_equal(a.centroids, b.centroids)

    def test_partition_json_export(self, tmp_path):
        corpus = generate_synthetic(100, seed=2)
        partition, _ = partition_corpus(corpus, DirichletSpec(1.0, 0.2), seed=2)
        path = tmp_path / "partition.json"
        partition.save(path)
        import json

        obj = json.loads(path.read_text())
        assert set(obj) == {"labels", "centroids", "reassigned_ids", "seed", "alpha", "fraction"}
        assert len(obj["labels"]) == 100
        assert obj["seed"] == 2 and obj["alpha"] == 1.0 and obj["fraction"] == 0.2
