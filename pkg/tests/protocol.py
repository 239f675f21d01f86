"""The canonical desk-scale experiment, shared by scenario and acceptance tests.

Mirrors configs/run.example.toml: a 3000-record corpus at seed 7, three
clients from k-means + 20% Dirichlet reassignment (alpha 1.0), 100 held-out
records per client, 20 rounds with a fixed 16-step local budget.
"""

import numpy as np

from fedchip import (
    Corpus,
    DirichletSpec,
    generate_synthetic,
    partition_corpus,
    sigma_thresholds,
    train_test_split,
)
from fedchip.fedsim import TrainConfig
from fedchip.seeding import SPLIT_TAG, child_seed

SEED = 7
CANONICAL_TRAIN = TrainConfig(
    rounds=20,
    steps_per_round=16,
    batch_size=16,
    learning_rate=3.2e-3,
    seed=SEED,
    n_candidates=20,
)
TEST_SIZE = 100


def split_clients(subcorpora, test_size=TEST_SIZE, seed=SEED):
    train_parts, test_parts = [], []
    for i, sub in enumerate(subcorpora):
        train, test = train_test_split(sub, test_size, seed=child_seed(seed, SPLIT_TAG, i))
        train_parts.append(train)
        test_parts.append(test)
    pooled = Corpus(tuple(rec for part in test_parts for rec in part))
    return train_parts, pooled


def desk_scale_setup():
    """corpus, per-client train corpora, pooled test corpus, sigma thresholds."""
    corpus = generate_synthetic(3000, seed=SEED)
    _, subcorpora = partition_corpus(corpus, DirichletSpec(1.0, 0.2), seed=SEED)
    train_parts, pooled = split_clients(subcorpora)
    return corpus, train_parts, pooled, sigma_thresholds(corpus)


def iid_split(corpus, parts=3, seed=SEED):
    """Random equal-size split, the IID counterpart of the clustered partition."""
    rng = np.random.default_rng(child_seed(seed, 999))
    perm = rng.permutation(len(corpus))
    size = len(corpus) // parts
    return [
        Corpus(tuple(corpus[int(j)] for j in sorted(perm[i * size : (i + 1) * size])))
        for i in range(parts)
    ]
