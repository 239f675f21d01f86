"""Deterministic derivation of independent RNG streams from one master seed.

Every stochastic stage keys its generator on (seed, tag, ...) so that stages
never share a stream and results stay bit-identical regardless of execution
order. Tags are small fixed integers unique per stage.
"""

from __future__ import annotations

import numpy as np

MODEL_INIT_TAG = 101
ADAPTER_INIT_TAG = 202
CLIENT_STREAM_TAG = 303
EVAL_STREAM_TAG = 404
SPLIT_TAG = 505


def derived_rng(*key: int) -> np.random.Generator:
    """Generator for the stream identified by the integer key tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def child_seed(*key: int) -> int:
    """A plain integer seed derived from the key tuple (for int-seeded APIs)."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1, np.uint64)[0])
