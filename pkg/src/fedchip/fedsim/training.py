"""Client-local adapter training: loss, analytic gradients, AdamW loop.

The loss is batch-mean cross-entropy summed over the four parameter heads.
Gradients flow only into the adapter factors (the base model is frozen) and
are exact analytic softmax-cross-entropy gradients, checked against finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from ..corpus import Corpus
from ..errors import ValidationError
from ..seeding import CLIENT_STREAM_TAG, derived_rng
from .features import HEAD_FIELDS, HEAD_VALUE_INDEX, featurize_all
from .model import LoraAdapter, SurrogateModel, forward_batch

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one simulation run (shared by all scenarios).

    The local budget per round is `local_epochs` full passes by default.
    Setting `steps_per_round` switches to a fixed number of mini-batch steps
    per round regardless of client dataset size (the equal-local-compute
    convention of federated LLM fine-tuning frameworks); `local_epochs` is
    ignored while it is set.
    """

    rounds: int
    local_epochs: int = 1
    steps_per_round: int | None = None
    batch_size: int = 16
    learning_rate: float = 1e-2
    lora_rank: int = 8
    lora_alpha: float = 16.0
    weight_decay: float = 0.01
    seed: int = 0
    temperature: float = 1.0
    n_candidates: int = 10

    def __post_init__(self):
        if self.rounds < 1:
            raise ValidationError(f"rounds must be >= 1, got {self.rounds}")
        if self.local_epochs < 0:
            raise ValidationError(f"local_epochs must be >= 0, got {self.local_epochs}")
        if self.steps_per_round is not None and self.steps_per_round < 1:
            raise ValidationError(
                f"steps_per_round must be >= 1 when set, got {self.steps_per_round}"
            )
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        for name in ("learning_rate", "lora_alpha", "temperature"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if self.lora_rank < 1:
            raise ValidationError(f"lora_rank must be >= 1, got {self.lora_rank}")
        if self.weight_decay < 0:
            raise ValidationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        if self.n_candidates < 1:
            raise ValidationError(f"n_candidates must be >= 1, got {self.n_candidates}")


def cross_entropy(
    probs: dict[str, np.ndarray], targets: dict[str, np.ndarray]
) -> float:
    """Batch-mean negative log-likelihood, summed over heads.

    Probabilities below PROB_CLAMP are clamped (and counted on
    cross_entropy.clamp_events) so adversarial inputs cannot produce an
    infinite loss.
    """
    n = None
    total = 0.0
    for head in probs:
        p = probs[head]
        t = np.asarray(targets[head], dtype=int)
        if n is None:
            n = p.shape[0]
            if n == 0:
                raise ValidationError("batch must be nonempty")
        picked = p[np.arange(n), t]
        below = int(np.count_nonzero(picked < PROB_CLAMP))
        if below:
            cross_entropy.clamp_events += below
            picked = np.maximum(picked, PROB_CLAMP)
        total += float(-np.log(picked).sum())
    return total / n


cross_entropy.clamp_events = 0


def _grad_from_probs(
    adapter: LoraAdapter,
    features: np.ndarray,
    targets: dict[str, np.ndarray],
    probs: dict[str, np.ndarray],
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    n = features.shape[0]
    scale = adapter.alpha / adapter.rank
    grads = {}
    for head in probs:
        g_logits = probs[head].copy()
        g_logits[np.arange(n), np.asarray(targets[head], dtype=int)] -= 1.0
        g_logits /= n
        g_weff = g_logits.T @ features  # (V, F)
        a, b = adapter.heads[head]
        grads[head] = (scale * (b.T @ g_weff), scale * (g_weff @ a.T))
    return grads


def grad(
    model: SurrogateModel,
    adapter: LoraAdapter,
    features: np.ndarray,
    targets: dict[str, np.ndarray],
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Analytic cross-entropy gradients w.r.t. the adapter factors only.

    Returns head -> (dA, dB); the frozen base weights receive no gradient.
    """
    if features.shape[0] == 0:
        raise ValidationError("batch must be nonempty")
    probs = forward_batch(model, adapter, features)
    return _grad_from_probs(adapter, features, targets, probs)


class AdamWState:
    """First/second moment accumulators and step count for one adapter."""

    def __init__(self, adapter: LoraAdapter):
        self.m = {
            head: (np.zeros_like(a), np.zeros_like(b))
            for head, (a, b) in adapter.heads.items()
        }
        self.v = {
            head: (np.zeros_like(a), np.zeros_like(b))
            for head, (a, b) in adapter.heads.items()
        }
        self.step = 0


def adamw_step(
    adapter: LoraAdapter,
    grads: dict[str, tuple[np.ndarray, np.ndarray]],
    state: AdamWState,
    learning_rate: float,
    weight_decay: float,
) -> None:
    """One decoupled-weight-decay adaptive-moment update, in place."""
    state.step += 1
    bc1 = 1.0 - ADAM_BETA1**state.step
    bc2 = 1.0 - ADAM_BETA2**state.step
    for head in grads:
        params = adapter.heads[head]
        for i in range(2):
            p, g = params[i], grads[head][i]
            m, v = state.m[head][i], state.v[head][i]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= learning_rate * ((m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS) + weight_decay * p)


@dataclass
class ClientState:
    """One simulated design party: local data, adapter, optimizer, RNG stream.

    The corpus (and its derived feature/target arrays) never leaves the
    client; only adapter tensors and the dataset size cross the wire.
    """

    client_id: int
    corpus: Corpus
    rng: np.random.Generator
    features: np.ndarray
    targets: dict[str, np.ndarray]
    adapter: LoraAdapter | None = None
    optimizer: AdamWState | None = None
    loss_trace: list[float] = dataclass_field(default_factory=list)


def make_client(client_id: int, corpus: Corpus, global_seed: int) -> ClientState:
    """Build a client whose RNG stream is keyed on (global_seed, client_id)."""
    if len(corpus) == 0:
        raise ValidationError(f"client {client_id} has an empty corpus")
    targets: dict[str, list[int]] = {head: [] for head in HEAD_FIELDS}
    for rec in corpus:
        if rec.params is None:
            raise ValidationError(
                f"record {rec.id!r} has no params and cannot be used for training"
            )
        for head in HEAD_FIELDS:
            value = getattr(rec.params, head)
            index = HEAD_VALUE_INDEX[head].get(value)
            if index is None:
                raise ValidationError(
                    f"record {rec.id!r}: {head}={value} outside the model's value set"
                )
            targets[head].append(index)
    return ClientState(
        client_id=client_id,
        corpus=corpus,
        rng=derived_rng(global_seed, CLIENT_STREAM_TAG, client_id),
        features=featurize_all([rec.instruction for rec in corpus]),
        targets={head: np.array(idx, dtype=int) for head, idx in targets.items()},
    )


def _epoch_batches(client: ClientState, batch_size: int):
    """Mini-batch index stream: fresh shuffle per pass over the local data."""
    n = len(client.corpus)
    while True:
        order = client.rng.permutation(n)
        for start in range(0, n, batch_size):
            yield order[start : start + batch_size]


def local_train(
    client: ClientState, model: SurrogateModel, config: TrainConfig
) -> tuple[LoraAdapter, list[float]]:
    """Run one round of mini-batch AdamW on the client's adapter.

    The budget is config.local_epochs full passes, or exactly
    config.steps_per_round steps when that is set. Batches come from fresh
    permutations of the client's own RNG stream, so two runs with equal
    seeds are bit-identical. Returns the (in-place updated) adapter and the
    per-step loss trace.
    """
    if client.adapter is None:
        raise ValidationError("client has no adapter to train")
    n = len(client.corpus)
    if n < config.batch_size:
        raise ValidationError(
            f"client {client.client_id} corpus ({n}) smaller than batch_size "
            f"({config.batch_size})"
        )
    if client.optimizer is None:
        client.optimizer = AdamWState(client.adapter)
    batches_per_epoch = (n + config.batch_size - 1) // config.batch_size
    if config.steps_per_round is not None:
        steps = config.steps_per_round
    else:
        steps = config.local_epochs * batches_per_epoch
    losses: list[float] = []
    stream = _epoch_batches(client, config.batch_size)
    for _ in range(steps):
        batch = next(stream)
        x = client.features[batch]
        t = {head: client.targets[head][batch] for head in client.targets}
        probs = forward_batch(model, client.adapter, x)
        losses.append(cross_entropy(probs, t))
        grads = _grad_from_probs(client.adapter, x, t, probs)
        adamw_step(
            client.adapter,
            grads,
            client.optimizer,
            config.learning_rate,
            config.weight_decay,
        )
    client.loss_trace.extend(losses)
    return client.adapter, losses
