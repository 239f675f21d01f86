"""FedAvg aggregation and the three training scenarios.

The server loop is: broadcast the global adapter, let every client train
locally, pull each update back over an in-process wire (a real serialization
boundary), and aggregate with dataset-size weights. Centralized and
independent training reuse the same client machinery so the three scenarios
differ only in data routing, never in optimization details.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from ..corpus import Corpus
from ..errors import ValidationError
from ..evaluator import CandidateSet, EvalReport, SigmaThresholds, chip_at_k
from ..seeding import EVAL_STREAM_TAG, child_seed
from .model import LoraAdapter, SurrogateModel, generate_candidates
from .training import AdamWState, ClientState, TrainConfig, local_train, make_client


@dataclass(frozen=True)
class ClientUpdate:
    """What a client is allowed to send to the server: adapter + its data size."""

    client_id: int
    round: int
    n_examples: int
    adapter: LoraAdapter


def encode_update(update: ClientUpdate) -> bytes:
    """Serialize a client update for the wire (floats survive exactly)."""
    obj = {
        "client_id": update.client_id,
        "round": update.round,
        "n_examples": update.n_examples,
        "adapter": update.adapter.to_wire_obj(),
    }
    return json.dumps(obj, sort_keys=True).encode("utf-8")


def decode_update(raw: bytes) -> ClientUpdate:
    obj = json.loads(raw.decode("utf-8"))
    return ClientUpdate(
        client_id=int(obj["client_id"]),
        round=int(obj["round"]),
        n_examples=int(obj["n_examples"]),
        adapter=LoraAdapter.from_wire_obj(obj["adapter"]),
    )


def fedavg(adapters: list[LoraAdapter], weights: list[int | float]) -> LoraAdapter:
    """Dataset-size-weighted mean of adapters, accumulated in list order.

    A and B factors are averaged separately, entry by entry:
    out = sum_i (w_i / sum(w)) * adapter_i.
    """
    if not adapters:
        raise ValidationError("fedavg needs at least one adapter")
    if len(weights) != len(adapters):
        raise ValidationError("one weight per adapter required")
    if any(not w > 0 for w in weights):
        raise ValidationError("weights must be positive")
    first = adapters[0]
    for other in adapters[1:]:
        if other.rank != first.rank or other.alpha != first.alpha:
            raise ValidationError("adapters disagree on rank/alpha")
        for head, (a, b) in first.heads.items():
            oa, ob = other.heads[head]
            if oa.shape != a.shape or ob.shape != b.shape:
                raise ValidationError(f"adapter shape mismatch on head {head!r}")
    total = float(sum(weights))
    out = first.zeros_like()
    for adapter, w in zip(adapters, weights):
        coef = w / total
        for head, (a, b) in adapter.heads.items():
            out.heads[head][0][...] += coef * a
            out.heads[head][1][...] += coef * b
    return out


@dataclass(frozen=True)
class HistoryRow:
    """One training-history record; client_id -1 marks the aggregated model."""

    round: int
    client_id: int
    loss: float
    chip_at_1: float | None = None


def candidate_sets(
    model: SurrogateModel,
    adapter: LoraAdapter,
    test_corpus: Corpus,
    config: TrainConfig,
) -> list[CandidateSet]:
    """Sample config.n_candidates designs per test description.

    The per-description stream is keyed on (config.seed, description index),
    so evaluation is deterministic, independent of scoring order, and paired
    across adapters (the same underlying draws are reused for every model
    being compared).
    """
    sets = []
    for i, rec in enumerate(test_corpus):
        cands = generate_candidates(
            model,
            adapter,
            rec.instruction,
            n=config.n_candidates,
            temperature=config.temperature,
            seed=child_seed(config.seed, EVAL_STREAM_TAG, i),
        )
        sets.append(
            CandidateSet(
                description_id=rec.id,
                gt=rec.metrics,
                candidates=tuple(metrics for _, metrics in cands),
            )
        )
    return sets


def evaluate_adapter(
    model: SurrogateModel,
    adapter: LoraAdapter,
    test_corpus: Corpus,
    thresholds: SigmaThresholds,
    config: TrainConfig,
    ks: tuple[int, ...] = (1,),
    slack_mode: str = "literal",
) -> EvalReport:
    """Chip@k of one adapter over a test corpus."""
    sets = candidate_sets(model, adapter, test_corpus, config)
    return chip_at_k(sets, thresholds, ks, slack_mode)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else math.nan


def _eval_args_ok(eval_corpus, thresholds):
    if (eval_corpus is None) != (thresholds is None):
        raise ValidationError("eval_corpus and thresholds must be given together")


def run_federated(
    corpora: list[Corpus],
    config: TrainConfig,
    eval_corpus: Corpus | None = None,
    thresholds: SigmaThresholds | None = None,
    transcript: list[bytes] | None = None,
) -> tuple[LoraAdapter, list[HistoryRow]]:
    """FedAvg over the client corpora for config.rounds rounds.

    Every client update crosses the serialization boundary; pass `transcript`
    to capture the raw bytes (e.g. for a privacy audit). When `eval_corpus`
    and `thresholds` are given, the aggregated adapter is scored with Chip@1
    after each round on a client_id = -1 history row.
    """
    if not corpora:
        raise ValidationError("need at least one client corpus")
    _eval_args_ok(eval_corpus, thresholds)
    model = SurrogateModel.create(config.seed)
    global_adapter = LoraAdapter.init(model, config.lora_rank, config.lora_alpha, config.seed)
    clients = [make_client(i, corpus, config.seed) for i, corpus in enumerate(corpora)]
    history: list[HistoryRow] = []
    for rnd in range(1, config.rounds + 1):
        updates = []
        round_losses = []
        for client in clients:  # ascending client_id; streams are independent
            client.adapter = global_adapter.copy()
            client.optimizer = AdamWState(client.adapter)  # fresh state per broadcast
            trained, losses = local_train(client, model, config)
            raw = encode_update(
                ClientUpdate(
                    client_id=client.client_id,
                    round=rnd,
                    n_examples=len(client.corpus),
                    adapter=trained,
                )
            )
            if transcript is not None:
                transcript.append(raw)
            updates.append(decode_update(raw))
            mean_loss = _mean(losses)
            round_losses.append(mean_loss)
            history.append(HistoryRow(rnd, client.client_id, mean_loss))
        global_adapter = fedavg(
            [u.adapter for u in updates], [u.n_examples for u in updates]
        )
        if eval_corpus is not None:
            report = evaluate_adapter(
                model, global_adapter, eval_corpus, thresholds, config, ks=(1,)
            )
            history.append(
                HistoryRow(rnd, -1, _mean(round_losses), report.chip_at_k[1])
            )
    return global_adapter, history


def _train_single(
    client: ClientState,
    model: SurrogateModel,
    config: TrainConfig,
    eval_corpus: Corpus | None,
    thresholds: SigmaThresholds | None,
) -> tuple[LoraAdapter, list[HistoryRow]]:
    """Isolated rounds-loop for one client (used by centralized and independent)."""
    client.adapter = LoraAdapter.init(model, config.lora_rank, config.lora_alpha, config.seed)
    history: list[HistoryRow] = []
    for rnd in range(1, config.rounds + 1):
        client.optimizer = AdamWState(client.adapter)
        _, losses = local_train(client, model, config)
        chip1 = None
        if eval_corpus is not None:
            report = evaluate_adapter(
                model, client.adapter, eval_corpus, thresholds, config, ks=(1,)
            )
            chip1 = report.chip_at_k[1]
        history.append(HistoryRow(rnd, client.client_id, _mean(losses), chip1))
    return client.adapter, history


def run_centralized(
    corpora: list[Corpus],
    config: TrainConfig,
    eval_corpus: Corpus | None = None,
    thresholds: SigmaThresholds | None = None,
) -> tuple[LoraAdapter, list[HistoryRow]]:
    """Train one site on the concatenation of all client corpora.

    Epoch budgets carry over directly (one epoch now spans the combined
    data). A fixed-step budget is multiplied by the number of client corpora
    so the single site gets the same total compute the federation spends
    per round; with a single corpus this reduces to the client's own budget.
    """
    if not corpora:
        raise ValidationError("need at least one corpus")
    _eval_args_ok(eval_corpus, thresholds)
    if config.steps_per_round is not None:
        config = replace(config, steps_per_round=config.steps_per_round * len(corpora))
    combined = Corpus(tuple(rec for corpus in corpora for rec in corpus))
    model = SurrogateModel.create(config.seed)
    client = make_client(0, combined, config.seed)
    return _train_single(client, model, config, eval_corpus, thresholds)


def run_independent(
    corpora: list[Corpus],
    config: TrainConfig,
    eval_corpus: Corpus | None = None,
    thresholds: SigmaThresholds | None = None,
) -> list[tuple[LoraAdapter, list[HistoryRow]]]:
    """Train each client in isolation; no aggregation, no communication."""
    if not corpora:
        raise ValidationError("need at least one corpus")
    _eval_args_ok(eval_corpus, thresholds)
    model = SurrogateModel.create(config.seed)
    results = []
    for i, corpus in enumerate(corpora):
        client = make_client(i, corpus, config.seed)
        results.append(_train_single(client, model, config, eval_corpus, thresholds))
    return results
