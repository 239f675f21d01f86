"""Federated fine-tuning engine: surrogate model, LoRA adapters, FedAvg."""

from .features import (
    FEATURE_DIM,
    HEAD_FIELDS,
    HEAD_VALUES,
    featurize,
    featurize_all,
    owned_feature_indices,
    tokenize,
)
from .federation import (
    ClientUpdate,
    HistoryRow,
    candidate_sets,
    decode_update,
    encode_update,
    evaluate_adapter,
    fedavg,
    run_centralized,
    run_federated,
    run_independent,
)
from .model import (
    LoraAdapter,
    SurrogateModel,
    forward,
    forward_batch,
    generate_candidates,
    softmax,
)
from .training import (
    AdamWState,
    ClientState,
    TrainConfig,
    adamw_step,
    cross_entropy,
    grad,
    local_train,
    make_client,
)

__all__ = [
    "FEATURE_DIM",
    "HEAD_FIELDS",
    "HEAD_VALUES",
    "featurize",
    "featurize_all",
    "owned_feature_indices",
    "tokenize",
    "ClientUpdate",
    "HistoryRow",
    "candidate_sets",
    "decode_update",
    "encode_update",
    "evaluate_adapter",
    "fedavg",
    "run_centralized",
    "run_federated",
    "run_independent",
    "LoraAdapter",
    "SurrogateModel",
    "forward",
    "forward_batch",
    "generate_candidates",
    "softmax",
    "AdamWState",
    "ClientState",
    "TrainConfig",
    "adamw_step",
    "cross_entropy",
    "grad",
    "local_train",
    "make_client",
]
