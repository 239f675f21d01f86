"""Privacy audit over serialized client-to-server messages.

A message may carry adapter tensors, their shapes, the dataset *size*, and
routing metadata; it must never carry instruction text or raw PPA metric
values from the client's corpus.
"""

import json

ALLOWED_TOP_KEYS = {"client_id", "round", "n_examples", "adapter"}
ALLOWED_ADAPTER_KEYS = {"rank", "alpha", "heads"}


def audit_transcript(transcript: list[bytes], corpora) -> list[str]:
    """Return a list of violation descriptions (empty when the audit passes)."""
    violations: list[str] = []
    instructions = [rec.instruction for corpus in corpora for rec in corpus]
    metric_values = {
        value
        for corpus in corpora
        for rec in corpus
        for value in rec.metrics.as_tuple()
    }
    for i, raw in enumerate(transcript):
        text = raw.decode("utf-8")
        obj = json.loads(text)

        extra = set(obj) - ALLOWED_TOP_KEYS
        if extra:
            violations.append(f"message {i}: unexpected top-level keys {sorted(extra)}")
        extra = set(obj.get("adapter", {})) - ALLOWED_ADAPTER_KEYS
        if extra:
            violations.append(f"message {i}: unexpected adapter keys {sorted(extra)}")

        for instruction in instructions:
            if instruction in text:
                violations.append(f"message {i}: contains instruction text")
                break

        tensor_leaves = set()
        for head in obj["adapter"]["heads"].values():
            for matrix in (head["A"], head["B"]):
                for row in matrix:
                    tensor_leaves.update(row)
        leaked = tensor_leaves & metric_values
        if leaked:
            violations.append(
                f"message {i}: adapter tensors contain raw metric values {sorted(leaked)[:3]}"
            )
    return violations
