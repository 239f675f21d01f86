"""Bag-of-token featurization of design instructions.

Stands in for tokenization of a real language model: instructions are
lowercased, split into alphanumeric tokens, and counted against a fixed
vocabulary of unigrams and adjacent-pair bigrams derived from the instruction
template. Bigrams matter because bare numbers are ambiguous across fields
("data width 8 bits" vs "tiling factor 8"); the (anchor word, value) pair is
unique per field. Unknown tokens share a single OOV slot and every vector
carries a constant bias feature.
"""

from __future__ import annotations

import re

import numpy as np

from ..corpus import (
    APPROX_MODES,
    ARRAY_DIMS,
    DATA_WIDTH_MAX,
    DATA_WIDTH_MIN,
    DesignParams,
    TILING_CHOICES,
)

HEAD_FIELDS = ("array_dim", "data_width", "approx_mode", "tiling")

HEAD_VALUES: dict[str, tuple[int, ...]] = {
    "array_dim": ARRAY_DIMS,
    "data_width": tuple(range(DATA_WIDTH_MIN, DATA_WIDTH_MAX + 1)),
    "approx_mode": APPROX_MODES,
    "tiling": TILING_CHOICES,
}

HEAD_VALUE_INDEX = {
    field: {value: i for i, value in enumerate(values)}
    for field, values in HEAD_VALUES.items()
}

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _template_vocab() -> tuple[tuple[str, ...], tuple[tuple[str, str], ...]]:
    """Collect every unigram and bigram reachable from the instruction template.

    Value slots are never adjacent in the template, so varying one field at a
    time covers the full bigram set.
    """
    base = {field: values[0] for field, values in HEAD_VALUES.items()}
    unigrams: set[str] = set()
    bigrams: set[tuple[str, str]] = set()
    renders = [DesignParams(**base).render_instruction()]
    for field, values in HEAD_VALUES.items():
        for value in values:
            params = dict(base)
            params[field] = value
            renders.append(DesignParams(**params).render_instruction())
    for text in renders:
        toks = tokenize(text)
        unigrams.update(toks)
        bigrams.update(zip(toks, toks[1:]))
    return tuple(sorted(unigrams)), tuple(sorted(bigrams))


_UNIGRAMS, _BIGRAMS = _template_vocab()
_UNI_INDEX = {tok: i for i, tok in enumerate(_UNIGRAMS)}
_BI_INDEX = {pair: len(_UNIGRAMS) + i for i, pair in enumerate(_BIGRAMS)}
OOV_INDEX = len(_UNIGRAMS) + len(_BIGRAMS)
BIAS_INDEX = OOV_INDEX + 1
FEATURE_DIM = BIAS_INDEX + 1


def featurize(instruction: str) -> np.ndarray:
    """Deterministic count vector of shape (FEATURE_DIM,) for one instruction."""
    x = np.zeros(FEATURE_DIM, dtype=float)
    toks = tokenize(instruction)
    for tok in toks:
        x[_UNI_INDEX.get(tok, OOV_INDEX)] += 1.0
    for pair in zip(toks, toks[1:]):
        idx = _BI_INDEX.get(pair)
        if idx is not None:
            x[idx] += 1.0
    x[BIAS_INDEX] = 1.0
    return x


def featurize_all(instructions: list[str]) -> np.ndarray:
    return np.stack([featurize(text) for text in instructions])


def owned_feature_indices(token: str) -> set[int]:
    """Feature slots that mention `token` (its unigram plus any bigram with it)."""
    owned = set()
    if token in _UNI_INDEX:
        owned.add(_UNI_INDEX[token])
    for pair, idx in _BI_INDEX.items():
        if token in pair:
            owned.add(idx)
    return owned
