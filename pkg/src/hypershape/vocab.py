"""Closed vocabulary of the synthetic caption grammar."""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError
from .textgraph import POS_LEXICON

PAD, UNK = "<pad>", "<unk>"
WORDS = [PAD, UNK] + sorted(POS_LEXICON)
WORD_TO_ID = {w: i for i, w in enumerate(WORDS)}
PAD_ID, UNK_ID = 0, 1


def size() -> int:
    return len(WORDS)


def encode(tokens: list[str], max_tokens: int) -> tuple[np.ndarray, np.ndarray]:
    """Token ids and validity mask, padded to max_tokens."""
    if len(tokens) > max_tokens:
        raise ContractViolationError(
            f"caption has {len(tokens)} tokens, capacity is {max_tokens}"
        )
    ids = np.full(max_tokens, PAD_ID, dtype=np.int64)
    mask = np.zeros(max_tokens, dtype=np.float32)
    for i, tok in enumerate(tokens):
        ids[i] = WORD_TO_ID.get(tok, UNK_ID)
        mask[i] = 1.0
    return ids, mask
