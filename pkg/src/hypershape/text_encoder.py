"""Transformer text encoder with a hyperbolic bottleneck, producing C1.

Embedding + position encoding feed a pre-norm encoder stack; the head
lifts token features onto the Poincare ball, applies a learned Mobius
matrix action, maps back, and runs adaptation transformer layers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import manifold, nn
from . import tensor as T
from . import vocab
from .errors import ContractViolationError
from .htgc import ConditionSeq
from .tensor import Tensor


@dataclass
class HtieConfig:
    vocab_size: int = 0
    model_dim: int = 128
    heads: int = 4
    encoder_layers: int = 2
    adaptation_layers: int = 2
    curvature: float = 1.0
    max_tokens: int = 32

    def __post_init__(self):
        if self.vocab_size == 0:
            self.vocab_size = vocab.size()
        if self.model_dim % self.heads:
            raise ContractViolationError("model dim must divide by head count")
        if min(self.encoder_layers, self.adaptation_layers) < 1:
            raise ContractViolationError("layer counts must be >= 1")
        if self.curvature <= 0:
            raise ContractViolationError("curvature must be positive")


class Htie(nn.Module):
    def __init__(self, config: HtieConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        d = config.model_dim
        self.embedding = nn.Embedding(rng, config.vocab_size, d)
        self.encoder = [
            nn.TransformerBlock(rng, d, config.heads)
            for _ in range(config.encoder_layers)
        ]
        # pre-scale keeps the ball lift well inside the boundary at init
        self.ball_scale = nn.param(np.array([0.1], dtype=np.float32))
        self.mobius_w = nn.param(
            np.eye(d) + 0.01 * rng.standard_normal((d, d))
        )
        self.adaptation = [
            nn.TransformerBlock(rng, d, config.heads)
            for _ in range(config.adaptation_layers)
        ]
        self.norm_out = nn.LayerNorm(d)
        self.pos = nn.positional_encoding(config.max_tokens, d)

    def encode_ids(self, ids: np.ndarray, mask: np.ndarray) -> ConditionSeq:
        c = self.config.curvature
        x = T.add(self.embedding(ids), Tensor(self.pos[None, : ids.shape[1]]))
        for block in self.encoder:
            x = block(x, key_mask=mask)
        # hyperbolic bottleneck: lift, Mobius action, project back
        ball = nn.h_exp0(T.mul(x, self.ball_scale), c)
        ball = nn.h_mobius_matvec(self.mobius_w, ball, c)
        x = nn.h_log0(ball, c)
        for block in self.adaptation:
            x = block(x, key_mask=mask)
        out = T.mul(self.norm_out(x), Tensor(mask[..., None]))
        return ConditionSeq(out, mask)

    def encode_text(self, token_lists: list[list[str]]) -> ConditionSeq:
        ids = np.zeros((len(token_lists), self.config.max_tokens), dtype=np.int64)
        mask = np.zeros((len(token_lists), self.config.max_tokens), dtype=np.float32)
        for i, toks in enumerate(token_lists):
            ids[i], mask[i] = vocab.encode(toks, self.config.max_tokens)
        return self.encode_ids(ids, mask)

    def export_embeddings(self, captions: list[str], path):
        """Write per-caption pooled embeddings lifted onto the ball.

        CSV rows: id, caption length, dist0, then the coordinates.
        """
        from .textgraph import tokenize

        c = self.config.curvature
        rows = []
        for i, caption in enumerate(captions):
            toks = tokenize(caption)
            with T.no_grad():
                cond = self.encode_text([toks])
            pooled = cond.values.data[0][cond.mask[0] > 0].mean(axis=0)
            point = manifold.exp0(manifold.TangentTensor(pooled[None], c))
            d0 = manifold.dist0(point)[0]
            rows.append([i, len(toks), f"{d0:.8f}"] + [f"{v:.8f}" for v in point.values[0]])
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(
                    ["id", "caption_length", "dist0"]
                    + [f"x{j}" for j in range(self.config.model_dim)]
                )
                writer.writerows(rows)
        except OSError as e:
            raise OSError(f"failed writing embeddings to {path}: {e}") from e
