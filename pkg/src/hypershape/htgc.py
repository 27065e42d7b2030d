"""Hyperbolic text-graph convolution conditioner.

Token features start Euclidean (embedding + sinusoidal position + linear),
are lifted to the Poincare ball, pass through stacked hyperbolic graph
convolutions over the caption's syntax graph, and come back through the
log map as the per-token condition sequence C2.

Neighbor aggregation happens in the tangent space at the origin
(log -> row-normalized adjacency mean -> exp), the standard HGCN choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from . import tensor as T
from . import vocab
from .errors import ContractViolationError
from .tensor import Tensor
from .textgraph import SyntaxGraph


@dataclass
class HtgcConfig:
    vocab_size: int = 0  # 0 = grammar vocabulary
    embed_dim: int = 64
    hidden_dim: int = 64
    layers: int = 2
    curvature: float = 1.0
    max_tokens: int = 32

    def __post_init__(self):
        if self.vocab_size == 0:
            self.vocab_size = vocab.size()
        if min(self.embed_dim, self.hidden_dim) <= 0 or self.layers < 1:
            raise ContractViolationError("dims must be positive, layers >= 1")
        if self.curvature <= 0:
            raise ContractViolationError("curvature must be positive")


@dataclass(frozen=True)
class ConditionSeq:
    """Per-token conditioning vectors plus validity mask."""

    values: Tensor  # (batch, max_tokens, dim)
    mask: np.ndarray  # (batch, max_tokens), 1 = real token

    def __post_init__(self):
        if self.values.shape[:2] != self.mask.shape:
            raise ContractViolationError("mask must match (batch, tokens)")


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """Row-normalize D^-1 M; padded rows fall back to self-loops."""
    adj = np.asarray(adj, dtype=np.float32)
    deg = adj.sum(axis=-1, keepdims=True)
    safe = np.where(deg > 0, deg, 1.0)
    out = adj / safe
    # padding rows (all-zero) aggregate only themselves
    n = adj.shape[-1]
    eye = np.eye(n, dtype=np.float32)
    if adj.ndim == 3:
        eye = np.broadcast_to(eye, adj.shape)
    return np.where(deg > 0, out, eye)


def pack_graphs(graphs: list[SyntaxGraph], max_tokens: int):
    """Pad a batch of syntax graphs to (ids, mask, adjacency)."""
    ids = np.zeros((len(graphs), max_tokens), dtype=np.int64)
    mask = np.zeros((len(graphs), max_tokens), dtype=np.float32)
    adj = np.zeros((len(graphs), max_tokens, max_tokens), dtype=np.float32)
    for b, g in enumerate(graphs):
        toks = [t.form for t in g.tokens]
        ids[b], mask[b] = vocab.encode(toks, max_tokens)
        n = len(toks)
        adj[b, :n, :n] = g.adjacency
    return ids, mask, adj


class Htgc(nn.Module):
    def __init__(self, config: HtgcConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        self.embedding = nn.Embedding(rng, config.vocab_size, config.embed_dim)
        self.proj_in = nn.Linear(rng, config.embed_dim, config.hidden_dim)
        self.layer_weights = [
            nn.param(
                np.eye(config.hidden_dim)
                + 0.01 * rng.standard_normal((config.hidden_dim, config.hidden_dim))
            )
            for _ in range(config.layers)
        ]
        self.pos = nn.positional_encoding(config.max_tokens, config.embed_dim)

    def params(self):
        out = super().params()
        for i, w in enumerate(self.layer_weights):
            out[f"layer_weights.{i}"] = w
        return out

    def init_node_features(self, ids: np.ndarray, mask: np.ndarray) -> Tensor:
        """Euclidean node init: embedding + position encoding + linear."""
        emb = T.add(self.embedding(ids), Tensor(self.pos[None, : ids.shape[1]]))
        feats = self.proj_in(emb)
        return T.mul(feats, Tensor(mask[..., None]))  # padding slots stay zero

    def hgc_layer(self, nodes: Tensor, w: Tensor, norm_adj: np.ndarray) -> Tensor:
        """One hyperbolic graph convolution on ball points `nodes`."""
        c = self.config.curvature
        h = nn.h_mobius_matvec(w, nodes, c)
        agg = T.matmul(Tensor(norm_adj), nn.h_log0(h, c))
        h = nn.h_exp0(agg, c)
        return nn.h_exp0(T.relu(nn.h_log0(h, c)), c)

    def encode_graph(self, graphs: list[SyntaxGraph]) -> ConditionSeq:
        """Full pass: init -> exp lift -> stacked HGC -> log -> C2."""
        ids, mask, adj = pack_graphs(graphs, self.config.max_tokens)
        return self.encode_packed(ids, mask, adj)

    def encode_packed(
        self, ids: np.ndarray, mask: np.ndarray, adj: np.ndarray
    ) -> ConditionSeq:
        c = self.config.curvature
        norm_adj = normalized_adjacency(adj)
        x = nn.h_exp0(self.init_node_features(ids, mask), c)
        for w in self.layer_weights:
            x = self.hgc_layer(x, w, norm_adj)
        out = T.mul(nn.h_log0(x, c), Tensor(mask[..., None]))
        return ConditionSeq(out, mask)
