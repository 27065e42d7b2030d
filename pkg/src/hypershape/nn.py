"""Layers, optimizer, and differentiable hyperbolic ops on the tensor engine."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ContractViolationError
from .tensor import Tensor

NEG_INF = -1e9  # additive attention mask value


def param(data: np.ndarray) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float32), requires_grad=True)


class Module:
    """Minimal parameter container; children are discovered by attribute walk."""

    def params(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                out[name] = value
            elif isinstance(value, Module):
                for sub, p in value.params().items():
                    out[f"{name}.{sub}"] = p
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        for sub, p in item.params().items():
                            out[f"{name}.{i}.{sub}"] = p
        return out

    def load_state(self, state: dict[str, np.ndarray]):
        params = self.params()
        missing = set(params) - set(state)
        if missing:
            raise ContractViolationError(f"missing parameters: {sorted(missing)[:5]}")
        for name, p in params.items():
            arr = np.asarray(state[name], dtype=p.dtype)
            if arr.shape != p.shape:
                raise ContractViolationError(
                    f"shape mismatch for {name}: {arr.shape} vs {p.shape}"
                )
            p.data[...] = arr

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params().items()}


def _init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    return rng.standard_normal(shape).astype(np.float32) / np.sqrt(fan_in)


class Linear(Module):
    def __init__(self, rng, d_in: int, d_out: int, bias: bool = True):
        self.w = param(_init(rng, (d_in, d_out), d_in))
        self.b = param(np.zeros(d_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = T.matmul(x, self.w)
        return T.add(out, self.b) if self.b is not None else out


class Embedding(Module):
    def __init__(self, rng, vocab: int, dim: int):
        self.table = param(rng.standard_normal((vocab, dim)).astype(np.float32) * 0.02)

    def __call__(self, ids: np.ndarray) -> Tensor:
        return T.embedding_lookup(self.table, ids)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = param(np.ones(dim))
        self.beta = param(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = T.tensor_mean(x, axis=-1, keepdims=True)
        centered = x - mu
        var = T.tensor_mean(T.mul(centered, centered), axis=-1, keepdims=True)
        normed = T.div(centered, T.sqrt(T.add(var, self.eps)))
        return T.add(T.mul(normed, self.gamma), self.beta)


class GroupNorm(Module):
    def __init__(self, groups: int, channels: int):
        self.groups = groups
        self.gamma = param(np.ones(channels))
        self.beta = param(np.zeros(channels))

    def __call__(self, x: Tensor) -> Tensor:
        return T.group_norm(x, self.groups, self.gamma, self.beta)


def split_heads(x: Tensor, heads: int) -> Tensor:
    """(N, L, D) -> (N, heads, L, D/heads)."""
    n, l, d = x.shape
    return T.transpose(T.reshape(x, (n, l, heads, d // heads)), (0, 2, 1, 3))


def merge_heads(x: Tensor) -> Tensor:
    n, h, l, dh = x.shape
    return T.reshape(T.transpose(x, (0, 2, 1, 3)), (n, l, h * dh))


class MultiHeadAttention(Module):
    """Attention of queries (N, Lq, D) over keys/values (N, Lk, D)."""

    def __init__(self, rng, dim: int, heads: int, kv_dim: int | None = None):
        if dim % heads:
            raise ContractViolationError("model dim must divide by head count")
        self.heads = heads
        self.wq = Linear(rng, dim, dim)
        self.wk = Linear(rng, kv_dim or dim, dim)
        self.wv = Linear(rng, kv_dim or dim, dim)
        self.wo = Linear(rng, dim, dim)

    def __call__(
        self, q: Tensor, kv: Tensor, key_mask: np.ndarray | None = None
    ) -> Tensor:
        qh = split_heads(self.wq(q), self.heads)
        kh = split_heads(self.wk(kv), self.heads)
        vh = split_heads(self.wv(kv), self.heads)
        mask = None
        if key_mask is not None:
            # key_mask: (N, Lk) with 1 = attendable; broadcast over heads/queries
            mask = np.where(key_mask[:, None, None, :] > 0, 0.0, NEG_INF)
        out = T.scaled_dot_attention(qh, kh, vh, mask=mask)
        return self.wo(merge_heads(out))


class Conv3d(Module):
    """3-D convolution layer over (N, C, D, H, W) with scaled-normal init."""

    def __init__(
        self, rng, c_in: int, c_out: int, k: int = 3, stride: int = 1, padding: int = 1
    ):
        self.stride = stride
        self.padding = padding
        self.w = param(rng.standard_normal((c_out, c_in, k, k, k)) / np.sqrt(c_in * k**3))
        self.b = param(np.zeros(c_out))

    def __call__(self, x: Tensor) -> Tensor:
        return T.conv3d(x, self.w, self.b, stride=self.stride, padding=self.padding)


class FeedForward(Module):
    def __init__(self, rng, dim: int, hidden: int):
        self.fc1 = Linear(rng, dim, hidden)
        self.fc2 = Linear(rng, hidden, dim)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(T.relu(self.fc1(x)))


class TransformerBlock(Module):
    """Pre-norm self-attention + feed-forward with residuals."""

    def __init__(self, rng, dim: int, heads: int, ff_mult: int = 4):
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(rng, dim, heads)
        self.norm2 = LayerNorm(dim)
        self.ff = FeedForward(rng, dim, dim * ff_mult)

    def __call__(self, x: Tensor, key_mask: np.ndarray | None = None) -> Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h, key_mask)
        return x + self.ff(self.norm2(x))


def positional_encoding(length: int, dim: int) -> np.ndarray:
    """Standard sinusoidal position encoding, (length, dim) float32."""
    pos = np.arange(length)[:, None]
    i = np.arange(dim // 2)[None, :]
    angles = pos / (10000.0 ** (2 * i / dim))
    enc = np.zeros((length, dim), dtype=np.float32)
    enc[:, 0::2] = np.sin(angles)
    enc[:, 1::2] = np.cos(angles)
    return enc


def timestep_embedding(t: np.ndarray, dim: int) -> np.ndarray:
    """Sinusoidal embedding of integer timesteps, (batch, dim)."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    args = np.asarray(t, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(args), np.cos(args)], axis=-1).astype(np.float32)


# ---------------------------------------------------------------------------
# differentiable Poincare-ball ops (origin-based, tangent-space friendly)
# ---------------------------------------------------------------------------


def h_norm(x: Tensor) -> Tensor:
    sq = T.tensor_sum(T.mul(x, x), axis=-1, keepdims=True)
    return T.sqrt(T.add(sq, 1e-15))


def h_exp0(v: Tensor, c: float = 1.0) -> Tensor:
    """Differentiable exp map at the origin; output norm < 1/sqrt(c) by tanh."""
    sqrt_c = float(np.sqrt(c))
    n = h_norm(v)
    return T.mul(T.div(T.tanh(T.mul(n, sqrt_c)), T.mul(n, sqrt_c)), v)


def h_log0(y: Tensor, c: float = 1.0) -> Tensor:
    sqrt_c = float(np.sqrt(c))
    n = h_norm(y)
    return T.mul(T.div(T.artanh(T.mul(n, sqrt_c)), T.mul(n, sqrt_c)), y)


def h_dist0(x: Tensor, c: float = 1.0) -> Tensor:
    sqrt_c = float(np.sqrt(c))
    n = h_norm(x)
    return T.mul(T.artanh(T.mul(n, sqrt_c)), 2.0 / sqrt_c)


def h_mobius_matvec(w: Tensor, x: Tensor, c: float = 1.0) -> Tensor:
    """Mobius action of matrix w (d_in, d_out) on ball points x (..., d_in)."""
    sqrt_c = float(np.sqrt(c))
    mx = T.matmul(x, w)
    x_n = h_norm(x)
    mx_n = h_norm(mx)
    ratio = T.div(mx_n, x_n)
    scaled = T.mul(T.tanh(T.mul(ratio, T.artanh(T.mul(x_n, sqrt_c)))), 1.0 / sqrt_c)
    return T.mul(T.div(scaled, mx_n), mx)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-5,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = dict(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.t += 1
        for k, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            m_hat = self.m[k] / (1 - self.b1**self.t)
            v_hat = self.v[k] / (1 - self.b2**self.t)
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
