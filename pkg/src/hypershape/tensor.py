"""A minimal reverse-mode automatic differentiation engine on numpy.

The operation set is closed-world: exactly what the VQ-VAE, the dual-branch
denoiser, and the two text conditioners need. Forward values are plain
numpy arrays; backward walks the recorded graph in reverse topological
order, so gradients are deterministic for a fixed graph.

Training runs in float32 by default; gradient checks build the same graphs
in float64.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolationError

ARTANH_EPS = 1e-5  # matches the ball boundary margin

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording (inference / sampling fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data)
        if self.data.dtype not in (np.float32, np.float64):
            self.data = self.data.astype(np.float32)
        self.requires_grad = requires_grad and _grad_enabled
        self.grad: np.ndarray | None = None
        self._backward: Callable[[np.ndarray], None] | None = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -other)

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return tensor_slice(self, idx)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis, keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, axes):
        return transpose(self, axes)

    def backward(self):
        backward(self)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _make(data: np.ndarray, parents: Sequence[Tensor], bw) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = bw
    return out


def _accumulate(t: Tensor, grad: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += grad.astype(t.data.dtype, copy=False)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, (g, s) in enumerate(zip(grad.shape, shape)):
        if s == 1 and g != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise / arithmetic
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data + b.data

    def bw(grad):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(grad, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(grad, b.shape))

    return _make(out_data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data * b.data

    def bw(grad):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(grad * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(grad * a.data, b.shape))

    return _make(out_data, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data / b.data

    def bw(grad):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(grad / b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-grad * a.data / (b.data**2), b.shape))

    return _make(out_data, (a, b), bw)


def tanh(x: Tensor) -> Tensor:
    x = _wrap(x)
    out_data = np.tanh(x.data)

    def bw(grad):
        _accumulate(x, grad * (1 - out_data**2))

    return _make(out_data, (x,), bw)


def artanh(x: Tensor) -> Tensor:
    """Inverse hyperbolic tangent; input clamped to |x| <= 1 - ARTANH_EPS."""
    x = _wrap(x)
    clamped = np.clip(x.data, -1 + ARTANH_EPS, 1 - ARTANH_EPS)
    out_data = np.arctanh(clamped)

    def bw(grad):
        _accumulate(x, grad / (1 - clamped**2))

    return _make(out_data, (x,), bw)


def sqrt(x: Tensor) -> Tensor:
    x = _wrap(x)
    out_data = np.sqrt(x.data)

    def bw(grad):
        _accumulate(x, grad * 0.5 / np.maximum(out_data, 1e-12))

    return _make(out_data, (x,), bw)


def relu(x: Tensor) -> Tensor:
    x = _wrap(x)
    out_data = np.maximum(x.data, 0)

    def bw(grad):
        _accumulate(x, grad * (x.data > 0))

    return _make(out_data, (x,), bw)


def absolute(x: Tensor) -> Tensor:
    x = _wrap(x)
    out_data = np.abs(x.data)

    def bw(grad):
        _accumulate(x, grad * np.sign(x.data))

    return _make(out_data, (x,), bw)


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; gradient passes only where the input is inside."""
    x = _wrap(x)
    out_data = np.clip(x.data, lo, hi)

    def bw(grad):
        inside = (x.data > lo) & (x.data < hi)
        _accumulate(x, grad * inside)

    return _make(out_data, (x,), bw)


# ---------------------------------------------------------------------------
# reductions / shape
# ---------------------------------------------------------------------------


def tensor_sum(x: Tensor, axis=None, keepdims=False) -> Tensor:
    x = _wrap(x)
    out_data = x.data.sum(axis=axis, keepdims=keepdims)

    def bw(grad):
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(x, np.broadcast_to(g, x.shape))

    return _make(out_data, (x,), bw)


def tensor_mean(x: Tensor, axis=None, keepdims=False) -> Tensor:
    x = _wrap(x)
    count = x.data.size if axis is None else np.prod(
        [x.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))]
    )
    return mul(tensor_sum(x, axis, keepdims), 1.0 / float(count))


def reshape(x: Tensor, shape) -> Tensor:
    x = _wrap(x)
    out_data = x.data.reshape(shape)

    def bw(grad):
        _accumulate(x, grad.reshape(x.shape))

    return _make(out_data, (x,), bw)


def transpose(x: Tensor, axes) -> Tensor:
    x = _wrap(x)
    out_data = np.transpose(x.data, axes)
    inv = np.argsort(axes)

    def bw(grad):
        _accumulate(x, np.transpose(grad, inv))

    return _make(out_data, (x,), bw)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(grad):
        for t, g in zip(tensors, np.split(grad, splits, axis=axis)):
            if t.requires_grad:
                _accumulate(t, g)

    return _make(out_data, tensors, bw)


def tensor_slice(x: Tensor, idx) -> Tensor:
    x = _wrap(x)
    out_data = x.data[idx]

    def bw(grad):
        full = np.zeros_like(x.data)
        np.add.at(full, idx, grad)
        _accumulate(x, full)

    return _make(out_data, (x,), bw)


# ---------------------------------------------------------------------------
# contractions
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 1 or b.ndim < 2:
        raise ContractViolationError("matmul requires at least 1-D @ 2-D operands")
    out_data = a.data @ b.data

    def bw(grad):
        if a.requires_grad:
            ga = grad @ np.swapaxes(b.data, -1, -2)
            _accumulate(a, _unbroadcast(ga, a.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ grad
            _accumulate(b, _unbroadcast(gb, b.shape))

    return _make(out_data, (a, b), bw)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    x = _wrap(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def bw(grad):
        dot = (grad * out_data).sum(axis=axis, keepdims=True)
        _accumulate(x, out_data * (grad - dot))

    return _make(out_data, (x,), bw)


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of `table` (vocab x dim) by integer `ids`."""
    table = _wrap(table)
    ids = np.asarray(ids)
    if ids.dtype.kind not in "iu":
        raise ContractViolationError("embedding ids must be integers")
    out_data = table.data[ids]

    def bw(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, grad)
        _accumulate(table, full)

    return _make(out_data, (table,), bw)


def scaled_dot_attention(
    q: Tensor, k: Tensor, v: Tensor, mask: np.ndarray | None = None
) -> Tensor:
    """softmax(Q K^T / sqrt(d_k) + mask) V over the last two axes.

    `mask` is an additive float array broadcastable to the score shape
    (use large negative values to exclude positions).
    """
    d_k = q.shape[-1]
    scores = mul(matmul(q, swap_last(k)), 1.0 / np.sqrt(d_k))
    if mask is not None:
        scores = add(scores, Tensor(mask.astype(scores.dtype)))
    return matmul(softmax(scores, axis=-1), v)


def swap_last(x: Tensor) -> Tensor:
    axes = list(range(x.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(x, axes)


# ---------------------------------------------------------------------------
# 3-D convolution and friends
# ---------------------------------------------------------------------------


def _conv3d_cols(xp: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Gather sliding windows: (N,C,Dp,Hp,Wp) -> (N, Do,Ho,Wo, C, k,k,k)."""
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k, k), axis=(2, 3, 4))
    win = win[:, :, ::stride, ::stride, ::stride]
    return np.moveaxis(win, 1, 4)


def conv3d(
    x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, padding: int = 0
) -> Tensor:
    """3-D convolution, im2col style.

    x: (N, C_in, D, H, W); w: (C_out, C_in, k, k, k); b: (C_out,).
    Output spatial size follows floor((S + 2p - k)/stride) + 1.
    """
    x, w = _wrap(x), _wrap(w)
    n, c_in, d, h, wd = x.shape
    c_out, c_in_w, k, k2, k3 = w.shape
    if c_in != c_in_w or k != k2 or k != k3:
        raise ContractViolationError(
            f"conv3d shape mismatch: input channels {c_in}, kernel {w.shape}"
        )
    if d + 2 * padding < k or h + 2 * padding < k or wd + 2 * padding < k:
        raise ContractViolationError("conv3d input smaller than kernel")
    p = padding
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p), (p, p))) if p else x.data
    cols = _conv3d_cols(xp, k, stride)  # (N, Do,Ho,Wo, C, k,k,k)
    do, ho, wo = cols.shape[1:4]
    cols_f = cols.reshape(n, do * ho * wo, c_in * k**3)
    w_f = w.data.reshape(c_out, c_in * k**3)
    out = cols_f @ w_f.T  # (N, L, C_out)
    if b is not None:
        out = out + b.data
    out_data = np.moveaxis(out, -1, 1).reshape(n, c_out, do, ho, wo)
    # the column buffer dominates memory at full resolution; drop it here and
    # rebuild it on demand in the backward pass so graphs with many convs
    # never hold more than one buffer at a time
    del cols, cols_f

    def bw(grad):
        g = grad.reshape(n, c_out, do * ho * wo).transpose(0, 2, 1)  # (N, L, C_out)
        if w.requires_grad:
            cols_b = _conv3d_cols(xp, k, stride).reshape(n * do * ho * wo, c_in * k**3)
            gw = np.ascontiguousarray(g.reshape(-1, c_out)).T @ cols_b
            del cols_b
            _accumulate(w, gw.reshape(w.shape))
        if b is not None and b.requires_grad:
            _accumulate(b, g.sum(axis=(0, 1)))
        if x.requires_grad:
            gcols = (g @ w_f).reshape(n, do, ho, wo, c_in, k, k, k)
            gxp = np.zeros(
                (n, c_in, d + 2 * p, h + 2 * p, wd + 2 * p), dtype=x.data.dtype
            )
            for kd in range(k):
                for kh in range(k):
                    for kw in range(k):
                        gxp[
                            :,
                            :,
                            kd : kd + stride * do : stride,
                            kh : kh + stride * ho : stride,
                            kw : kw + stride * wo : stride,
                        ] += np.moveaxis(gcols[..., kd, kh, kw], 4, 1)
            gx = gxp[:, :, p : p + d, p : p + h, p : p + wd] if p else gxp
            _accumulate(x, gx)

    parents = (x, w, b) if b is not None else (x, w)
    return _make(out_data, parents, bw)


def upsample_nearest3d(x: Tensor, factor: int) -> Tensor:
    """Nearest-neighbor upsampling of (N, C, D, H, W) by an integer factor."""
    x = _wrap(x)
    out_data = x.data.repeat(factor, 2).repeat(factor, 3).repeat(factor, 4)

    def bw(grad):
        n, c, d, h, w = x.shape
        g = grad.reshape(n, c, d, factor, h, factor, w, factor).sum(axis=(3, 5, 7))
        _accumulate(x, g)

    return _make(out_data, (x,), bw)


def avg_pool3d(x: Tensor, factor: int) -> Tensor:
    """Non-overlapping average pooling of (N, C, D, H, W)."""
    x = _wrap(x)
    n, c, d, h, w = x.shape
    if d % factor or h % factor or w % factor:
        raise ContractViolationError("avg_pool3d requires divisible spatial dims")
    out_data = x.data.reshape(
        n, c, d // factor, factor, h // factor, factor, w // factor, factor
    ).mean(axis=(3, 5, 7))

    def bw(grad):
        g = grad / factor**3
        g = g.repeat(factor, 2).repeat(factor, 3).repeat(factor, 4)
        _accumulate(x, g)

    return _make(out_data, (x,), bw)


def group_norm(
    x: Tensor, groups: int, gamma: Tensor, beta: Tensor, eps: float = 1e-5
) -> Tensor:
    """Group normalization over (N, C, *spatial); gamma/beta shaped (C,)."""
    n, c = x.shape[0], x.shape[1]
    if c % groups:
        raise ContractViolationError("channel count must divide by group count")
    spatial = x.shape[2:]
    xg = reshape(x, (n, groups, (c // groups) * int(np.prod(spatial, dtype=int))))
    mu = tensor_mean(xg, axis=2, keepdims=True)
    centered = xg - mu
    var = tensor_mean(mul(centered, centered), axis=2, keepdims=True)
    normed = div(centered, sqrt(add(var, eps)))
    normed = reshape(normed, x.shape)
    gshape = (1, c) + (1,) * len(spatial)
    return add(mul(normed, reshape(gamma, gshape)), reshape(beta, gshape))


# ---------------------------------------------------------------------------
# backward pass and gradient checking
# ---------------------------------------------------------------------------


def backward(loss: Tensor):
    """Accumulate d(loss)/d(leaf) into every reachable requires_grad leaf."""
    if loss.data.size != 1:
        raise ContractViolationError("backward() requires a scalar loss")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def grad_check(
    f: Callable[..., Tensor], xs: Tensor | Sequence[Tensor], h: float = 1e-4
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must be scalar-valued. All inputs are perturbed element by element,
    so keep the shapes small. Relative error uses max(1, |analytic|) as the
    denominator.
    """
    if isinstance(xs, Tensor):
        xs = [xs]
    xs = [Tensor(x.data.astype(np.float64), requires_grad=True) for x in xs]
    loss = f(*xs)
    backward(loss)
    worst = 0.0
    for x in xs:
        analytic = np.zeros_like(x.data) if x.grad is None else x.grad
        flat = x.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f(*xs).item()
            flat[i] = orig - h
            down = f(*xs).item()
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            a = analytic.reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    return worst
