"""TSDF shape representation and the VQ-VAE that compresses it.

A shape is a truncated signed distance field on an R^3 voxel lattice
(negative inside, clamped to +-tau grid units; tau = 0.1 * R). The VQ-VAE
downsamples by a factor f to a d^3 x m latent, snaps each latent vector to
a codebook entry (straight-through gradients), and decodes back to R^3.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from . import tensor as T
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ContractViolationError, FormatError
from .tensor import Tensor

TSDF_MAGIC = b"TSDF"


def default_tau(resolution: int) -> float:
    return 0.1 * resolution


@dataclass(frozen=True)
class TsdfGrid:
    """R x R x R truncated signed distance values, indexed [x, y, z]."""

    values: np.ndarray
    tau: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        object.__setattr__(self, "values", v)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ContractViolationError(f"TSDF must be cubic, got {v.shape}")
        if v.shape[0] < 8:
            raise ContractViolationError("TSDF resolution must be >= 8")
        if np.any(np.abs(v) > self.tau + 1e-4):
            raise ContractViolationError("TSDF values exceed the truncation bound")

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    def occupancy(self) -> np.ndarray:
        return self.values < 0


@dataclass(frozen=True)
class LatentCode:
    """d x d x d x m latent produced by the encoder."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        object.__setattr__(self, "values", v)
        if v.ndim != 4 or len(set(v.shape[:3])) != 1:
            raise ContractViolationError(f"latent must be d^3 x m, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ContractViolationError("latent values must be finite")

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[3]


def write_tsdf(grid: TsdfGrid, path):
    """Magic "TSDF", u32 LE resolution, u32 reserved, R^3 LE f32 x-fastest."""
    with open(path, "wb") as f:
        f.write(TSDF_MAGIC)
        f.write(struct.pack("<II", grid.resolution, 0))
        f.write(grid.values.astype("<f4").flatten(order="F").tobytes())


def read_tsdf(path, tau: float | None = None) -> TsdfGrid:
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != TSDF_MAGIC:
            raise FormatError(f"{path}: bad TSDF magic {magic!r}")
        r, reserved = struct.unpack("<II", f.read(8))
        data = np.frombuffer(f.read(4 * r**3), dtype="<f4")
    if data.size != r**3:
        raise FormatError(f"{path}: truncated TSDF payload")
    values = data.reshape((r, r, r), order="F")
    return TsdfGrid(values, tau if tau is not None else default_tau(r))


# ---------------------------------------------------------------------------
# VQ-VAE
# ---------------------------------------------------------------------------


@dataclass
class VqvaeConfig:
    resolution: int = 32
    downsample: int = 4  # f = R / d, two stride-2 stages
    channels: int = 3  # latent dim m
    hidden: int = 16
    codebook_size: int = 512
    beta: float = 0.25  # commitment weight
    lr: float = 1e-3
    lr_decay: float = 1.0  # multiplicative per-epoch learning-rate decay
    band_weight: float = 0.0  # extra loss weight on the non-clamped TSDF band
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.downsample != 4:
            raise ContractViolationError("encoder is built for downsample factor 4")
        if self.resolution % self.downsample:
            raise ContractViolationError("resolution must divide by the downsample")


class Codebook(nn.Module):
    """K x m embedding table with usage counters."""

    def __init__(self, rng, size: int, dim: int):
        if size < 2:
            raise ContractViolationError("codebook needs at least 2 entries")
        self.entries = nn.param(rng.uniform(-1.0, 1.0, (size, dim)))
        self.usage = np.zeros(size, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def nearest(self, z_flat: np.ndarray) -> np.ndarray:
        """Index of the nearest entry (squared Euclidean) per row."""
        e = self.entries.data
        d = (
            np.sum(z_flat**2, axis=1, keepdims=True)
            - 2 * z_flat @ e.T
            + np.sum(e**2, axis=1)[None, :]
        )
        return np.argmin(d, axis=1)


class Vqvae(nn.Module):
    def __init__(self, config: VqvaeConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        h, m = config.hidden, config.channels
        self.enc1 = _conv_params(rng, 1, h)
        self.enc2 = _conv_params(rng, h, 2 * h)
        self.enc3 = _conv_params(rng, 2 * h, 2 * h)
        self.enc4 = _conv_params(rng, 2 * h, m)
        self.gn_e1 = nn.GroupNorm(4, h)
        self.gn_e2 = nn.GroupNorm(4, 2 * h)
        # the full-resolution stage runs at reduced width: convs at R^3
        # dominate single-core training cost, and TSDF refinement there is
        # local enough that a narrow head does not hurt reconstruction
        h2 = max(h // 2, 4)
        self.dec1 = _conv_params(rng, m, 2 * h)
        self.dec2 = _conv_params(rng, 2 * h, h2)
        self.dec3 = _conv_params(rng, h2, h2)
        self.dec4 = _conv_params(rng, h2, 1)
        self.gn_d1 = nn.GroupNorm(4, 2 * h)
        self.gn_d2 = nn.GroupNorm(4 if h2 % 4 == 0 else 1, h2)
        self.codebook = Codebook(rng, config.codebook_size, m)
        self.tau = default_tau(config.resolution)

    # -- batched forward pieces (N, C, R, R, R) ---------------------------
    def encode_batch(self, x: Tensor) -> Tensor:
        x = T.relu(self.gn_e1(_conv(x, self.enc1, stride=2)))
        x = T.relu(self.gn_e2(_conv(x, self.enc2, stride=2)))
        x = T.relu(_conv(x, self.enc3))
        return _conv(x, self.enc4)

    def decode_batch(self, zq: Tensor) -> Tensor:
        """Raw decoder output; clamp to +-tau happens in decode()."""
        x = T.relu(self.gn_d1(_conv(zq, self.dec1)))
        x = T.upsample_nearest3d(x, 2)
        x = T.relu(_conv(x, self.dec2))
        x = T.upsample_nearest3d(x, 2)
        x = T.relu(self.gn_d2(_conv(x, self.dec3)))
        return T.mul(_conv(x, self.dec4), self.tau)

    def quantize_batch(self, z: Tensor) -> tuple[Tensor, np.ndarray, Tensor, Tensor]:
        """Snap each latent vector to its nearest codebook entry.

        Returns (straight-through quantized latent, indices, codebook loss,
        commitment loss). The quantized output carries identity gradient
        w.r.t. z.
        """
        n, m = z.shape[0], z.shape[1]
        flat = np.moveaxis(z.data, 1, -1).reshape(-1, m)
        idx = self.codebook.nearest(flat)
        np.add.at(self.codebook.usage, idx, 1)
        e_data = self.codebook.entries.data[idx]
        zq_data = np.moveaxis(
            e_data.reshape(z.shape[0], *z.shape[2:], m), -1, 1
        ).astype(z.dtype)
        zq = T.add(z, Tensor(zq_data - z.data))  # straight-through
        picked = T.embedding_lookup(self.codebook.entries, idx)
        diff_cb = picked - Tensor(flat)
        codebook_loss = T.mul(diff_cb, diff_cb).mean()
        diff_commit = T.reshape(
            T.transpose(z, (0, 2, 3, 4, 1)), (-1, m)
        ) - Tensor(e_data.astype(z.dtype))
        commit_loss = T.mul(diff_commit, diff_commit).mean()
        return zq, idx.reshape(n, *z.shape[2:]), codebook_loss, commit_loss

    # -- public single-shape surface --------------------------------------
    def encode(self, grid: TsdfGrid) -> LatentCode:
        if grid.resolution != self.config.resolution:
            raise ContractViolationError(
                f"grid resolution {grid.resolution} != {self.config.resolution}"
            )
        x = Tensor(grid.values[None, None] / self.tau)
        with T.no_grad():
            z = self.encode_batch(x)
        return LatentCode(np.moveaxis(z.data[0], 0, -1))

    def quantize(self, z: LatentCode) -> tuple[LatentCode, np.ndarray, tuple]:
        if z.channels != self.codebook.entries.shape[1]:
            raise ContractViolationError("latent channels do not match codebook dim")
        zt = Tensor(np.moveaxis(z.values, -1, 0)[None])
        with T.no_grad():
            zq, idx, cb, commit = self.quantize_batch(zt)
        return (
            LatentCode(np.moveaxis(zq.data[0], 0, -1)),
            idx[0],
            (cb.item(), commit.item()),
        )

    def decode(self, zq: LatentCode) -> TsdfGrid:
        zt = Tensor(np.moveaxis(zq.values, -1, 0)[None])
        with T.no_grad():
            out = self.decode_batch(zt)
        values = np.clip(out.data[0, 0], -self.tau, self.tau)
        return TsdfGrid(values, self.tau)

    def reconstruct(self, grid: TsdfGrid) -> TsdfGrid:
        zq, _, _ = self.quantize(self.encode(grid))
        return self.decode(zq)


def _conv_params(rng, c_in: int, c_out: int, k: int = 3):
    w = nn.param(rng.standard_normal((c_out, c_in, k, k, k)) / np.sqrt(c_in * k**3))
    b = nn.param(np.zeros(c_out))
    return _ConvPair(w, b)


class _ConvPair(nn.Module):
    def __init__(self, w, b):
        self.w = w
        self.b = b


def _conv(x, pair: _ConvPair, stride: int = 1):
    return T.conv3d(x, pair.w, pair.b, stride=stride, padding=1)


def train_vqvae(
    grids: np.ndarray,
    config: VqvaeConfig,
    checkpoint_path,
    loss_csv_path=None,
    log=print,
    init: Vqvae | None = None,
) -> Vqvae:
    """Train on (N, R, R, R) TSDF values; writes checkpoint and loss CSV.

    Loss is reconstruction L1 (on raw decoder output, clamping is applied
    only at inference) + codebook + beta * commitment. With band_weight > 0
    voxels inside the truncation band — the thin shell where the surface
    actually lives — count (1 + band_weight) times as much as clamped
    far-field voxels, which otherwise dominate the average on sparse shapes.

    Pass `init` to continue training an existing model, e.g. a full-resolution
    fine-tune after cheap crop-based pretraining.
    """
    model = init if init is not None else Vqvae(config)
    rng = np.random.default_rng(config.seed)
    opt = nn.AdamW(model.params(), lr=config.lr)
    n = grids.shape[0]
    tau = model.tau
    rows = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = grids[order[start : start + config.batch_size]]
            x = Tensor(batch[:, None] / tau)
            target = Tensor(batch[:, None].astype(np.float32))
            z = model.encode_batch(x)
            zq, _, cb_loss, commit_loss = model.quantize_batch(z)
            recon = model.decode_batch(zq)
            diff = T.absolute(recon - target)
            if config.band_weight > 0.0:
                w = 1.0 + config.band_weight * (
                    np.abs(batch[:, None]) < tau * 0.999
                ).astype(np.float32)
                l1 = T.mul(diff, w / w.mean()).mean()
            else:
                l1 = diff.mean()
            loss = l1 + cb_loss + T.mul(commit_loss, config.beta)
            if not np.isfinite(loss.item()):
                raise ContractViolationError(
                    f"non-finite VQ-VAE loss at epoch {epoch} step {step}"
                )
            opt.zero_grad()
            T.backward(loss)
            opt.step()
            rows.append((epoch, step, loss.item(), cb_loss.item(), commit_loss.item()))
            step += 1
        opt.lr *= config.lr_decay
        if log:
            log(f"vqvae epoch {epoch}: loss {rows[-1][2]:.5f}")
    save_checkpoint(
        model.state(),
        checkpoint_path,
        meta={"kind": "vqvae", "config": vars(config).copy()},
    )
    if loss_csv_path:
        with open(loss_csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "step", "loss", "codebook_loss", "commit_loss"])
            writer.writerows(rows)
    return model


def random_crops(
    grids: np.ndarray, size: int, per_grid: int, rng: np.random.Generator
) -> np.ndarray:
    """Random cubic sub-volumes for translation-invariant training.

    The codec is fully convolutional, so a model trained on crops still
    encodes and decodes full-resolution grids; crops make each optimizer
    step cheap enough for single-core training at R = 32. `size` must be a
    multiple of the downsampling factor.
    """
    n, r = grids.shape[0], grids.shape[1]
    if size % 4 or size > r:
        raise ContractViolationError("crop size must divide by 4 and fit the grid")
    out = np.empty((n * per_grid, size, size, size), dtype=grids.dtype)
    hi = r - size + 1
    for i in range(n):
        for j in range(per_grid):
            x, y, z = rng.integers(0, hi, size=3)
            out[i * per_grid + j] = grids[i, x : x + size, y : y + size, z : z + size]
    return out


def load_vqvae(checkpoint_path) -> Vqvae:
    params, meta = load_checkpoint(checkpoint_path)
    config = VqvaeConfig(**{
        k: v for k, v in meta.get("config", {}).items() if k in VqvaeConfig.__dataclass_fields__
    })
    model = Vqvae(config)
    model.load_state(params)
    return model
