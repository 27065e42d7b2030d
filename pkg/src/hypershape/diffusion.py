"""Dual-branch conditional latent diffusion over VQ-VAE shape codes.

Two parallel 3-D U-Net branches denoise the same latent; branch 1
cross-attends only to the transformer text condition, branch 2 only to the
graph-convolution condition. Branch outputs are concatenated and fused by a
single convolution. Decoder features at three spatial scales feed a
hyperbolic ordering loss that pushes deep features farther from the ball
origin than shallow ones.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from . import tensor as T
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ContractViolationError
from .htgc import ConditionSeq, Htgc, HtgcConfig
from .shape_codec import LatentCode, TsdfGrid, Vqvae
from .tensor import Tensor
from .text_encoder import Htie, HtieConfig
from .textgraph import parse_synthetic, tokenize, tree_to_graph


# ---------------------------------------------------------------------------
# noise schedule and forward process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def t_train(self) -> int:
        return len(self.betas)

    def __post_init__(self):
        if not (0 < self.betas[0] < self.betas[-1] < 1):
            raise ContractViolationError("betas must satisfy 0 < beta_1 < beta_T < 1")
        if np.any(np.diff(self.alpha_bars) >= 0):
            raise ContractViolationError("alpha_bar must be strictly decreasing")


def make_schedule(
    t_train: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2
) -> NoiseSchedule:
    if not (0 < beta_start < beta_end < 1):
        raise ContractViolationError("need 0 < beta_start < beta_end < 1")
    if t_train < 2:
        raise ContractViolationError("t_train must be at least 2")
    betas = np.linspace(beta_start, beta_end, t_train, dtype=np.float64)
    alphas = 1.0 - betas
    return NoiseSchedule(betas, alphas, np.cumprod(alphas))


def q_sample(z0: np.ndarray, t, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Closed-form forward noising: sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.

    `t` is 1-based, either a scalar or a per-sample array of shape (N,).
    """
    if z0.shape != eps.shape:
        raise ContractViolationError("z0 and eps shapes differ")
    t = np.asarray(t)
    if np.any(t < 1) or np.any(t > schedule.t_train):
        raise ContractViolationError("timestep out of range")
    abar = schedule.alpha_bars[t - 1]
    if t.ndim:  # per-sample: broadcast over trailing dims
        abar = abar.reshape((-1,) + (1,) * (z0.ndim - 1))
    return (np.sqrt(abar) * z0 + np.sqrt(1.0 - abar) * eps).astype(z0.dtype)


# ---------------------------------------------------------------------------
# denoiser
# ---------------------------------------------------------------------------


@dataclass
class DiffusionConfig:
    latent_size: int = 8
    latent_channels: int = 3
    base_channels: int = 32
    heads: int = 4
    time_dim: int = 64
    hier_dim: int = 16
    cond1_dim: int = 128  # transformer condition width
    cond2_dim: int = 64  # graph condition width
    t_train: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    predict: str = "x0"  # or "eps"
    alpha: float = 0.1  # weight of the hierarchical ordering loss
    curvature: float = 1.0
    lr: float = 1e-5
    weight_decay: float = 1e-4
    batch_size: int = 8
    steps: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.predict not in ("x0", "eps"):
            raise ContractViolationError("predict must be 'x0' or 'eps'")
        if self.latent_size % 4:
            raise ContractViolationError("latent size must allow two 2x downsamples")
        if min(self.base_channels, self.time_dim, self.hier_dim) <= 0:
            raise ContractViolationError("channel widths must be positive")


@dataclass(frozen=True)
class HierFeatures:
    """Decoder features of one branch at its three spatial scales."""

    f_h: Tensor  # deepest, smallest grid
    f_m: Tensor
    f_s: Tensor  # shallowest, full latent grid

    def __post_init__(self):
        scales = {f.shape[-1] for f in (self.f_h, self.f_m, self.f_s)}
        if len(scales) != 3:
            raise ContractViolationError("hier features must span three scales")


def _groups(channels: int) -> int:
    for g in (8, 4, 2):
        if channels % g == 0:
            return g
    return 1


class ResBlock(nn.Module):
    def __init__(self, rng, c_in: int, c_out: int, time_dim: int):
        self.gn1 = nn.GroupNorm(_groups(c_in), c_in)
        self.conv1 = nn.Conv3d(rng, c_in, c_out)
        self.t_proj = nn.Linear(rng, time_dim, c_out)
        self.gn2 = nn.GroupNorm(_groups(c_out), c_out)
        self.conv2 = nn.Conv3d(rng, c_out, c_out)
        self.skip = nn.Conv3d(rng, c_in, c_out, k=1, padding=0) if c_in != c_out else None

    def __call__(self, x: Tensor, temb: Tensor) -> Tensor:
        h = self.conv1(T.relu(self.gn1(x)))
        tb = self.t_proj(temb)
        h = T.add(h, T.reshape(tb, (tb.shape[0], tb.shape[1], 1, 1, 1)))
        h = self.conv2(T.relu(self.gn2(h)))
        return T.add(h, x if self.skip is None else self.skip(x))


class AttnBlock(nn.Module):
    """Self-attention over flattened voxels, then cross-attention to text."""

    def __init__(self, rng, channels: int, cond_dim: int, heads: int):
        self.norm1 = nn.LayerNorm(channels)
        self.self_attn = nn.MultiHeadAttention(rng, channels, heads)
        self.norm2 = nn.LayerNorm(channels)
        self.cross_attn = nn.MultiHeadAttention(rng, channels, heads, kv_dim=cond_dim)

    def __call__(self, x: Tensor, cond: ConditionSeq) -> Tensor:
        n, c, d, h, w = x.shape
        toks = T.transpose(T.reshape(x, (n, c, d * h * w)), (0, 2, 1))
        q = self.norm1(toks)
        toks = T.add(toks, self.self_attn(q, q))
        toks = T.add(
            toks, self.cross_attn(self.norm2(toks), cond.values, key_mask=cond.mask)
        )
        return T.reshape(T.transpose(toks, (0, 2, 1)), (n, c, d, h, w))


class Branch(nn.Module):
    """One 3-D U-Net: two resolutions plus an attention bottleneck."""

    def __init__(self, rng, config: DiffusionConfig, cond_dim: int):
        c, td, hd = config.base_channels, config.time_dim, config.heads
        self.conv_in = nn.Conv3d(rng, config.latent_channels, c)
        self.res_d1 = ResBlock(rng, c, c, td)
        self.down1 = nn.Conv3d(rng, c, 2 * c, stride=2)
        self.res_d2 = ResBlock(rng, 2 * c, 2 * c, td)
        self.attn_d2 = AttnBlock(rng, 2 * c, cond_dim, hd)
        self.down2 = nn.Conv3d(rng, 2 * c, 2 * c, stride=2)
        self.mid1 = ResBlock(rng, 2 * c, 2 * c, td)
        self.mid_attn = AttnBlock(rng, 2 * c, cond_dim, hd)
        self.mid2 = ResBlock(rng, 2 * c, 2 * c, td)
        self.up_conv2 = nn.Conv3d(rng, 4 * c, 2 * c)
        self.res_u2 = ResBlock(rng, 2 * c, 2 * c, td)
        self.attn_u2 = AttnBlock(rng, 2 * c, cond_dim, hd)
        self.up_conv1 = nn.Conv3d(rng, 3 * c, c)
        self.res_u1 = ResBlock(rng, c, c, td)

    def __call__(self, z: Tensor, temb: Tensor, cond: ConditionSeq) -> HierFeatures:
        h1 = self.res_d1(self.conv_in(z), temb)
        h2 = self.attn_d2(self.res_d2(self.down1(h1), temb), cond)
        h = self.down2(h2)
        f_h = self.mid2(self.mid_attn(self.mid1(h, temb), cond), temb)
        h = T.concat([T.upsample_nearest3d(f_h, 2), h2], axis=1)
        f_m = self.attn_u2(self.res_u2(self.up_conv2(h), temb), cond)
        h = T.concat([T.upsample_nearest3d(f_m, 2), h1], axis=1)
        f_s = self.res_u1(self.up_conv1(h), temb)
        return HierFeatures(f_h, f_m, f_s)


def hinge(d1, d2, d3):
    """Two-hinge ordering penalty, zero iff d1 <= d2 <= d3 (elementwise)."""
    d1, d2, d3 = (x if isinstance(x, Tensor) else Tensor(x) for x in (d1, d2, d3))
    return T.add(T.relu(d1 - d2), T.relu(d2 - d3))


class Denoiser(nn.Module):
    def __init__(self, config: DiffusionConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        c, td = config.base_channels, config.time_dim
        self.time1 = nn.Linear(rng, td, td)
        self.time2 = nn.Linear(rng, td, td)
        self.branch1 = Branch(rng, config, config.cond1_dim)
        self.branch2 = Branch(rng, config, config.cond2_dim)
        self.fuse_norm = nn.GroupNorm(_groups(2 * c), 2 * c)
        self.fuse = nn.Conv3d(rng, 2 * c, config.latent_channels)
        # ordering-loss heads: per-level MLPs to a common width, then one
        # shared Mobius matrix on the ball
        dims = (2 * c, 2 * c, c)
        self.hier_mlp1 = [nn.Linear(rng, d, config.hier_dim) for d in dims]
        self.hier_mlp2 = [
            nn.Linear(rng, config.hier_dim, config.hier_dim) for _ in dims
        ]
        # start each level at a distinct depth (deep -> shallow increasing):
        # the ordering penalty only pushes back violations, so a tie at
        # initialization would leave the ordering to chance
        for i, lin in enumerate(self.hier_mlp2):
            lin.b.data[0] = 0.3 * i
        eye = np.eye(config.hier_dim, dtype=np.float32)
        self.hier_w = nn.param(
            eye + rng.standard_normal(eye.shape).astype(np.float32) * 0.01
        )

    def _check_cond(self, cond: ConditionSeq, name: str):
        if np.any(cond.mask.sum(axis=1) == 0):
            raise ContractViolationError(
                f"{name} has an empty mask; unconditional sampling is unsupported"
            )

    def __call__(
        self, z_t: Tensor, t: np.ndarray, c1: ConditionSeq, c2: ConditionSeq
    ) -> tuple[Tensor, tuple[HierFeatures, HierFeatures]]:
        self._check_cond(c1, "condition 1")
        self._check_cond(c2, "condition 2")
        temb = self.time2(T.relu(self.time1(
            Tensor(nn.timestep_embedding(np.atleast_1d(t), self.config.time_dim))
        )))
        feats1 = self.branch1(z_t, temb, c1)
        feats2 = self.branch2(z_t, temb, c2)
        h = T.concat([feats1.f_s, feats2.f_s], axis=1)
        out = self.fuse(T.relu(self.fuse_norm(h)))
        return out, (feats1, feats2)

    def level_distances(self, feats: HierFeatures) -> tuple[Tensor, Tensor, Tensor]:
        """Origin distances (N, 1) of pooled features per scale."""
        c = self.config.curvature
        out = []
        for i, f in enumerate((feats.f_h, feats.f_m, feats.f_s)):
            v = T.tensor_mean(f, axis=(2, 3, 4))
            # tanh keeps the tangent vector away from the ball's clamping
            # margin; without it the ordering penalty ratchets every level
            # up to the same saturated boundary distance
            v = T.tanh(self.hier_mlp2[i](T.relu(self.hier_mlp1[i](v))))
            p = nn.h_mobius_matvec(self.hier_w, nn.h_exp0(v, c), c)
            out.append(nn.h_dist0(p, c))
        return tuple(out)

    def hier_loss(self, feats_pair: tuple[HierFeatures, HierFeatures]) -> Tensor:
        """Branch-averaged mean hinge penalty on the scale-distance ordering."""
        per_branch = []
        for feats in feats_pair:
            d1, d2, d3 = self.level_distances(feats)
            per_branch.append(T.tensor_mean(hinge(d1, d2, d3)))
        return T.mul(T.add(per_branch[0], per_branch[1]), 0.5)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def train_step(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    opt: nn.AdamW,
    z0: np.ndarray,
    c1: ConditionSeq,
    c2: ConditionSeq,
    rng: np.random.Generator,
) -> tuple[float, float, float]:
    """One joint optimizer step; returns (loss, L_mse, L_hier)."""
    cfg = denoiser.config
    n = z0.shape[0]
    t = rng.integers(1, schedule.t_train + 1, size=n)
    eps = rng.standard_normal(z0.shape).astype(np.float32)
    z_t = q_sample(z0, t, eps, schedule)

    out, feats = denoiser(Tensor(z_t), t, c1, c2)
    target = z0 if cfg.predict == "x0" else eps
    diff = out - Tensor(target)
    l_mse = T.tensor_mean(T.mul(diff, diff))
    if cfg.alpha:
        l_h = denoiser.hier_loss(feats)
        loss = T.add(l_mse, T.mul(l_h, cfg.alpha))
    else:
        l_h = Tensor(0.0)
        loss = l_mse
    if not np.isfinite(loss.data):
        raise ContractViolationError(
            f"non-finite loss (mse={l_mse.data}, hier={l_h.data}, t={t.tolist()})"
        )
    opt.zero_grad()
    loss.backward()
    opt.step()
    return float(loss.data), float(l_mse.data), float(l_h.data)


def joint_params(denoiser: Denoiser, htgc: Htgc, htie: Htie) -> dict[str, Tensor]:
    p = {f"denoiser.{k}": v for k, v in denoiser.params().items()}
    p.update({f"htgc.{k}": v for k, v in htgc.params().items()})
    p.update({f"htie.{k}": v for k, v in htie.params().items()})
    return p


def latent_stats(latents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean/std of (N, m, d, d, d) latents, std floored at 1e-6."""
    mean = latents.mean(axis=(0, 2, 3, 4), keepdims=True)[0]
    std = np.maximum(latents.std(axis=(0, 2, 3, 4), keepdims=True)[0], 1e-6)
    return mean.astype(np.float32), std.astype(np.float32)


def encode_corpus(vqvae: Vqvae, grids) -> np.ndarray:
    """Quantized latents (N, m, d, d, d) of an iterable of TsdfGrid."""
    out = []
    for g in grids:
        zq, _, _ = vqvae.quantize(vqvae.encode(g))
        out.append(np.moveaxis(zq.values, -1, 0))
    return np.stack(out).astype(np.float32)


def train_diffusion(
    latents: np.ndarray,
    captions: list[str],
    config: DiffusionConfig,
    htgc_model: Htgc,
    htie_model: Htie,
    checkpoint_path,
    loss_csv_path=None,
    graph_mode: str = "corrected",
    log=print,
) -> Denoiser:
    """Joint training of the denoiser and both text conditioners.

    `latents` are raw quantized codes (N, m, d, d, d); they are normalized
    per channel here and the statistics are stored in the checkpoint so
    sampling can invert them. `captions[i]` conditions `latents[i]`.
    """
    if len(latents) != len(captions):
        raise ContractViolationError("one caption per latent required")
    mean, std = latent_stats(latents)
    z_all = (latents - mean[None]) / std[None]

    token_lists = [tokenize(c) for c in captions]
    graphs = [
        tree_to_graph(parse_synthetic(toks), mode=graph_mode) for toks in token_lists
    ]

    schedule = make_schedule(config.t_train, config.beta_start, config.beta_end)
    denoiser = Denoiser(config)
    opt = nn.AdamW(
        joint_params(denoiser, htgc_model, htie_model),
        lr=config.lr,
        weight_decay=config.weight_decay,
    )
    rng = np.random.default_rng(config.seed)

    rows = []
    for step in range(1, config.steps + 1):
        idx = rng.choice(len(z_all), size=min(config.batch_size, len(z_all)), replace=False)
        c1 = htie_model.encode_text([token_lists[i] for i in idx])
        c2 = htgc_model.encode_graph([graphs[i] for i in idx])
        loss, l_mse, l_h = train_step(
            denoiser, schedule, opt, z_all[idx], c1, c2, rng
        )
        rows.append((step, loss, l_mse, l_h))
        if log and (step % 100 == 0 or step == 1):
            log(f"step {step}/{config.steps} loss={loss:.5f} mse={l_mse:.5f} hier={l_h:.5f}")

    meta = {
        "kind": "diffusion",
        "config": asdict(config),
        "htgc_config": asdict(htgc_model.config),
        "htie_config": asdict(htie_model.config),
        "latent_mean": mean.ravel().tolist(),
        "latent_std": std.ravel().tolist(),
        "graph_mode": graph_mode,
    }
    state = {
        k: v.data for k, v in joint_params(denoiser, htgc_model, htie_model).items()
    }
    save_checkpoint(state, checkpoint_path, meta)
    if loss_csv_path is not None:
        with open(loss_csv_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["step", "loss", "mse_loss", "hier_loss"])
            w.writerows(rows)
    return denoiser


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def ddim_update(
    z_t: np.ndarray, z0_hat: np.ndarray, abar_t: float, abar_prev: float
) -> np.ndarray:
    """One deterministic reverse step from abar_t to abar_prev."""
    eps_hat = (z_t - np.sqrt(abar_t) * z0_hat) / np.sqrt(1.0 - abar_t)
    z_prev = np.sqrt(abar_prev) * z0_hat
    if abar_prev < 1.0:
        z_prev = z_prev + np.sqrt(1.0 - abar_prev) * eps_hat
    return z_prev


def ddim_timesteps(t_train: int, steps: int) -> np.ndarray:
    """Evenly spaced 1-based timesteps, descending from t_train."""
    if steps < 1:
        raise ContractViolationError("steps must be >= 1")
    if steps > t_train:
        raise ContractViolationError("steps may not exceed the training schedule")
    ts = np.unique(np.linspace(1, t_train, steps).round().astype(np.int64))
    return ts[::-1]


def ddim_sample(
    z0_fn,
    schedule: NoiseSchedule,
    shape: tuple,
    steps: int,
    rng: np.random.Generator,
    z_init: np.ndarray | None = None,
) -> np.ndarray:
    """Deterministic DDIM chain; `z0_fn(z_t, t)` returns the clean estimate.

    `z_init` overrides the initial noise draw; this lets a caller stack
    per-prompt noise streams and denoise many prompts in one batch.
    """
    ts = ddim_timesteps(schedule.t_train, steps)
    if z_init is None:
        z = rng.standard_normal(shape).astype(np.float32)
    else:
        if z_init.shape != shape:
            raise ContractViolationError(
                f"z_init shape {z_init.shape} does not match requested {shape}"
            )
        z = z_init.astype(np.float32)
    for i, t in enumerate(ts):
        abar_t = float(schedule.alpha_bars[t - 1])
        abar_prev = (
            float(schedule.alpha_bars[ts[i + 1] - 1]) if i + 1 < len(ts) else 1.0
        )
        z0_hat = z0_fn(z, int(t))
        z = ddim_update(z, z0_hat, abar_t, abar_prev).astype(np.float32)
    return z


class GenerationPipeline:
    """Caption -> conditions -> DDIM latent -> codebook snap -> TSDF."""

    def __init__(
        self,
        vqvae: Vqvae,
        htgc_model: Htgc,
        htie_model: Htie,
        denoiser: Denoiser,
        latent_mean: np.ndarray,
        latent_std: np.ndarray,
        graph_mode: str = "corrected",
    ):
        self.vqvae = vqvae
        self.htgc = htgc_model
        self.htie = htie_model
        self.denoiser = denoiser
        cfg = denoiser.config
        self.schedule = make_schedule(cfg.t_train, cfg.beta_start, cfg.beta_end)
        m = cfg.latent_channels
        self.latent_mean = np.asarray(latent_mean, dtype=np.float32).reshape(m, 1, 1, 1)
        self.latent_std = np.asarray(latent_std, dtype=np.float32).reshape(m, 1, 1, 1)
        self.graph_mode = graph_mode

    def conditions(self, caption: str) -> tuple[ConditionSeq, ConditionSeq]:
        toks = tokenize(caption)
        graph = tree_to_graph(parse_synthetic(toks), mode=self.graph_mode)
        return self.htie.encode_text([toks]), self.htgc.encode_graph([graph])

    def _z0_fn(self, c1: ConditionSeq, c2: ConditionSeq):
        cfg = self.denoiser.config

        def fn(z_t: np.ndarray, t: int) -> np.ndarray:
            out, _ = self.denoiser(Tensor(z_t), np.full(z_t.shape[0], t), c1, c2)
            if cfg.predict == "eps":
                abar = float(self.schedule.alpha_bars[t - 1])
                return (z_t - np.sqrt(1.0 - abar) * out.data) / np.sqrt(abar)
            return out.data

        return fn

    def sample_latent(self, caption: str, seed: int, steps: int = 100) -> LatentCode:
        cfg = self.denoiser.config
        shape = (1, cfg.latent_channels) + (cfg.latent_size,) * 3
        with T.no_grad():
            c1, c2 = self.conditions(caption)
            z = ddim_sample(
                self._z0_fn(c1, c2),
                self.schedule,
                shape,
                steps,
                np.random.default_rng(seed),
            )
        z = z[0] * self.latent_std + self.latent_mean
        return LatentCode(np.moveaxis(z, 0, -1))

    def sample_latent_batch(
        self, captions: list[str], seeds: list[int], steps: int = 100
    ) -> np.ndarray:
        """Denoise one latent per caption in a single batch.

        Each prompt gets its own noise stream keyed by its seed, so the
        result for a given (caption, seed) is independent of which other
        prompts share the batch.  Returns denormalized (N, C, D, D, D).
        """
        if len(captions) != len(seeds):
            raise ContractViolationError("captions and seeds must pair up")
        cfg = self.denoiser.config
        one = (cfg.latent_channels,) + (cfg.latent_size,) * 3
        with T.no_grad():
            toks = [tokenize(c) for c in captions]
            graphs = [
                tree_to_graph(parse_synthetic(t), mode=self.graph_mode) for t in toks
            ]
            c1 = self.htie.encode_text(toks)
            c2 = self.htgc.encode_graph(graphs)
            z_init = np.stack(
                [
                    np.random.default_rng(s).standard_normal(one).astype(np.float32)
                    for s in seeds
                ]
            )
            z = ddim_sample(
                self._z0_fn(c1, c2),
                self.schedule,
                (len(captions),) + one,
                steps,
                np.random.default_rng(0),
                z_init=z_init,
            )
        return z * self.latent_std[None] + self.latent_mean[None]

    def generate(self, caption: str, seed: int, steps: int = 100) -> TsdfGrid:
        zq, _, _ = self.vqvae.quantize(self.sample_latent(caption, seed, steps))
        return self.vqvae.decode(zq)

    def generate_batch(
        self, captions: list[str], seeds: list[int], steps: int = 100
    ) -> list[TsdfGrid]:
        """Batched caption -> shape generation; decodes one latent at a time."""
        z = self.sample_latent_batch(captions, seeds, steps)
        out = []
        for row in z:
            zq, _, _ = self.vqvae.quantize(LatentCode(np.moveaxis(row, 0, -1)))
            out.append(self.vqvae.decode(zq))
        return out


def prompt_rng(seed: int, prompt_index: int) -> np.random.Generator:
    """Independent stream per prompt so batch order never changes results."""
    return np.random.default_rng(np.random.SeedSequence([seed, prompt_index]))


def write_sampling_manifest(rows, path):
    """rows: iterable of (caption_id, seed, output_path)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["caption_id", "seed", "output_path"])
        w.writerows(rows)


def load_pipeline(diffusion_ckpt, vqvae: Vqvae) -> GenerationPipeline:
    params, meta = load_checkpoint(diffusion_ckpt)
    if meta.get("kind") != "diffusion":
        raise ContractViolationError("not a diffusion checkpoint")
    config = DiffusionConfig(**meta["config"])
    denoiser = Denoiser(config)
    htgc_model = Htgc(HtgcConfig(**meta["htgc_config"]))
    htie_model = Htie(HtieConfig(**meta["htie_config"]))
    denoiser.load_state(
        {k[len("denoiser."):]: v for k, v in params.items() if k.startswith("denoiser.")}
    )
    htgc_model.load_state(
        {k[len("htgc."):]: v for k, v in params.items() if k.startswith("htgc.")}
    )
    htie_model.load_state(
        {k[len("htie."):]: v for k, v in params.items() if k.startswith("htie.")}
    )
    return GenerationPipeline(
        vqvae,
        htgc_model,
        htie_model,
        denoiser,
        np.array(meta["latent_mean"]),
        np.array(meta["latent_std"]),
        graph_mode=meta.get("graph_mode", "corrected"),
    )
