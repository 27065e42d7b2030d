"""Flat key=value run configuration shared by every CLI subcommand.

The file format is plain text: one `key = value` per line, `#` starts a
comment, blank lines ignored. Every key has a documented default below;
unknown keys are rejected so typos fail loudly. A short hash of the
resolved configuration is stamped into every CSV the tool writes, making
runs attributable to their exact settings.
"""

from __future__ import annotations

import hashlib

from .errors import ConfigError

# key -> (default, help). Types are inferred from the default value.
DEFAULTS: dict[str, tuple[object, str]] = {
    # corpus generation
    "data_dir": ("data", "dataset directory (manifest.jsonl + TSDF files)"),
    "shape_count": (1024, "number of procedural shapes to generate"),
    "resolution": (32, "TSDF grid resolution R"),
    "master_seed": (0, "seed for the procedural corpus"),
    # shape codec
    "vqvae_checkpoint": ("vqvae.ckpt", "VQ-VAE checkpoint path"),
    "vqvae_hidden": (16, "VQ-VAE hidden channel width"),
    "latent_channels": (3, "latent channels m per spatial cell"),
    "codebook_size": (512, "number of codebook entries K"),
    "commit_beta": (0.25, "commitment loss weight"),
    "vqvae_lr": (1e-3, "VQ-VAE learning rate"),
    "vqvae_lr_decay": (1.0, "VQ-VAE per-epoch learning-rate decay factor"),
    "vqvae_band_weight": (0.0, "extra loss weight on the non-clamped TSDF band"),
    "vqvae_batch": (16, "VQ-VAE batch size"),
    "vqvae_epochs": (20, "VQ-VAE training epochs"),
    "vqvae_seed": (0, "VQ-VAE init/shuffle seed"),
    # text conditioners
    "max_tokens": (32, "token capacity for captions"),
    "curvature": (1.0, "Poincare ball curvature c"),
    "graph_mode": ("corrected", "caption-graph construction: corrected|faithful"),
    "htgc_embed_dim": (64, "graph conditioner embedding width"),
    "htgc_hidden_dim": (64, "graph conditioner hidden width"),
    "htgc_layers": (2, "hyperbolic graph convolution layers"),
    "htie_dim": (128, "transformer text encoder width"),
    "htie_heads": (4, "transformer attention heads"),
    "htie_encoder_layers": (2, "transformer encoder depth"),
    "htie_adaptation_layers": (2, "post-bottleneck adaptation depth"),
    # diffusion
    "diffusion_checkpoint": ("diffusion.ckpt", "denoiser+conditioner checkpoint"),
    "base_channels": (32, "U-Net base channel width"),
    "unet_heads": (4, "U-Net attention heads"),
    "time_dim": (64, "timestep embedding width"),
    "hier_dim": (16, "hierarchy-head common width"),
    "t_train": (1000, "diffusion training timesteps"),
    "beta_start": (1e-4, "noise schedule start"),
    "beta_end": (2e-2, "noise schedule end"),
    "predict": ("x0", "denoiser target: x0|eps"),
    "alpha": (0.1, "weight of the hierarchical ordering loss"),
    "diffusion_lr": (1e-5, "diffusion learning rate"),
    "diffusion_wd": (1e-4, "diffusion weight decay"),
    "diffusion_batch": (8, "diffusion batch size"),
    "diffusion_steps": (2000, "diffusion optimizer steps"),
    "diffusion_seed": (0, "diffusion init/noise seed"),
    # sampling / evaluation
    "sample_steps": (100, "DDIM steps at sampling time"),
    "output_dir": ("outputs", "directory for generated TSDFs and CSVs"),
    "eval_prompts": (64, "held-out prompts for paired evaluation"),
    "eval_generations": (100, "generations for the distance-ordering report"),
    "eval_seed": (0, "base seed for evaluation sampling"),
}


class RunConfig:
    def __init__(self, values: dict[str, object]):
        self.values = values

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def hash(self) -> str:
        text = "\n".join(f"{k}={self.values[k]}" for k in sorted(self.values))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def _convert(key: str, raw: str):
    default = DEFAULTS[key][0]
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key '{key}': cannot parse {raw!r}") from None


def parse_assignment(line: str, source: str) -> tuple[str, object]:
    if "=" not in line:
        raise ConfigError(f"{source}: expected 'key = value', got {line!r}")
    key, raw = (part.strip() for part in line.split("=", 1))
    if key not in DEFAULTS:
        raise ConfigError(f"{source}: unknown config key '{key}'")
    return key, _convert(key, raw)


def load_config(path=None, overrides: list[str] | None = None) -> RunConfig:
    values = {k: d for k, (d, _) in DEFAULTS.items()}
    if path is not None:
        try:
            text = open(path, encoding="utf-8").read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, value = parse_assignment(line, f"{path}:{lineno}")
            values[key] = value
    for item in overrides or []:
        key, value = parse_assignment(item, "--set")
        values[key] = value
    return RunConfig(values)


def stamp_csv(path, config_hash: str):
    """Prepend a config-hash comment line to an existing CSV."""
    with open(path, "r+", encoding="utf-8") as f:
        body = f.read()
        f.seek(0)
        f.write(f"# config_hash={config_hash}\n" + body)


def describe_defaults() -> str:
    lines = ["# configuration keys (key = default  -- description)"]
    for key, (default, help_text) in DEFAULTS.items():
        lines.append(f"{key} = {default}  # {help_text}")
    return "\n".join(lines)
