"""Hierarchy-aware text-to-shape generation on the Poincare ball.

Submodules:
    manifold     -- Poincare-ball gyrovector operations (numpy, reference)
    tensor       -- reverse-mode autodiff engine the models are built on
    nn           -- layers, optimizers, differentiable hyperbolic ops
    textgraph    -- caption tokenizer, rule parser, syntax-graph builder
    vocab        -- closed caption vocabulary
    htgc         -- hyperbolic graph-convolution text conditioner
    text_encoder -- transformer text encoder with hyperbolic bottleneck
    shape_codec  -- TSDF grids, file format, and the VQ-VAE
    diffusion    -- dual-branch conditional latent diffusion + DDIM sampling
    datagen      -- procedural furniture corpus with leveled captions
    metrics      -- IoU, Chamfer/F-score via FPS clouds, HMD, HD
    checkpoint   -- binary parameter checkpoint format
    config, cli  -- flat-text run configuration and the command-line tool
"""

from . import (  # noqa: F401
    checkpoint,
    config,
    datagen,
    diffusion,
    errors,
    htgc,
    manifold,
    metrics,
    nn,
    shape_codec,
    tensor,
    text_encoder,
    textgraph,
    vocab,
)

__all__ = [
    "checkpoint",
    "config",
    "datagen",
    "diffusion",
    "errors",
    "htgc",
    "manifold",
    "metrics",
    "nn",
    "shape_codec",
    "tensor",
    "text_encoder",
    "textgraph",
    "vocab",
]

__version__ = "0.1.0"
