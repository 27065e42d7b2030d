"""End-to-end: captions guiding latent diffusion.

A miniature version of the full training loop: encode a toy corpus with a
codec, then jointly train the dual-branch denoiser and both caption
encoders, and finally sample new latents from text alone. Small enough to
run on one CPU core in a couple of minutes.
"""

import tempfile

import numpy as np

from hypershape import datagen, diffusion
from hypershape.htgc import Htgc, HtgcConfig
from hypershape.shape_codec import Vqvae, VqvaeConfig
from hypershape.text_encoder import Htie, HtieConfig

R = 16
specs = datagen.generate_corpus(master_seed=5, count=8)
grids = [datagen.spec_to_tsdf(s, R) for s in specs]
captions = [datagen.spec_to_captions(s).levels[3] for s in specs]

# An untrained codec still defines a valid latent space for the demo; the
# real pipeline trains it first (see demo 04).
codec = Vqvae(VqvaeConfig(resolution=R, hidden=8, codebook_size=64))
latents = diffusion.encode_corpus(codec, grids)
print("latent corpus:", latents.shape)

config = diffusion.DiffusionConfig(
    latent_size=4, base_channels=8, heads=2, time_dim=32, hier_dim=8,
    cond1_dim=32, cond2_dim=32, lr=3e-3, batch_size=8, steps=300, seed=0,
)
graph_enc = Htgc(HtgcConfig(embed_dim=32, hidden_dim=32, layers=1), seed=1)
text_enc = Htie(
    HtieConfig(model_dim=32, heads=2, encoder_layers=1, adaptation_layers=1),
    seed=2,
)

with tempfile.TemporaryDirectory() as d:
    denoiser = diffusion.train_diffusion(
        latents, captions, config, graph_enc, text_enc,
        f"{d}/diffusion.npz", f"{d}/loss.csv",
        log=lambda m: print("  " + m) if "00/" in m else None,
    )

mean, std = diffusion.latent_stats(latents)
pipe = diffusion.GenerationPipeline(codec, graph_enc, text_enc, denoiser, mean, std)

# Deterministic sampling: the same caption and seed always give the same
# shape, different seeds give different ones.
cap = "a simple chair with four round legs and a low backrest"
a = pipe.sample_latent(cap, seed=0, steps=25)
b = pipe.sample_latent(cap, seed=0, steps=25)
c = pipe.sample_latent(cap, seed=1, steps=25)
print("same seed reproduces:", np.array_equal(a.values, b.values))
print("new seed differs:    ", not np.array_equal(a.values, c.values))

grid = pipe.generate(cap, seed=0, steps=25)
print("generated grid:", grid.values.shape,
      f"occupancy {(grid.values < 0).mean() * 100:.1f}%")
