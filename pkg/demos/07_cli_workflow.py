"""The command-line workflow, end to end on a miniature configuration.

Everything the library does is also reachable through the `hypershape`
CLI. This demo drives the full loop in a temporary directory: generate a
tiny corpus, train the codec and the diffusion model for a handful of
steps, sample a shape from a caption, and export metrics and embeddings.
All outputs carry a config hash so results stay traceable.
"""

import subprocess
import sys
import tempfile
from pathlib import Path


def run(*args):
    cmd = [sys.executable, "-m", "hypershape.cli", *args]
    print("$ hypershape " + " ".join(args))
    out = subprocess.run(cmd, capture_output=True, text=True)
    for line in (out.stdout + out.stderr).strip().splitlines()[-3:]:
        print("  " + line)
    assert out.returncode == 0, out.stderr
    return out.stdout


with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    (d / "run.cfg").write_text(
        "\n".join(
            [
                "# miniature settings so the whole loop runs in ~2 minutes",
                f"data_dir = {d / 'data'}",
                "shape_count = 6",
                "resolution = 16",
                "vqvae_hidden = 4",
                "codebook_size = 32",
                "vqvae_epochs = 2",
                f"vqvae_checkpoint = {d / 'vq.npz'}",
                f"diffusion_checkpoint = {d / 'diff.npz'}",
                "base_channels = 4",
                "unet_heads = 2",
                "time_dim = 16",
                "hier_dim = 4",
                "htie_dim = 16",
                "htie_heads = 2",
                "htie_encoder_layers = 1",
                "htie_adaptation_layers = 1",
                "htgc_embed_dim = 16",
                "htgc_hidden_dim = 16",
                "htgc_layers = 1",
                "diffusion_steps = 10",
                "diffusion_lr = 0.001",
                "sample_steps = 5",
                f"output_dir = {d / 'out'}",
                "eval_prompts = 2",
                "eval_generations = 4",
            ]
        )
    )

    run("gen-data", "--config", str(d / "run.cfg"))
    run("train-vqvae", "--config", str(d / "run.cfg"))
    run("train-diffusion", "--config", str(d / "run.cfg"))
    run(
        "sample", "--config", str(d / "run.cfg"),
        "--prompt", "a simple chair with four legs", "--seed", "7",
    )
    run("eval", "--config", str(d / "run.cfg"))
    (d / "prompts.txt").write_text("a chair\na wide table\n")
    run("embed", "--config", str(d / "run.cfg"),
        "--captions-file", str(d / "prompts.txt"))
    run("parse", "--text", "a soft table with three round legs")

    print("\noutputs:")
    for p in sorted((d / "out").rglob("*")):
        print("  ", p.relative_to(d))
    manifest = next((d / "out").glob("samples.csv"))
    print("\nsamples.csv:")
    print(manifest.read_text())
