"""Command-line interface: one binary, seven subcommands.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numerical
abort. Every subcommand is driven by the flat-text config file plus
`--set key=value` overrides, and every CSV written carries the config hash
as a leading comment so results stay attributable.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import datagen, diffusion, metrics, shape_codec, textgraph
from .config import DEFAULTS, describe_defaults, load_config, stamp_csv
from .errors import ConfigError, ContractViolationError, FormatError, ParseError
from .htgc import Htgc, HtgcConfig
from .text_encoder import Htie, HtieConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def _htgc_from(cfg) -> Htgc:
    return Htgc(
        HtgcConfig(
            embed_dim=cfg["htgc_embed_dim"],
            hidden_dim=cfg["htgc_hidden_dim"],
            layers=cfg["htgc_layers"],
            curvature=cfg["curvature"],
            max_tokens=cfg["max_tokens"],
        ),
        seed=cfg["diffusion_seed"],
    )


def _htie_from(cfg) -> Htie:
    return Htie(
        HtieConfig(
            model_dim=cfg["htie_dim"],
            heads=cfg["htie_heads"],
            encoder_layers=cfg["htie_encoder_layers"],
            adaptation_layers=cfg["htie_adaptation_layers"],
            curvature=cfg["curvature"],
            max_tokens=cfg["max_tokens"],
        ),
        seed=cfg["diffusion_seed"],
    )


def _diffusion_config(cfg) -> diffusion.DiffusionConfig:
    return diffusion.DiffusionConfig(
        latent_size=cfg["resolution"] // 4,
        latent_channels=cfg["latent_channels"],
        base_channels=cfg["base_channels"],
        heads=cfg["unet_heads"],
        time_dim=cfg["time_dim"],
        hier_dim=cfg["hier_dim"],
        cond1_dim=cfg["htie_dim"],
        cond2_dim=cfg["htgc_hidden_dim"],
        t_train=cfg["t_train"],
        beta_start=cfg["beta_start"],
        beta_end=cfg["beta_end"],
        predict=cfg["predict"],
        alpha=cfg["alpha"],
        curvature=cfg["curvature"],
        lr=cfg["diffusion_lr"],
        weight_decay=cfg["diffusion_wd"],
        batch_size=cfg["diffusion_batch"],
        steps=cfg["diffusion_steps"],
        seed=cfg["diffusion_seed"],
    )


def _load_pipeline(cfg) -> diffusion.GenerationPipeline:
    vqvae = shape_codec.load_vqvae(cfg["vqvae_checkpoint"])
    return diffusion.load_pipeline(cfg["diffusion_checkpoint"], vqvae)


def _untrained_pipeline(cfg) -> diffusion.GenerationPipeline:
    """Freshly initialized models; used when no checkpoint exists yet."""
    vqvae = shape_codec.Vqvae(
        shape_codec.VqvaeConfig(
            resolution=cfg["resolution"],
            channels=cfg["latent_channels"],
            hidden=cfg["vqvae_hidden"],
            codebook_size=cfg["codebook_size"],
            seed=cfg["vqvae_seed"],
        )
    )
    m = cfg["latent_channels"]
    return diffusion.GenerationPipeline(
        vqvae,
        _htgc_from(cfg),
        _htie_from(cfg),
        diffusion.Denoiser(_diffusion_config(cfg)),
        np.zeros(m),
        np.ones(m),
        graph_mode=cfg["graph_mode"],
    )


def _pipeline(cfg) -> diffusion.GenerationPipeline:
    if Path(cfg["diffusion_checkpoint"]).exists() and Path(cfg["vqvae_checkpoint"]).exists():
        return _load_pipeline(cfg)
    return _untrained_pipeline(cfg)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_gen_data(cfg, args):
    specs = datagen.generate_corpus(cfg["master_seed"], cfg["shape_count"])
    datagen.write_dataset(specs, cfg["resolution"], cfg["data_dir"])
    print(f"wrote {len(specs)} shapes to {cfg['data_dir']}")
    return EXIT_OK


def cmd_train_vqvae(cfg, args):
    items = datagen.read_dataset(cfg["data_dir"])
    grids = np.stack([it.tsdf.values for it in items]).astype(np.float32)
    vq_config = shape_codec.VqvaeConfig(
        resolution=cfg["resolution"],
        channels=cfg["latent_channels"],
        hidden=cfg["vqvae_hidden"],
        codebook_size=cfg["codebook_size"],
        beta=cfg["commit_beta"],
        lr=cfg["vqvae_lr"],
        lr_decay=cfg["vqvae_lr_decay"],
        band_weight=cfg["vqvae_band_weight"],
        batch_size=cfg["vqvae_batch"],
        epochs=cfg["vqvae_epochs"],
        seed=cfg["vqvae_seed"],
    )
    loss_csv = str(cfg["vqvae_checkpoint"]) + ".loss.csv"
    shape_codec.train_vqvae(grids, vq_config, cfg["vqvae_checkpoint"], loss_csv)
    stamp_csv(loss_csv, cfg.hash)
    print(f"checkpoint: {cfg['vqvae_checkpoint']}")
    return EXIT_OK


def cmd_train_diffusion(cfg, args):
    vqvae = shape_codec.load_vqvae(cfg["vqvae_checkpoint"])
    items = datagen.read_dataset(cfg["data_dir"])
    latents = diffusion.encode_corpus(vqvae, (it.tsdf for it in items))
    # cycle caption detail levels across the corpus so every level is seen
    captions = [it.captions.levels[it.id % 4] for it in items]
    loss_csv = str(cfg["diffusion_checkpoint"]) + ".loss.csv"
    diffusion.train_diffusion(
        latents,
        captions,
        _diffusion_config(cfg),
        _htgc_from(cfg),
        _htie_from(cfg),
        cfg["diffusion_checkpoint"],
        loss_csv,
        graph_mode=cfg["graph_mode"],
    )
    stamp_csv(loss_csv, cfg.hash)
    print(f"checkpoint: {cfg['diffusion_checkpoint']}")
    return EXIT_OK


def cmd_sample(cfg, args):
    if bool(args.prompt) == bool(args.prompt_file):
        raise UsageError("exactly one of --prompt / --prompt-file is required")
    if args.prompt:
        prompts = [args.prompt]
    else:
        try:
            prompts = [
                line.strip()
                for line in open(args.prompt_file, encoding="utf-8")
                if line.strip()
            ]
        except OSError as exc:
            raise FormatError(f"cannot read prompts: {exc}") from exc
    pipeline = _load_pipeline(cfg)
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, prompt in enumerate(prompts):
        grid = pipeline.generate(prompt, args.seed + i, steps=cfg["sample_steps"])
        out_path = out_dir / f"sample_{i:04d}.tsdf"
        shape_codec.write_tsdf(grid, out_path)
        rows.append((i, args.seed + i, str(out_path)))
        print(f"[{i}] {prompt!r} -> {out_path}")
    manifest = out_dir / "samples.csv"
    diffusion.write_sampling_manifest(rows, manifest)
    stamp_csv(manifest, cfg.hash)
    return EXIT_OK


def cmd_eval(cfg, args):
    items = datagen.read_dataset(cfg["data_dir"])
    pipeline = _pipeline(cfg)
    n_prompts = min(cfg["eval_prompts"], len(items))
    eval_items = items[-n_prompts:]  # tail of the corpus as held-out split

    ious, cds, fscores = [], [], []
    level_grids: dict[int, list] = {0: [], 1: [], 2: [], 3: []}
    for j, item in enumerate(eval_items):
        seed = cfg["eval_seed"] + item.id
        for level in range(4):
            grid = pipeline.generate(
                item.captions.levels[level], seed, steps=cfg["sample_steps"]
            )
            level_grids[level].append(grid)
            if level == 3:
                ious.append(metrics.iou(grid, item.tsdf))
                gen_cloud = metrics.shape_cloud(grid)
                gt_cloud = metrics.shape_cloud(item.tsdf)
                cds.append(metrics.chamfer(gen_cloud, gt_cloud))
                fscores.append(metrics.fscore(gen_cloud, gt_cloud))

    hmds = {
        k: metrics.hmd(level_grids[0], level_grids[k]) for k in (1, 2, 3)
    }

    n_gen = min(cfg["eval_generations"], len(eval_items) * 4)
    dists = []
    den = pipeline.denoiser
    for j in range(n_gen):
        item = eval_items[j % len(eval_items)]
        caption = item.captions.levels[3]
        z = pipeline.sample_latent(caption, cfg["eval_seed"] + 10_000 + j,
                                   steps=cfg["sample_steps"])
        from .tensor import Tensor, no_grad

        with no_grad():
            zt = Tensor(np.moveaxis(z.values, -1, 0)[None].astype(np.float32))
            c1, c2 = pipeline.conditions(caption)
            _, feats = den(zt, np.array([1]), c1, c2)
            d1, d2, d3 = den.level_distances(feats[0])
        dists.append([float(d1.data[0, 0]), float(d2.data[0, 0]), float(d3.data[0, 0])])
    hd1, hd2, hd3 = metrics.hd(np.array(dists)) if dists else (0.0, 0.0, 0.0)

    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "eval.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "value", "n", "config_hash"])
        w.writerow(["iou_mean", np.mean(ious), len(ious), cfg.hash])
        w.writerow(["chamfer_mean", np.mean(cds), len(cds), cfg.hash])
        w.writerow(["fscore_mean", np.mean(fscores), len(fscores), cfg.hash])
        for k in (1, 2, 3):
            w.writerow([f"hmd_level{k}", hmds[k], n_prompts, cfg.hash])
        w.writerow(["hd_d1", hd1, n_gen, cfg.hash])
        w.writerow(["hd_d2", hd2, n_gen, cfg.hash])
        w.writerow(["hd_d3", hd3, n_gen, cfg.hash])
    stamp_csv(path, cfg.hash)
    print(path.read_text(), end="")
    return EXIT_OK


def cmd_embed(cfg, args):
    if args.captions_file:
        try:
            captions = [
                line.strip()
                for line in open(args.captions_file, encoding="utf-8")
                if line.strip()
            ]
        except OSError as exc:
            raise FormatError(f"cannot read captions: {exc}") from exc
    else:
        items = datagen.read_dataset(cfg["data_dir"])
        captions = [c for it in items for c in it.captions.levels]
    pipeline = _pipeline(cfg)
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "embeddings.csv"
    pipeline.htie.export_embeddings(captions, path)
    stamp_csv(path, cfg.hash)
    print(f"wrote {len(captions)} embeddings to {path}")
    return EXIT_OK


def cmd_parse(cfg, args):
    tokens = textgraph.tokenize(args.text)
    tree = textgraph.parse_synthetic(tokens)
    graph = textgraph.tree_to_graph(tree, mode=cfg["graph_mode"])
    for i, tok in enumerate(tree.tokens):
        head = 0 if tok.head == i else tok.head + 1
        print(f"{i + 1}\t{tok.form}\t{tok.pos}\t{head}")
    for row in graph.adjacency.astype(int):
        print(" ".join(str(v) for v in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="hypershape",
        description="hierarchy-aware text-to-shape pipeline",
        epilog=describe_defaults(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a single config key",
        )

    common(sub.add_parser("gen-data", help="write the procedural shape corpus"))
    common(sub.add_parser("train-vqvae", help="train the TSDF codec"))
    common(sub.add_parser("train-diffusion", help="train denoiser + conditioners"))
    p = sub.add_parser("sample", help="generate shapes from captions")
    common(p)
    p.add_argument("--prompt", help="a single caption")
    p.add_argument("--prompt-file", help="file with one caption per line")
    p.add_argument("--seed", type=int, default=0)
    common(sub.add_parser("eval", help="metrics CSV over the held-out split"))
    p = sub.add_parser("embed", help="export hyperbolic caption embeddings")
    common(p)
    p.add_argument("--captions-file", help="captions to embed (default: dataset)")
    p = sub.add_parser("parse", help="print caption tree and adjacency")
    common(p)
    p.add_argument("--text", required=True, help="caption to parse")
    return parser


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train-vqvae": cmd_train_vqvae,
    "train-diffusion": cmd_train_diffusion,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "embed": cmd_embed,
    "parse": cmd_parse,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, args.set)
        return HANDLERS[args.command](cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, FormatError, ParseError, FileNotFoundError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ContractViolationError as exc:
        print(f"numerical abort [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
