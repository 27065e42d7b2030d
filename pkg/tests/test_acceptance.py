"""End-to-end acceptance suite.

Ten checks, from pure math invariants to small real training runs:

 1. ball-geometry invariants over randomized batches,
 2. gradient checks for every differentiable primitive and for composed
    encoder/denoiser graphs,
 3. caption-graph construction against hand-traced fixtures,
 4. the hierarchy hinge against hand-evaluated values,
 5. codec reconstruction quality on the full synthetic corpus,
 6. a diffusion training smoke run plus bit-reproducible sampling,
 7. the hyperbolic feature-depth ordering on a trained model,
 8. caption-level monotonicity of the matching distance,
 9. a paired sign test that caption conditioning helps,
10. bit-exact file-format round trips.

Tests that train real models are marked `slow`; run `pytest -m "not slow"`
for the quick subset. Budgets assume a single laptop-class CPU core.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from hypershape import datagen, diffusion, manifold as mf, metrics, nn
from hypershape import tensor as T
from hypershape.checkpoint import load_checkpoint, save_checkpoint
from hypershape.htgc import Htgc, HtgcConfig
from hypershape.shape_codec import (
    TsdfGrid,
    Vqvae,
    VqvaeConfig,
    random_crops,
    read_tsdf,
    train_vqvae,
    write_tsdf,
)
from hypershape.tensor import Tensor
from hypershape.text_encoder import Htie, HtieConfig
from hypershape.textgraph import (
    parse_synthetic,
    read_conllu,
    tokenize,
    tree_to_graph,
    write_conllu,
)

DATA = Path(__file__).parent / "data"
N_CASES = 10_000


# ---------------------------------------------------------------------------
# 1. manifold invariants
# ---------------------------------------------------------------------------


class TestManifoldInvariants:
    def test_invariants_randomized(self):
        start = time.monotonic()
        rng = np.random.default_rng(20260826)
        for c in (0.5, 1.0, 2.0):
            dim = int(rng.integers(2, 9))
            extreme = mf.project(rng.standard_normal((N_CASES, dim)) * 3.0, c)
            interior = 0.4 / (np.sqrt(dim) * np.sqrt(c))
            x = mf.project(rng.standard_normal((N_CASES, dim)) * interior, c)
            y = mf.project(rng.standard_normal((N_CASES, dim)) * interior, c)
            limit = (1.0 - mf.EPS_BALL) / np.sqrt(c)

            # projection lands strictly inside the ball even for huge input
            assert np.all(np.linalg.norm(extreme.values, axis=-1) <= limit + 1e-12)

            # Mobius addition: closure (even at the boundary margin), left
            # inverse, and left cancellation away from the clipping margin
            s = mf.mobius_add(extreme, y)
            assert np.all(np.linalg.norm(s.values, axis=-1) <= limit + 1e-12)
            neg_ext = mf.BallTensor(-extreme.values, c)
            assert np.abs(mf.mobius_add(extreme, neg_ext).values).max() < 1e-9
            neg_x = mf.BallTensor(-x.values, c)
            su = mf.mobius_add(x, y)
            unclipped = np.linalg.norm(su.values, axis=-1) < limit * (1 - 1e-8)
            assert unclipped.mean() > 0.99
            back = mf.mobius_add(neg_x, su)
            err = np.abs(back.values - y.values).max(axis=-1)
            assert err[unclipped].max() < 1e-6

            # exp0/log0 are mutual inverses (tangent norms kept below the
            # saturation radius of the ball margin)
            v = mf.TangentTensor(rng.standard_normal((N_CASES, dim)) * interior, c)
            assert np.abs(mf.log0(mf.exp0(v)).values - v.values).max() < 1e-6
            assert np.abs(mf.exp0(mf.log0(y)).values - y.values).max() < 1e-9

            # distance axioms (triangle inequality via a third point)
            z = mf.project(rng.standard_normal((N_CASES, dim)) * interior, c)
            dxy = mf.dist(x, y)
            assert np.all(dxy >= 0)
            assert np.abs(dxy - mf.dist(y, x)).max() < 1e-9
            assert np.abs(mf.dist(x, x)).max() < 1e-9
            assert np.all(dxy <= mf.dist(x, z) + mf.dist(z, y) + 1e-9)

            # dist0 agrees with the two-point distance against the origin
            origin = mf.project(np.zeros((N_CASES, dim)), c)
            assert np.abs(mf.dist(origin, y) - mf.dist0(y)).max() < 1e-9

            # Mobius matvec: identity map, and the tangent-space route
            ident = mf.mobius_matvec(np.eye(dim), y)
            assert np.abs(ident.values - y.values).max() < 1e-9
            m = rng.standard_normal((dim, dim))
            lifted = mf.exp0(
                mf.TangentTensor(mf.log0(y).values @ m.T, c)
            )
            assert np.abs(mf.mobius_matvec(m, y).values - lifted.values).max() < 1e-6
        assert time.monotonic() - start < 30.0


# ---------------------------------------------------------------------------
# 2. gradient suite
# ---------------------------------------------------------------------------


def _mean_of(f):
    return lambda *xs: T.tensor_mean(f(*xs))


class TestGradientSuite:
    def test_primitives_and_composites(self):
        start = time.monotonic()
        rng = np.random.default_rng(7)

        def t(*shape, scale=1.0):
            return Tensor(rng.standard_normal(shape) * scale, requires_grad=True)

        checks = {
            "add": (_mean_of(T.add), [t(3, 4), t(3, 4)]),
            "mul": (_mean_of(T.mul), [t(3, 4), t(3, 4)]),
            "div": (_mean_of(T.div), [t(3, 4), Tensor(rng.uniform(0.5, 2.0, (3, 4)), requires_grad=True)]),
            "tanh": (_mean_of(T.tanh), [t(3, 4)]),
            "artanh": (_mean_of(T.artanh), [Tensor(rng.uniform(-0.8, 0.8, (3, 4)), requires_grad=True)]),
            "sqrt": (_mean_of(T.sqrt), [Tensor(rng.uniform(0.5, 2.0, (3, 4)), requires_grad=True)]),
            "relu": (_mean_of(T.relu), [Tensor(rng.uniform(0.2, 1.0, (3, 4)), requires_grad=True)]),
            "absolute": (_mean_of(T.absolute), [Tensor(rng.uniform(0.2, 1.0, (3, 4)) * np.sign(rng.standard_normal((3, 4))), requires_grad=True)]),
            "clamp": (_mean_of(lambda x: T.clamp(x, -0.5, 0.5)), [t(3, 4, scale=0.3)]),
            "sum": (lambda x: T.tensor_sum(T.mul(x, x)), [t(3, 4)]),
            "reshape": (_mean_of(lambda x: T.reshape(T.tanh(x), (4, 3))), [t(3, 4)]),
            "transpose": (_mean_of(lambda x: T.transpose(T.tanh(x), (1, 0))), [t(3, 4)]),
            "concat": (_mean_of(lambda a, b: T.concat([a, b], axis=1)), [t(2, 3), t(2, 2)]),
            "slice": (_mean_of(lambda x: T.tensor_slice(x, (slice(None), slice(1, 3)))), [t(3, 4)]),
            "matmul": (_mean_of(T.matmul), [t(2, 3), t(3, 4)]),
            "softmax": (_mean_of(lambda x: T.softmax(x, axis=-1)), [t(2, 5)]),
            "attention": (
                _mean_of(lambda q, k, v: T.scaled_dot_attention(q, k, v)),
                [t(1, 2, 3, 4), t(1, 2, 3, 4), t(1, 2, 3, 4)],
            ),
            "conv3d": (
                _mean_of(lambda x, w, b: T.conv3d(x, w, b, stride=1, padding=1)),
                [t(1, 2, 4, 4, 4), t(2, 2, 3, 3, 3, scale=0.5), t(2)],
            ),
            "conv3d_strided": (
                _mean_of(lambda x, w, b: T.conv3d(x, w, b, stride=2, padding=1)),
                [t(1, 1, 4, 4, 4), t(2, 1, 3, 3, 3, scale=0.5), t(2)],
            ),
            "upsample": (_mean_of(lambda x: T.upsample_nearest3d(T.tanh(x), 2)), [t(1, 2, 2, 2, 2)]),
            "avg_pool": (_mean_of(lambda x: T.avg_pool3d(T.tanh(x), 2)), [t(1, 2, 4, 4, 4)]),
            "group_norm": (
                _mean_of(lambda x, g, b: T.mul(T.group_norm(x, 2, g, b), T.group_norm(x, 2, g, b))),
                [t(2, 4, 2, 2, 2), t(4), t(4)],
            ),
            "h_exp0": (_mean_of(lambda v: nn.h_exp0(v, 1.0)), [t(3, 4, scale=0.4)]),
            "h_log0": (_mean_of(lambda y: nn.h_log0(T.mul(T.tanh(y), 0.3), 1.0)), [t(3, 4)]),
            "h_dist0": (_mean_of(lambda y: nn.h_dist0(T.mul(T.tanh(y), 0.3), 1.0)), [t(3, 4)]),
            "h_mobius_matvec": (
                _mean_of(lambda w, y: nn.h_mobius_matvec(w, T.mul(T.tanh(y), 0.3), 1.0)),
                [t(4, 4, scale=0.3), t(3, 4)],
            ),
        }
        for name, (f, xs) in checks.items():
            err = T.grad_check(f, xs)
            assert err <= 1e-4, f"{name}: relative error {err}"

        # composed graphs: gradient through each full model, probed at one
        # influential weight matrix
        graph = tree_to_graph(parse_synthetic(tokenize("a soft chair")))
        htgc = Htgc(HtgcConfig(embed_dim=8, hidden_dim=8, layers=1), seed=0)

        def htgc_loss(w):
            htgc.proj_in.w = w
            out = htgc.encode_graph([graph]).values
            return T.mul(out, out).sum()

        assert T.grad_check(htgc_loss, htgc.proj_in.w) <= 1e-4

        htie = Htie(
            HtieConfig(model_dim=8, heads=2, encoder_layers=1, adaptation_layers=1),
            seed=0,
        )
        toks = tokenize("a wide table")

        def htie_loss(w):
            htie.mobius_w = w
            out = htie.encode_text([toks]).values
            return T.mul(out, out).sum()

        assert T.grad_check(htie_loss, htie.mobius_w) <= 1e-4

        cfg = diffusion.DiffusionConfig(
            latent_size=4, base_channels=4, heads=2, time_dim=8, hier_dim=4,
            cond1_dim=8, cond2_dim=8, t_train=50,
        )
        den = diffusion.Denoiser(cfg)
        z = Tensor(np.random.default_rng(1).standard_normal((1, 3, 4, 4, 4)))
        c1 = htie.encode_text([toks])
        c2 = diffusion.ConditionSeq(
            Tensor(np.random.default_rng(2).standard_normal((1, 3, 8)) * 0.3),
            np.ones((1, 3), dtype=bool),
        )

        def den_loss(w):
            den.time1.w = w
            out, feats = den(z, np.array([5]), c1, c2)
            return T.add(T.tensor_mean(T.mul(out, out)), den.hier_loss(feats))

        assert T.grad_check(den_loss, den.time1.w) <= 1e-4
        assert time.monotonic() - start < 300.0


# ---------------------------------------------------------------------------
# 3. caption-graph fidelity vs hand-traced fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def cases():
    with open(DATA / "graph_fixtures.json") as f:
        return json.load(f)["cases"]


class TestGraphFixtures:
    def test_heads_match_hand_trace(self, cases):
        for case in cases:
            tree = parse_synthetic(tokenize(case["sentence"]))
            got = [0 if t.head == i else t.head + 1 for i, t in enumerate(tree.tokens)]
            assert got == case["heads"], case["sentence"]

    def test_adjacency_both_modes_bit_exact(self, cases):
        for case in cases:
            n = len(case["heads"])
            expected = np.eye(n, dtype=np.int64)
            for dep, head in case["edges"]:
                expected[dep - 1, head - 1] = expected[head - 1, dep - 1] = 1
            tree = parse_synthetic(tokenize(case["sentence"]))
            got = tree_to_graph(tree, mode="corrected").adjacency
            assert np.array_equal(got, expected), case["sentence"]

            faithful = expected.copy()
            if not case["last_edge_kept"]:
                dep, head = case["edges"][-1]
                faithful[dep - 1, head - 1] = faithful[head - 1, dep - 1] = 0
                faithful[dep - 1, dep - 1] = 1
            got_f = tree_to_graph(tree, mode="faithful").adjacency
            assert np.array_equal(got_f, faithful), case["sentence"]


# ---------------------------------------------------------------------------
# 4. hierarchy hinge fidelity
# ---------------------------------------------------------------------------


class TestHingeFidelity:
    def _value(self, d1, d2, d3):
        out = diffusion.hinge(
            Tensor(np.array([[d1]])), Tensor(np.array([[d2]])), Tensor(np.array([[d3]]))
        )
        return float(out.data[0, 0])

    def test_hand_evaluated_values(self):
        assert self._value(1.0, 2.0, 3.0) == 0.0
        assert self._value(2.0, 1.0, 3.0) == 1.0
        assert self._value(3.0, 2.0, 1.0) == 2.0

    def test_zero_iff_ordered(self):
        rng = np.random.default_rng(4)
        d = rng.uniform(0.0, 3.0, (N_CASES, 3))
        vals = diffusion.hinge(
            Tensor(d[:, :1]), Tensor(d[:, 1:2]), Tensor(d[:, 2:])
        ).data[:, 0]
        ordered = (d[:, 0] <= d[:, 1]) & (d[:, 1] <= d[:, 2])
        assert np.array_equal(vals == 0.0, ordered)


# ---------------------------------------------------------------------------
# 10. format round trips
# ---------------------------------------------------------------------------


class TestFormatRoundTrips:
    def test_tsdf_file(self, tmp_path):
        grid = datagen.spec_to_tsdf(datagen.sample_spec(1), 16)
        write_tsdf(grid, tmp_path / "g.tsdf")
        back = read_tsdf(tmp_path / "g.tsdf")
        assert np.array_equal(back.values, grid.values)
        assert back.tau == grid.tau

    def test_checkpoint(self, tmp_path):
        rng = np.random.default_rng(0)
        params = {
            "a.w": rng.standard_normal((3, 4)).astype(np.float32),
            "b.codebook": rng.standard_normal((8, 2)).astype(np.float32),
        }
        meta = {"kind": "test", "nested": {"x": 1}}
        save_checkpoint(params, tmp_path / "m.npz", meta)
        got, got_meta = load_checkpoint(tmp_path / "m.npz")
        assert set(got) == set(params)
        for k in params:
            assert np.array_equal(got[k], params[k])
        assert got_meta == meta

    def test_dataset_manifest(self, tmp_path):
        specs = datagen.generate_corpus(3, 3)
        datagen.write_dataset(specs, 16, tmp_path / "data")
        items = datagen.read_dataset(tmp_path / "data")
        assert len(items) == 3
        for spec, item in zip(specs, items):
            assert np.array_equal(
                item.tsdf.values, datagen.spec_to_tsdf(spec, 16).values
            )
            assert item.captions == datagen.spec_to_captions(spec)

    def test_conllu(self, tmp_path):
        trees = [
            parse_synthetic(tokenize(s))
            for s in ("a chair", "a soft table with three round legs")
        ]
        write_conllu(trees, tmp_path / "t.conllu")
        back = read_conllu(tmp_path / "t.conllu")
        assert back == trees
        # a second write of the re-read trees is byte-identical
        write_conllu(back, tmp_path / "t2.conllu")
        assert (tmp_path / "t.conllu").read_bytes() == (tmp_path / "t2.conllu").read_bytes()


# ---------------------------------------------------------------------------
# 5. codec reconstruction on the full corpus
# ---------------------------------------------------------------------------


@pytest.mark.slow
class TestCodecReconstruction:
    def test_held_out_iou(self, tmp_path):
        start = time.monotonic()
        specs = datagen.generate_corpus(0, 1024)
        grids = np.stack([datagen.spec_to_tsdf(s, 32).values for s in specs])
        held = [datagen.spec_to_tsdf(s, 32) for s in specs[960:]]

        # the codec is fully convolutional, so it can pretrain on random crops
        # (cheap steps), then fine-tune briefly at full resolution to pick up
        # the boundary statistics the crops never show
        crops = random_crops(grids[:960], 16, 3, np.random.default_rng(1))
        cfg = VqvaeConfig(
            resolution=32, hidden=16, codebook_size=512, lr=3e-3,
            lr_decay=0.8, band_weight=6.0, batch_size=8, epochs=6, seed=0,
        )
        model = train_vqvae(crops, cfg, tmp_path / "vq.npz", log=None)
        ft_cfg = VqvaeConfig(
            resolution=32, hidden=16, codebook_size=512, lr=6e-4,
            lr_decay=0.6, band_weight=6.0, batch_size=2, epochs=2, seed=3,
        )
        model = train_vqvae(
            grids[:256], ft_cfg, tmp_path / "vq.npz", log=None, init=model
        )
        elapsed = time.monotonic() - start
        assert elapsed < 1800.0, f"training budget exceeded: {elapsed:.0f}s"

        ious = [
            metrics.iou(model.decode(model.quantize(model.encode(g))[0]), g)
            for g in held
        ]
        assert np.mean(ious) >= 80.0, f"held-out mean IoU {np.mean(ious):.2f}"


# ---------------------------------------------------------------------------
# 6. diffusion training smoke + bit-reproducible sampling
# ---------------------------------------------------------------------------


@pytest.mark.slow
class TestDiffusionSmoke:
    def test_mse_drop_and_reproducible_sampling(self, tmp_path):
        specs = datagen.generate_corpus(42, 8)
        grids = [datagen.spec_to_tsdf(s, 16) for s in specs]
        captions = [datagen.spec_to_captions(s).levels[3] for s in specs]
        codec = Vqvae(VqvaeConfig(resolution=16, hidden=8, codebook_size=64))
        latents = diffusion.encode_corpus(codec, grids)

        cfg = diffusion.DiffusionConfig(
            latent_size=4, base_channels=8, heads=2, time_dim=32, hier_dim=8,
            cond1_dim=32, cond2_dim=32, alpha=0.1, lr=3e-3, batch_size=8,
            steps=2000, seed=0,
        )
        htgc = Htgc(HtgcConfig(embed_dim=32, hidden_dim=32, layers=1), seed=1)
        htie = Htie(
            HtieConfig(model_dim=32, heads=2, encoder_layers=1, adaptation_layers=1),
            seed=2,
        )
        den = diffusion.train_diffusion(
            latents, captions, cfg, htgc, htie,
            tmp_path / "d.npz", tmp_path / "loss.csv", log=None,
        )
        mse = np.genfromtxt(
            tmp_path / "loss.csv", delimiter=",", names=True
        )["mse_loss"]
        assert len(mse) == 2000
        early = mse[:10].mean()
        late = mse[-10:].mean()
        assert early / late >= 10.0, f"MSE only dropped {early / late:.1f}x"

        mean, std = diffusion.latent_stats(latents)
        pipe = diffusion.GenerationPipeline(codec, htgc, htie, den, mean, std)
        a = pipe.sample_latent(captions[0], seed=5, steps=100)
        b = pipe.sample_latent(captions[0], seed=5, steps=100)
        assert np.array_equal(a.values, b.values)


# ---------------------------------------------------------------------------
# 7-9. hierarchy and conditioning trends on one trained model
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def trend_model(tmp_path_factory):
    """Train the small end-to-end model shared by the three trend tests."""
    out = tmp_path_factory.mktemp("trend")
    specs = datagen.generate_corpus(7, 384)
    grids = [datagen.spec_to_tsdf(s, 16) for s in specs]
    caps = [datagen.spec_to_captions(s) for s in specs]
    train_g, held_g = grids[:128], grids[128:]

    vq_cfg = VqvaeConfig(
        resolution=16, hidden=16, codebook_size=256, seed=0, lr=3e-3,
        lr_decay=0.985, band_weight=6.0, batch_size=8, epochs=120,
    )
    vq = train_vqvae(
        np.stack([g.values for g in train_g]), vq_cfg, out / "vq.npz", log=None
    )

    # every item appears with all four caption levels so the model sees the
    # whole caption hierarchy
    lat1 = diffusion.encode_corpus(vq, train_g)
    lat = np.concatenate([lat1] * 4, axis=0)
    captions = [caps[i].levels[k] for k in range(4) for i in range(128)]
    cfg = diffusion.DiffusionConfig(
        latent_size=4, base_channels=12, heads=2, time_dim=32, hier_dim=8,
        cond1_dim=48, cond2_dim=48, alpha=0.1, lr=3e-3, batch_size=8,
        steps=8000, seed=0,
    )
    htgc = Htgc(HtgcConfig(embed_dim=48, hidden_dim=48, layers=1), seed=1)
    htie = Htie(
        HtieConfig(model_dim=48, heads=2, encoder_layers=1, adaptation_layers=1),
        seed=2,
    )
    den = diffusion.train_diffusion(
        lat, captions, cfg, htgc, htie, out / "d.npz", log=None
    )
    mean, std = diffusion.latent_stats(lat)
    pipe = diffusion.GenerationPipeline(vq, htgc, htie, den, mean, std)

    held_caps = caps[128:]
    # 64 seed-matched prompts per caption level for the matching-distance
    # trend; a larger 256-prompt matched set for the sign test, which needs
    # the statistical power
    gens = {
        k: pipe.generate_batch(
            [held_caps[i].levels[k] for i in range(64)], list(range(64)), steps=50
        )
        for k in range(4)
    }
    matched = pipe.generate_batch(
        [held_caps[i].levels[3] for i in range(256)], list(range(256)), steps=50
    )
    return {
        "pipe": pipe, "den": den, "mean": mean, "std": std,
        "held_caps": held_caps, "held_g": held_g, "gens": gens,
        "matched": matched,
    }


@pytest.mark.slow
class TestHierarchyTrends:
    def test_hyperbolic_depth_ordering(self, trend_model):
        from hypershape.textgraph import parse_synthetic as parse, tokenize as tok

        pipe, den = trend_model["pipe"], trend_model["den"]
        mean, std = trend_model["mean"], trend_model["std"]
        captions = [
            trend_model["held_caps"][i % 256].levels[3] for i in range(100)
        ]
        z = pipe.sample_latent_batch(captions, list(range(100)), steps=50)
        zn = (z - mean.reshape(1, -1, 1, 1, 1)) / std.reshape(1, -1, 1, 1, 1)
        with T.no_grad():
            toks = [tok(c) for c in captions]
            graphs = [tree_to_graph(parse(t)) for t in toks]
            c1 = pipe.htie.encode_text(toks)
            c2 = pipe.htgc.encode_graph(graphs)
            _, (f1, f2) = den(
                Tensor(zn.astype(np.float32)), np.ones(100, dtype=int), c1, c2
            )
            per_branch = []
            for f in (f1, f2):
                d1, d2, d3 = den.level_distances(f)
                per_branch.append(
                    np.concatenate([d1.data, d2.data, d3.data], axis=1)
                )
        d1, d2, d3 = metrics.hd((per_branch[0] + per_branch[1]) / 2)
        assert d3 > d2 > d1, f"depth ordering violated: {d1:.4f} {d2:.4f} {d3:.4f}"

    def test_matching_distance_monotone(self, trend_model):
        gens = trend_model["gens"]
        h = [metrics.hmd(gens[0], gens[k]) for k in (1, 2, 3)]
        assert all(np.isfinite(h))
        tol = 0.05 * h[0]
        violations = [max(h[i + 1] - h[i], 0.0) for i in range(2)]
        bad = [v for v in violations if v > 0]
        assert len(bad) <= 1 and all(v <= tol for v in bad), (
            f"HMD not monotone within tolerance: {h}"
        )

    def test_conditioning_beats_shuffled_captions(self, trend_model):
        from scipy import stats

        matched = trend_model["matched"]
        held_caps, held_g = trend_model["held_caps"], trend_model["held_g"]
        pipe = trend_model["pipe"]
        n = len(matched)
        perm = np.random.default_rng(123).permutation(n)
        perm = np.where(perm == np.arange(n), (perm + 1) % n, perm)
        shuffled = pipe.generate_batch(
            [held_caps[perm[i]].levels[3] for i in range(n)],
            list(range(n)), steps=50,
        )
        iou_m = np.array([metrics.iou(matched[i], held_g[i]) for i in range(n)])
        iou_s = np.array([metrics.iou(shuffled[i], held_g[i]) for i in range(n)])
        assert iou_m.mean() > iou_s.mean(), (
            f"matched mean IoU {iou_m.mean():.2f} <= shuffled {iou_s.mean():.2f}"
        )
        wins = int(np.sum(iou_m > iou_s))
        losses = int(np.sum(iou_m < iou_s))
        p = stats.binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue
        assert p < 0.05, f"sign test p={p:.4f} (wins {wins}/{wins + losses})"
