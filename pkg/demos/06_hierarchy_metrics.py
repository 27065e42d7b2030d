"""Evaluating shape quality and caption-hierarchy behavior.

Covers the geometric metrics (occupancy IoU, Chamfer distance on
farthest-point-sampled surface clouds, F-score) and the two
hierarchy-aware ones:

* HMD compares generations from coarse captions against seed-matched
  generations from detailed captions; it should shrink as captions gain
  detail.
* HD tracks how far each denoiser feature level sits from the origin of
  the hyperbolic ball; training pushes fine levels farther out than
  coarse ones.
"""

import numpy as np

from hypershape import datagen, metrics

spec = datagen.generate_corpus(master_seed=9, count=1)[0]
grid = datagen.spec_to_tsdf(spec, 32)

# --- geometric metrics against a jittered copy -----------------------------
noisy = datagen.spec_to_tsdf(spec, 32)
vals = noisy.values.copy()
vals[:, :, :12] = 1.0  # delete the bottom third (the legs)
damaged = type(noisy)(vals, noisy.tau)

print("IoU vs itself:   ", metrics.iou(grid, grid))
print("IoU vs damaged:  ", round(metrics.iou(grid, damaged), 2))

cloud_a = metrics.shape_cloud(grid)
cloud_b = metrics.shape_cloud(damaged)
print("surface cloud:", cloud_a.shape)
print("chamfer self:    ", metrics.chamfer(cloud_a, cloud_a))
print("chamfer damaged: ", round(metrics.chamfer(cloud_a, cloud_b), 4))
print("f-score damaged: ", round(metrics.fscore(cloud_a, cloud_b), 4))

# --- HMD: seed-matched generations, coarse vs detailed caption -------------
# Synthetic stand-in: "coarse" generations are damaged copies, "detailed"
# ones are exact, so HMD decreases as the caption level rises.
detailed = [grid] * 4
coarse = [damaged] * 4
print("HMD coarse->detailed:", round(metrics.hmd(coarse, detailed), 4))
print("HMD detailed->detailed:", metrics.hmd(detailed, detailed))

# --- HD: mean distance-to-origin per feature level -------------------------
# Rows are per-generation (deep, middle, shallow) hyperbolic distances; a
# well-trained model yields a strictly increasing triple.
fake = np.abs(np.random.default_rng(0).normal([1.0, 2.0, 3.0], 0.1, (100, 3)))
d_deep, d_mid, d_shallow = metrics.hd(fake)
print("HD per level:", round(d_deep, 3), round(d_mid, 3), round(d_shallow, 3))
print("ordering holds:", d_shallow > d_mid > d_deep)
