"""
Anatomy of one predicted pixel
==============================

Walk through the pieces that make up a single prediction: the similar
pixels picked at each reference date, their weights, and the per-date
regression coefficients.
"""

import warnings

import numpy as np

from stnlffm import (
    FusionConfig,
    FusionTask,
    SceneSpec,
    generate_series,
    predict_image,
    predict_pixel,
)

warnings.filterwarnings("ignore", message="reflectance outside")

spec = SceneSpec(width=32, height=32, band_count=2, class_count=3, cell_size=4,
                 knot_dates=[0, 60], noise_sigma=0.004, seed=5)
frames = generate_series(spec, [0, 20, 60])
task = FusionTask((frames[0].pair(), frames[2].pair()), frames[1].coarse, 20)
config = FusionConfig()

target, band = (13, 18), 0
d = predict_pixel(target, band, task, config, detail=True)

# %%
# Similar pixels per reference date. The target always belongs to its own set.
for sps, w in zip(d.members, d.weights.per_date):
    print(f"date index {sps.reference_date_index}: {len(sps)} members, "
          f"weight mass {w.sum():.3f}")
    top = np.argsort(w)[::-1][:3]
    for i in top:
        x, y = sps.members[i]
        print(f"    ({x:2d},{y:2d})  weight {w[i]:.4f}")

# %%
# The date whose coarse image changed less towards day 20 gets more mass.
# Each date contributes a * F_k + b; a is pulled towards 1.
for fit in d.coefficients:
    print(f"a = {fit.a:.4f}  b = {fit.b:+.4f}  members used {fit.n_used}"
          f"{'  (fallback)' if fit.degenerate else ''}")

# %%
# The pixel-level path and the image engine agree.
img = predict_image(task, config)
x, y = target
print(f"predict_pixel {d.value:.6f}   predict_image {img.data[band, y, x]:.6f}   "
      f"truth {frames[1].truth.data[band, y, x]:.6f}")
print(f"total weight {d.weights.total():.12f}")
