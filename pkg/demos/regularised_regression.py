"""
Pulling the gain towards one
============================

The per-date linear map ``F_p = a * F_k + b`` is fitted on the coarse
values of the similar pixels, with a penalty ``gamma * (a - 1)**2``.
Small ``gamma`` trusts the data; large ``gamma`` reduces to a pure offset.
"""

import numpy as np

from stnlffm import RegressionParams, fit_restricted

rng = np.random.default_rng(3)
c_k = rng.uniform(0.05, 0.4, 30)
c_p = 1.4 * c_k - 0.03 + rng.normal(0, 0.01, 30)

# %%
for gamma in (0.0, 0.01, 0.05, 0.5, 5.0, 1e9):
    fit = fit_restricted(c_k, c_p, RegressionParams(gamma=gamma))
    print(f"gamma {gamma:8.2g}:  a = {fit.a:.4f}  b = {fit.b:+.4f}")

print(f"mean coarse change {np.mean(c_p - c_k):+.4f}  (the gamma -> inf intercept)")

# %%
# Too few members, or no spread in c_k, falls back to a = 1 and the mean change.
fit = fit_restricted(c_k[:3], c_p[:3])
print(f"3 points: a = {fit.a}, b = {fit.b:+.4f}, fallback = {fit.degenerate}")
