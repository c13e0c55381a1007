"""Naive reference implementation of the full prediction, used as a test oracle.

Everything is explicit Python loops over nested lists: no integral images, no
vectorisation, and the regression is solved from the raw 2x2 normal equations
rather than the centred closed form. Intended for rasters up to ~64x64.
"""
from __future__ import annotations

import math

import numpy as np

from .fusion import FusionConfig, FusionTask, Mode
from .raster import RasterGrid

__all__ = ["oracle_predict"]


def _std(values):
    n = len(values)
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / n)


def _solve_normal_equations(ck, cp, gamma):
    n = len(ck)
    sxx = sum(v * v for v in ck)
    sx = sum(ck)
    sxy = sum(u * v for u, v in zip(ck, cp))
    sy = sum(cp)
    lhs = np.array([[sxx + gamma, sx], [sx, float(n)]])
    rhs = np.array([sxy + gamma, sy])
    a, b = np.linalg.solve(lhs, rhs)
    return float(a), float(b)


def oracle_predict(task: FusionTask, config: FusionConfig = FusionConfig(), *,
                   return_weight_sums: bool = False):
    sim, wp, rp = config.similarity, config.weights, config.regression
    H, W, B = task.height, task.width, task.band_count
    refs = task.references
    K = len(refs)

    F = [p.fine.data.astype(float).tolist() for p in refs]
    C = [p.coarse.data.astype(float).tolist() for p in refs]
    P = task.coarse_p.data.astype(float).tolist()
    fine_ok = [p.fine.valid.tolist() for p in refs]
    ck_ok = [p.coarse.valid.tolist() for p in refs]
    cp_ok = task.coarse_p.valid.tolist()

    def usable(k, y, x):
        return fine_ok[k][y][x] and ck_ok[k][y][x] and cp_ok[y][x]

    tau = []
    for k in range(K):
        row = []
        for b in range(B):
            vals = [F[k][b][y][x] for y in range(H) for x in range(W) if usable(k, y, x)]
            row.append(sim.d * _std(vals) * 2.0 / sim.classes if vals else 0.0)
        tau.append(row)

    pr = wp.patch_size // 2
    sr = sim.search_window // 2
    wr = wp.whole_window // 2

    out = [[[0.0] * W for _ in range(H)] for _ in range(B)]
    wsum = [[[0.0] * W for _ in range(H)] for _ in range(B)]
    out_valid = [[False] * W for _ in range(H)]

    for y in range(H):
        for x in range(W):
            dates = [k for k in range(K) if usable(k, y, x)]
            if not dates:
                continue
            out_valid[y][x] = True

            members = {}
            for k in dates:
                cands = []
                for yy in range(y - sr, y + sr + 1):
                    for xx in range(x - sr, x + sr + 1):
                        if not (0 <= yy < H and 0 <= xx < W):
                            continue
                        if (yy, xx) == (y, x):
                            cands.append((0.0, yy, xx, True))
                            continue
                        if not usable(k, yy, xx):
                            continue
                        ok = True
                        dist = 0.0
                        for b in range(B):
                            sd = abs(F[k][b][yy][xx] - F[k][b][y][x])
                            cc = abs(abs(C[k][b][yy][xx] - P[b][yy][xx])
                                     - abs(C[k][b][y][x] - P[b][y][x]))
                            if sd > tau[k][b] or not cc < sim.sigma_cc:
                                ok = False
                                break
                            dist += sd
                        if ok:
                            cands.append((dist, yy, xx, False))
                if len(cands) > sim.cap:
                    scan = {(c[1], c[2]): i for i, c in enumerate(cands)}
                    others = sorted((c for c in cands if not c[3]),
                                    key=lambda c: (c[0], scan[(c[1], c[2])]))
                    chosen = {(c[1], c[2]) for c in others[: sim.cap - 1]} | {(y, x)}
                    cands = [c for c in cands if (c[1], c[2]) in chosen]
                members[k] = [(c[1], c[2]) for c in cands]

            for b in range(B):
                inv = {}
                for k in dates:
                    s = 0.0
                    for yy in range(max(0, y - wr), min(H, y + wr + 1)):
                        for xx in range(max(0, x - wr), min(W, x + wr + 1)):
                            if ck_ok[k][yy][xx] and cp_ok[yy][xx]:
                                s += abs(C[k][b][yy][xx] - P[b][yy][xx])
                    inv[k] = 1.0 / (s + wp.epsilon)
                inv_sum = sum(inv.values())

                value = 0.0
                total_w = 0.0
                for k in dates:
                    whole = inv[k] / inv_sum
                    ind = []
                    for (my, mx) in members[k]:
                        num = den = 0.0
                        for oy in range(-pr, pr + 1):
                            for ox in range(-pr, pr + 1):
                                py, px, qy, qx = my + oy, mx + ox, y + oy, x + ox
                                if not (0 <= py < H and 0 <= px < W and 0 <= qy < H and 0 <= qx < W):
                                    continue
                                if not (ck_ok[k][py][px] and cp_ok[qy][qx]):
                                    continue
                                g = math.exp(-(oy * oy + ox * ox) / (2.0 * wp.kernel_sigma ** 2))
                                diff = C[k][b][py][px] - P[b][qy][qx]
                                num += g * (diff * diff if wp.squared else abs(diff))
                                den += g
                        ind.append(math.exp(-(num / den) / wp.h ** 2))
                    ind_total = sum(ind)

                    ck_vals = [C[k][b][my][mx] for (my, mx) in members[k]]
                    cp_vals = [P[b][my][mx] for (my, mx) in members[k]]
                    n = len(ck_vals)
                    mean_diff = sum(p - c for p, c in zip(cp_vals, ck_vals)) / n
                    if config.mode is Mode.STARFM:
                        a, off = 1.0, P[b][y][x] - C[k][b][y][x]
                    elif n < rp.min_points or _std(ck_vals) ** 2 < rp.variance_floor:
                        a, off = 1.0, mean_diff
                    else:
                        a, off = _solve_normal_equations(ck_vals, cp_vals, rp.gamma)
                        if not (rp.a_min <= a <= rp.a_max):
                            a, off = 1.0, mean_diff

                    for w_i, (my, mx) in zip(ind, members[k]):
                        weight = (w_i / ind_total) * whole
                        value += weight * (a * F[k][b][my][mx] + off)
                        total_w += weight
                out[b][y][x] = value
                wsum[b][y][x] = total_w

    grid = RasterGrid(np.array(out), np.array(out_valid), task.coarse_p.pixel_size)
    if return_weight_sums:
        return grid, np.array(wsum)
    return grid
