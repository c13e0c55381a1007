"""Compiled per-tile prediction kernel.

Each output pixel is computed independently with a fixed summation order
(date-major, then member scan order), so results do not depend on how the
raster is split into tiles or how tiles are scheduled across threads.
"""
import numpy as np
from numba import njit


def window_change_sums(ck, cp, ckvalid, cpvalid, radius):
    """Clipped-window sums of ``|ck - cp|`` over pixels valid in both, via integral images.

    ck: (K, B, H, W); cp: (B, H, W); returns (K, B, H, W).
    """
    K, B, H, W = ck.shape
    ys = np.arange(H)
    xs = np.arange(W)
    ylo, yhi = np.maximum(ys - radius, 0), np.minimum(ys + radius + 1, H)
    xlo, xhi = np.maximum(xs - radius, 0), np.minimum(xs + radius + 1, W)
    out = np.empty((K, B, H, W))
    for k in range(K):
        use = ckvalid[k] & cpvalid
        for b in range(B):
            change = np.where(use, np.abs(ck[k, b] - cp[b]), 0.0)
            sat = np.zeros((H + 1, W + 1))
            sat[1:, 1:] = change.cumsum(axis=0).cumsum(axis=1)
            s = (
                sat[yhi][:, xhi]
                - sat[ylo][:, xhi]
                - sat[yhi][:, xlo]
                + sat[ylo][:, xlo]
            )
            out[k, b] = np.maximum(s, 0.0)
    return out


@njit(cache=True, nogil=True)
def predict_tile(
    fine, ck, cp, ckvalid, cpvalid, dvalid, tau, whole_sums, kernel,
    search_r, sigma_cc, cap, h, squared, epsilon,
    gamma, min_points, variance_floor, a_min, a_max, starfm_mode,
    y0, y1, x0, x1,
    pred, out_valid, wsum,
):
    K, B, H, W = fine.shape
    patch_r = kernel.shape[0] // 2
    inv_h2 = 1.0 / (h * h)
    side = 2 * search_r + 1
    cand_y = np.empty(side * side, np.int64)
    cand_x = np.empty(side * side, np.int64)
    cand_d = np.empty(side * side)
    keep = np.empty(side * side, np.bool_)
    mem_y = np.empty(side * side, np.int64)
    mem_x = np.empty(side * side, np.int64)
    indiv = np.empty(side * side)
    contrib = np.zeros((K, B))
    normsum = np.zeros((K, B))
    date_ok = np.zeros(K, np.bool_)

    for y in range(y0, y1):
        for x in range(x0, x1):
            any_ok = False
            for k in range(K):
                date_ok[k] = cpvalid[y, x] and dvalid[k, y, x]
                any_ok = any_ok or date_ok[k]
            if not any_ok:
                out_valid[y, x] = False
                for b in range(B):
                    pred[b, y, x] = 0.0
                    wsum[b, y, x] = 0.0
                continue
            out_valid[y, x] = True

            wy0 = max(0, y - search_r)
            wy1 = min(H, y + search_r + 1)
            wx0 = max(0, x - search_r)
            wx1 = min(W, x + search_r + 1)

            for k in range(K):
                if not date_ok[k]:
                    continue
                # --- similar pixel selection
                n = 0
                t_idx = -1
                for yy in range(wy0, wy1):
                    for xx in range(wx0, wx1):
                        is_t = yy == y and xx == x
                        if not is_t:
                            if not dvalid[k, yy, xx]:
                                continue
                        dist = 0.0
                        good = True
                        for b in range(B):
                            sd = abs(fine[k, b, yy, xx] - fine[k, b, y, x])
                            if not is_t:
                                if sd > tau[k, b]:
                                    good = False
                                    break
                                chg_i = abs(ck[k, b, yy, xx] - cp[b, yy, xx])
                                chg_t = abs(ck[k, b, y, x] - cp[b, y, x])
                                if not abs(chg_i - chg_t) < sigma_cc:
                                    good = False
                                    break
                            dist += sd
                        if not good:
                            continue
                        if is_t:
                            t_idx = n
                        cand_y[n] = yy
                        cand_x[n] = xx
                        cand_d[n] = dist
                        n += 1

                if n > cap:
                    others = np.empty(n - 1, np.int64)
                    j = 0
                    for i in range(n):
                        keep[i] = False
                        if i != t_idx:
                            others[j] = i
                            j += 1
                    order = np.argsort(cand_d[others], kind="mergesort")
                    for j in range(cap - 1):
                        keep[others[order[j]]] = True
                    keep[t_idx] = True
                    m = 0
                    for i in range(n):
                        if keep[i]:
                            mem_y[m] = cand_y[i]
                            mem_x[m] = cand_x[i]
                            m += 1
                else:
                    m = n
                    for i in range(n):
                        mem_y[i] = cand_y[i]
                        mem_x[i] = cand_x[i]

                for b in range(B):
                    # --- individual weights from coarse patches
                    tot = 0.0
                    for i in range(m):
                        my = mem_y[i]
                        mx = mem_x[i]
                        num = 0.0
                        den = 0.0
                        for oy in range(-patch_r, patch_r + 1):
                            py = my + oy
                            qy = y + oy
                            if py < 0 or py >= H or qy < 0 or qy >= H:
                                continue
                            for ox in range(-patch_r, patch_r + 1):
                                px = mx + ox
                                qx = x + ox
                                if px < 0 or px >= W or qx < 0 or qx >= W:
                                    continue
                                if not (ckvalid[k, py, px] and cpvalid[qy, qx]):
                                    continue
                                g = kernel[oy + patch_r, ox + patch_r]
                                diff = ck[k, b, py, px] - cp[b, qy, qx]
                                if squared:
                                    num += g * diff * diff
                                else:
                                    num += g * abs(diff)
                                den += g
                        indiv[i] = np.exp(-(num / den) * inv_h2)
                        tot += indiv[i]

                    # --- regression coefficients
                    if starfm_mode:
                        a = 1.0
                        off = cp[b, y, x] - ck[k, b, y, x]
                    else:
                        mk = 0.0
                        mp = 0.0
                        for i in range(m):
                            mk += ck[k, b, mem_y[i], mem_x[i]]
                            mp += cp[b, mem_y[i], mem_x[i]]
                        mk /= m
                        mp /= m
                        sxx = 0.0
                        sxy = 0.0
                        mdiff = 0.0
                        for i in range(m):
                            dk = ck[k, b, mem_y[i], mem_x[i]] - mk
                            dp = cp[b, mem_y[i], mem_x[i]] - mp
                            sxx += dk * dk
                            sxy += dk * dp
                            mdiff += cp[b, mem_y[i], mem_x[i]] - ck[k, b, mem_y[i], mem_x[i]]
                        mdiff /= m
                        if m < min_points or sxx / m < variance_floor:
                            a = 1.0
                            off = mdiff
                        else:
                            a = (sxy + gamma) / (sxx + gamma)
                            off = mp - a * mk
                            if a < a_min or a > a_max:
                                a = 1.0
                                off = mdiff

                    # --- date contribution with normalised individual weights
                    acc = 0.0
                    wacc = 0.0
                    for i in range(m):
                        if tot > 0.0:
                            wn = indiv[i] / tot
                        else:
                            wn = 1.0 / m
                        acc += wn * (a * fine[k, b, mem_y[i], mem_x[i]] + off)
                        wacc += wn
                    contrib[k, b] = acc
                    normsum[k, b] = wacc

            # --- whole weights across dates and final blend
            for b in range(B):
                inv_total = 0.0
                for k in range(K):
                    if date_ok[k]:
                        inv_total += 1.0 / (whole_sums[k, b, y, x] + epsilon)
                value = 0.0
                wtot = 0.0
                for k in range(K):
                    if date_ok[k]:
                        ww = (1.0 / (whole_sums[k, b, y, x] + epsilon)) / inv_total
                        value += ww * contrib[k, b]
                        wtot += ww * normsum[k, b]
                pred[b, y, x] = value
                wsum[b, y, x] = wtot
