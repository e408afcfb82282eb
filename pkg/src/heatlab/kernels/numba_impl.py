"""numba-compiled kernel backend.

Outputs must match kernels.numpy_impl bit for bit; see that module for the
contract of each function. Squared distances and window sums are exact int64,
and the polygon fill uses the same float64 expression order as the numpy
version.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF_SQ = np.int64(1) << np.int64(62)
_BIG = np.int64(1) << np.int64(31)


@njit(cache=True)
def edt_sq(mask):
    h, w = mask.shape
    # per-column linear distance, then squared
    g = np.empty((h, w), dtype=np.int64)
    for j in range(w):
        d = _BIG
        for i in range(h):
            if mask[i, j]:
                d = 0
            elif d < _BIG:
                d += 1
            g[i, j] = d
        d = _BIG
        for i in range(h - 1, -1, -1):
            if mask[i, j]:
                d = 0
            elif d < _BIG:
                d += 1
            if d < g[i, j]:
                g[i, j] = d
    for i in range(h):
        for j in range(w):
            v = g[i, j]
            g[i, j] = INF_SQ if v >= _BIG else v * v

    # per-row lower envelope of parabolas f(j') + (j - j')^2
    out = np.empty((h, w), dtype=np.int64)
    v = np.empty(w, dtype=np.int64)
    z = np.empty(w + 1, dtype=np.float64)
    for i in range(h):
        k = 0
        v[0] = 0
        z[0] = -1e300
        z[1] = 1e300
        for q in range(1, w):
            fq = g[i, q] + q * q
            s = (fq - (g[i, v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
            while s <= z[k]:
                k -= 1
                s = (fq - (g[i, v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = 1e300
        k = 0
        for j in range(w):
            while z[k + 1] < j:
                k += 1
            p = v[k]
            dsq = (j - p) * (j - p) + g[i, p]
            out[i, j] = dsq if dsq < INF_SQ else INF_SQ
    return out


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit(cache=True)
def label_components(mask):
    h, w = mask.shape
    parent = np.arange(h * w, dtype=np.int64)
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            p = i * w + j
            if j > 0 and mask[i, j - 1]:
                _union(parent, p, p - 1)
            if i > 0:
                if mask[i - 1, j]:
                    _union(parent, p, p - w)
                if j > 0 and mask[i - 1, j - 1]:
                    _union(parent, p, p - w - 1)
                if j < w - 1 and mask[i - 1, j + 1]:
                    _union(parent, p, p - w + 1)
    labels = np.zeros((h, w), dtype=np.int32)
    canon = np.full(h * w, -1, dtype=np.int32)
    count = 0
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            root = _find(parent, i * w + j)
            if canon[root] < 0:
                count += 1
                canon[root] = count
            labels[i, j] = canon[root]
    return labels, count


@njit(cache=True)
def majority_downsample(codes, k, nodata_code):
    hb, wb = codes.shape
    H = hb // k
    W = wb // k
    out = np.empty((H, W), dtype=np.int64)
    buf = np.empty(k * k, dtype=np.int64)
    for bi in range(H):
        for bj in range(W):
            n = 0
            for di in range(k):
                for dj in range(k):
                    val = codes[bi * k + di, bj * k + dj]
                    if val != nodata_code:
                        buf[n] = val
                        n += 1
            if n == 0:
                out[bi, bj] = nodata_code
                continue
            window = np.sort(buf[:n])
            best_code = window[0]
            best_cnt = 0
            cur = window[0]
            cnt = 0
            for t in range(n):
                if window[t] == cur:
                    cnt += 1
                else:
                    if cnt > best_cnt:  # strictly greater keeps the lowest code
                        best_cnt = cnt
                        best_code = cur
                    cur = window[t]
                    cnt = 1
            if cnt > best_cnt:
                best_cnt = cnt
                best_code = cur
            out[bi, bj] = best_code
    return out


@njit(cache=True)
def rasterize_polygon(xs, ys, height, width, origin_x, origin_y, pixel_size):
    out = np.zeros((height, width), dtype=np.bool_)
    n = xs.size
    if n < 3:
        return out
    xmin = xs[0]
    xmax = xs[0]
    ymin = ys[0]
    ymax = ys[0]
    for e in range(1, n):
        if xs[e] < xmin:
            xmin = xs[e]
        if xs[e] > xmax:
            xmax = xs[e]
        if ys[e] < ymin:
            ymin = ys[e]
        if ys[e] > ymax:
            ymax = ys[e]
    cmin = max(0, int(np.floor((xmin - origin_x) / pixel_size - 0.5)))
    cmax = min(width - 1, int(np.ceil((xmax - origin_x) / pixel_size - 0.5)))
    rmin = max(0, int(np.floor((origin_y - ymax) / pixel_size - 0.5)))
    rmax = min(height - 1, int(np.ceil((origin_y - ymin) / pixel_size - 0.5)))
    if cmin > cmax or rmin > rmax:
        return out
    for r in range(rmin, rmax + 1):
        py = origin_y - (r + 0.5) * pixel_size
        for c in range(cmin, cmax + 1):
            px = origin_x + (c + 0.5) * pixel_size
            inside = False
            onedge = False
            for e in range(n):
                x1 = xs[e]
                y1 = ys[e]
                x2 = xs[(e + 1) % n]
                y2 = ys[(e + 1) % n]
                if (y1 > py) != (y2 > py):
                    xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                    if px < xint:
                        inside = not inside
                cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                if cross == 0.0:
                    xlo = x1 if x1 < x2 else x2
                    xhi = x1 if x1 > x2 else x2
                    ylo = y1 if y1 < y2 else y2
                    yhi = y1 if y1 > y2 else y2
                    if xlo <= px <= xhi and ylo <= py <= yhi:
                        onedge = True
            out[r, c] = inside or onedge
    return out


@njit(cache=True)
def box_count(a, radius):
    h, w = a.shape
    s = np.zeros((h + 1, w + 1), dtype=np.int64)
    for i in range(h):
        rowsum = np.int64(0)
        for j in range(w):
            rowsum += a[i, j]
            s[i + 1, j + 1] = s[i, j + 1] + rowsum
    out = np.empty((h, w), dtype=np.int64)
    for i in range(h):
        top = i - radius
        if top < 0:
            top = 0
        bot = i + radius + 1
        if bot > h:
            bot = h
        for j in range(w):
            left = j - radius
            if left < 0:
                left = 0
            right = j + radius + 1
            if right > w:
                right = w
            out[i, j] = s[bot, right] - s[top, right] - s[bot, left] + s[top, left]
    return out
