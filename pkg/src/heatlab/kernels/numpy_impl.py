"""Pure-numpy kernel backend.

Every function here must return outputs bit-identical to the numba backend.
Distances and window sums are exact integer arithmetic; the polygon test uses
the same float64 expressions as the compiled version.
"""

from __future__ import annotations

import numpy as np

INF_SQ = np.int64(1) << np.int64(62)
_BIG = np.int64(1) << np.int64(31)
_CHUNK = 4_000_000  # temp-buffer budget (elements) for the broadcast passes


def edt_sq(mask: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance (pixels) to the nearest True pixel.

    Cells that cannot reach any feature (empty mask) get INF_SQ.
    """
    mask = np.ascontiguousarray(mask, dtype=bool)
    h, w = mask.shape
    # pass 1: per-column linear distance to nearest feature in that column
    d = np.where(mask, np.int64(0), _BIG)
    for i in range(1, h):
        np.minimum(d[i], d[i - 1] + 1, out=d[i])
    for i in range(h - 2, -1, -1):
        np.minimum(d[i], d[i + 1] + 1, out=d[i])
    g = np.where(d >= _BIG, INF_SQ, d * d)

    # pass 2: out[i, j] = min_j' g[i, j'] + (j - j')^2, exact min in int64
    out = np.empty((h, w), dtype=np.int64)
    jj = np.arange(w, dtype=np.int64)
    if w * w <= _CHUNK:
        sq = (jj[:, None] - jj[None, :]) ** 2  # (target j, source j')
        rows = max(1, _CHUNK // (w * w))
        for r0 in range(0, h, rows):
            blk = g[r0 : r0 + rows]
            out[r0 : r0 + rows] = (blk[:, None, :] + sq[None, :, :]).min(axis=2)
    else:
        jblock = max(1, _CHUNK // w)
        for r in range(h):
            row = g[r]
            for j0 in range(0, w, jblock):
                js = jj[j0 : j0 + jblock]
                tmp = row[None, :] + (js[:, None] - jj[None, :]) ** 2
                out[r, j0 : j0 + jblock] = tmp.min(axis=1)
    np.minimum(out, INF_SQ, out=out)
    return out


_SHIFTS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def _shifted(a: np.ndarray, dr: int, dc: int, fill) -> np.ndarray:
    """a translated by (dr, dc); vacated cells take `fill`."""
    h, w = a.shape
    out = np.full_like(a, fill)
    rs = slice(max(0, dr), min(h, h + dr))
    cs = slice(max(0, dc), min(w, w + dc))
    rs_src = slice(max(0, -dr), min(h, h - dr))
    cs_src = slice(max(0, -dc), min(w, w - dc))
    out[rs, cs] = a[rs_src, cs_src]
    return out


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected components via min-hooking with pointer jumping.

    Labels are 1..n in order of each component's first pixel in row-major
    scan; background is 0.
    """
    mask = np.ascontiguousarray(mask, dtype=bool)
    h, w = mask.shape
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    parent = np.where(mask, idx, np.int64(-1))
    while True:
        prev = parent
        # hook: take the min parent among the 8-neighborhood (foreground only)
        m = parent.copy()
        for dr, dc in _SHIFTS:
            nb = _shifted(parent, dr, dc, np.int64(-1))
            take = mask & (nb >= 0) & (nb < m)
            m[take] = nb[take]
        # compress: point every pixel at its parent's parent until stable
        flat = m.ravel()
        fg = flat >= 0
        while True:
            nxt = flat.copy()
            nxt[fg] = flat[flat[fg]]
            if np.array_equal(nxt, flat):
                break
            flat = nxt
        parent = flat.reshape(h, w)
        if np.array_equal(parent, prev):
            break
    labels = np.zeros((h, w), dtype=np.int32)
    roots = parent[mask]
    if roots.size:
        uniq = np.unique(roots)  # ascending min-index == first-occurrence order
        labels[mask] = (np.searchsorted(uniq, roots) + 1).astype(np.int32)
        return labels, int(uniq.size)
    return labels, 0


def majority_downsample(codes: np.ndarray, k: int, nodata_code: int) -> np.ndarray:
    """Modal code per k x k block; ties go to the lowest code."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    hb, wb = codes.shape
    H, W = hb // k, wb // k
    blocks = codes[: H * k, : W * k].reshape(H, k, W, k).transpose(0, 2, 1, 3).reshape(H, W, k * k)
    uniq = np.unique(codes)
    uniq = uniq[uniq != nodata_code]
    out = np.full((H, W), nodata_code, dtype=np.int64)
    if uniq.size == 0:
        return out
    counts = np.empty((H, W, uniq.size), dtype=np.int64)
    for i, c in enumerate(uniq):
        counts[:, :, i] = (blocks == c).sum(axis=2)
    best = counts.argmax(axis=2)  # first max along ascending codes -> lowest wins ties
    out = uniq[best]
    out[counts.max(axis=2) == 0] = nodata_code
    return out


def rasterize_polygon(
    xs: np.ndarray,
    ys: np.ndarray,
    height: int,
    width: int,
    origin_x: float,
    origin_y: float,
    pixel_size: float,
) -> np.ndarray:
    """Even-odd polygon fill sampled at pixel centers; edges count as inside."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    out = np.zeros((height, width), dtype=bool)
    n = xs.size
    if n < 3:
        return out
    cmin = max(0, int(np.floor((xs.min() - origin_x) / pixel_size - 0.5)))
    cmax = min(width - 1, int(np.ceil((xs.max() - origin_x) / pixel_size - 0.5)))
    rmin = max(0, int(np.floor((origin_y - ys.max()) / pixel_size - 0.5)))
    rmax = min(height - 1, int(np.ceil((origin_y - ys.min()) / pixel_size - 0.5)))
    if cmin > cmax or rmin > rmax:
        return out
    cols = np.arange(cmin, cmax + 1, dtype=np.float64)
    rows = np.arange(rmin, rmax + 1, dtype=np.float64)
    px = (origin_x + (cols + 0.5) * pixel_size)[None, :]
    py = (origin_y - (rows + 0.5) * pixel_size)[:, None]
    inside = np.zeros((rows.size, cols.size), dtype=bool)
    onedge = np.zeros_like(inside)
    for e in range(n):
        x1, y1 = xs[e], ys[e]
        x2, y2 = xs[(e + 1) % n], ys[(e + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        if crosses.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < xint)
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        onedge |= (
            (cross == 0.0)
            & (px >= min(x1, x2))
            & (px <= max(x1, x2))
            & (py >= min(y1, y2))
            & (py <= max(y1, y2))
        )
    out[rmin : rmax + 1, cmin : cmax + 1] = inside | onedge
    return out


def box_count(a: np.ndarray, radius: int) -> np.ndarray:
    """Exact int64 sum over a centered (2r+1)^2 window, truncated at borders."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    h, w = a.shape
    s = np.zeros((h + 1, w + 1), dtype=np.int64)
    s[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    rows = np.arange(h)
    cols = np.arange(w)
    top = np.maximum(rows - radius, 0)
    bot = np.minimum(rows + radius + 1, h)
    left = np.maximum(cols - radius, 0)
    right = np.minimum(cols + radius + 1, w)
    return (
        s[np.ix_(bot, right)]
        - s[np.ix_(top, right)]
        - s[np.ix_(bot, left)]
        + s[np.ix_(top, left)]
    )
