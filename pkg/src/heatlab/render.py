"""Deterministic raster rendering for the HTTP layer.

Each layer renders with a linear ramp between fixed bounds, so the same
grid always produces the same PNG bytes. Nodata pixels are transparent.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DataError
from .grid import GeoGrid

# anchor stops (position in [0,1], rgb) interpolated linearly
RAMPS = {
    "heat": ((0.0, (13, 8, 135)), (0.35, (126, 3, 168)), (0.65, (225, 100, 98)), (1.0, (240, 249, 33))),
    "diverging": ((0.0, (33, 102, 172)), (0.5, (247, 247, 247)), (1.0, (178, 24, 43))),
    "greens": ((0.0, (247, 252, 245)), (1.0, (0, 68, 27))),
    "gray": ((0.0, (0, 0, 0)), (1.0, (255, 255, 255))),
}

# layer name -> (default palette, fixed value bounds)
LAYER_STYLE = {
    "lst": ("heat", (10.0, 35.0)),
    "prediction": ("heat", (10.0, 35.0)),
    "anomaly": ("diverging", (-4.0, 4.0)),
    "delta": ("diverging", (-4.0, 4.0)),
    "ndvi": ("greens", (-1.0, 1.0)),
    "built_fraction": ("gray", (0.0, 1.0)),
    "built_density": ("gray", (0.0, 1.0)),
    "distance": ("gray", (0.0, 600.0)),
}

# categorical colors per land-cover name
LULC_COLORS = {
    "water": (65, 105, 225),
    "trees": (34, 139, 34),
    "flooded_vegetation": (0, 178, 170),
    "crops": (218, 165, 32),
    "built": (178, 34, 34),
    "bare_ground": (210, 180, 140),
    "snow_ice": (245, 245, 245),
    "clouds": (192, 192, 192),
    "rangeland": (154, 205, 50),
}


def ramp_lut(name: str) -> np.ndarray:
    """256-entry RGB lookup table for a named ramp."""
    if name not in RAMPS:
        raise DataError("bad_request", f"unknown palette {name!r}; choose from {sorted(RAMPS)}")
    stops = RAMPS[name]
    xs = np.array([s[0] for s in stops])
    cols = np.array([s[1] for s in stops], dtype=np.float64)
    t = np.linspace(0.0, 1.0, 256)
    lut = np.empty((256, 3), dtype=np.uint8)
    for ch in range(3):
        lut[:, ch] = np.rint(np.interp(t, xs, cols[:, ch])).astype(np.uint8)
    return lut


@dataclass(frozen=True)
class RenderedLayer:
    png: bytes
    stats: dict
    palette: str
    vmin: float
    vmax: float


def grid_stats(grid: GeoGrid) -> dict:
    mask = grid.data_mask()
    n = int(mask.sum())
    if n == 0:
        return {"min": None, "mean": None, "max": None, "n": 0}
    vals = grid.values[mask].astype(np.float64)
    return {"min": float(vals.min()), "mean": float(vals.mean()), "max": float(vals.max()), "n": n}


def _encode_png(rgba: np.ndarray) -> bytes:
    img = Image.fromarray(rgba, mode="RGBA")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def render_continuous(grid: GeoGrid, palette: str, vmin: float, vmax: float) -> RenderedLayer:
    if not vmax > vmin:
        raise DataError("bad_request", "render bounds need vmax > vmin")
    lut = ramp_lut(palette)
    mask = grid.data_mask()
    t = (grid.values.astype(np.float64) - vmin) / (vmax - vmin)
    idx = np.clip(np.rint(t * 255.0), 0, 255).astype(np.int64)
    rgba = np.zeros(grid.spec.shape + (4,), dtype=np.uint8)
    rgba[..., :3] = lut[idx]
    rgba[..., 3] = np.where(mask, 255, 0).astype(np.uint8)
    return RenderedLayer(_encode_png(rgba), grid_stats(grid), palette, vmin, vmax)


def render_categorical(lulc: GeoGrid, categories) -> RenderedLayer:
    codes = np.rint(lulc.values).astype(np.int64)
    mask = lulc.data_mask()
    rgba = np.zeros(lulc.spec.shape + (4,), dtype=np.uint8)
    for name, color in LULC_COLORS.items():
        code = categories.codes.get(name)
        if code is None:
            continue
        sel = mask & (codes == code)
        rgba[sel, 0], rgba[sel, 1], rgba[sel, 2] = color
        rgba[sel, 3] = 255
    stats = grid_stats(lulc)
    return RenderedLayer(_encode_png(rgba), stats, "categorical", 0.0, 0.0)


def render_rgb(red: GeoGrid, green: GeoGrid, blue: GeoGrid, gain: float = 0.30) -> RenderedLayer:
    mask = red.data_mask() & green.data_mask() & blue.data_mask()
    rgba = np.zeros(red.spec.shape + (4,), dtype=np.uint8)
    for ch, g in enumerate((red, green, blue)):
        scaled = np.clip(g.values.astype(np.float64) / gain, 0.0, 1.0)
        rgba[..., ch] = np.rint(scaled * 255.0).astype(np.uint8)
    rgba[..., 3] = np.where(mask, 255, 0).astype(np.uint8)
    return RenderedLayer(_encode_png(rgba), grid_stats(red), "rgb", 0.0, gain)


def style_for(layer: str) -> tuple:
    if layer not in LAYER_STYLE:
        raise DataError("layer_not_found", f"no render style for layer {layer!r}")
    return LAYER_STYLE[layer]


def legend_for(layer: str, palette: str | None = None) -> dict:
    """Data the UI needs to draw a color legend without reimplementing ramps."""
    default_palette, (vmin, vmax) = style_for(layer)
    palette = palette or default_palette
    lut = ramp_lut(palette)
    return {
        "layer": layer,
        "palette": palette,
        "vmin": vmin,
        "vmax": vmax,
        "colors": [[int(c) for c in lut[i]] for i in range(0, 256, 8)],
    }
