"""Hot raster kernels with two interchangeable backends.

The default backend compiles the loops with numba. Setting the environment
variable ``HEATLAB_NO_NUMBA`` to 1/true/yes/on (or running without numba
installed) selects a pure-numpy implementation. Both backends are engineered
to produce bit-identical outputs: distances are exact integer squared
distances, component labels are canonicalized to first-occurrence scan order,
and floating-point expressions are written in the same evaluation order.

Kernels:

- ``edt_sq(mask)``: exact squared Euclidean distance (in pixels) to the
  nearest True pixel; ``INF_SQ`` where no feature is reachable.
- ``label_components(mask)``: 8-connected components, labels 1..n in
  first-occurrence scan order, 0 background.
- ``majority_downsample(codes, k, nodata_code)``: modal category per k x k
  block, ties to the lowest code, nodata excluded from the vote.
- ``rasterize_polygon(...)``: even-odd fill test at pixel centers, points on
  an edge count as inside.
- ``box_count(a, radius)``: exact int64 sum over a (2r+1)^2 window, window
  truncated at grid borders.
"""

import os

INF_SQ = 1 << 62

_flag = os.environ.get("HEATLAB_NO_NUMBA", "").strip().lower()
_force_numpy = _flag in {"1", "true", "yes", "on"}

if _force_numpy:
    _impl = None
else:
    try:
        from . import numba_impl as _impl
    except ImportError:  # numba not installed
        _impl = None

if _impl is None:
    from . import numpy_impl as _impl

    BACKEND = "numpy"
else:
    BACKEND = "numba"

edt_sq = _impl.edt_sq
label_components = _impl.label_components
majority_downsample = _impl.majority_downsample
rasterize_polygon = _impl.rasterize_polygon
box_count = _impl.box_count


def warmup() -> None:
    """Run every kernel once on tiny inputs (pays numba JIT cost up front)."""
    import numpy as np

    m = np.zeros((4, 4), dtype=bool)
    m[1, 2] = True
    edt_sq(m)
    label_components(m)
    majority_downsample(np.zeros((4, 4), dtype=np.int64), 2, -1)
    rasterize_polygon(
        np.array([0.5, 3.5, 3.5, 0.5]),
        np.array([-0.5, -0.5, -3.5, -3.5]),
        4, 4, 0.0, 0.0, 1.0,
    )
    box_count(np.ones((4, 4), dtype=np.int64), 1)


__all__ = [
    "BACKEND",
    "INF_SQ",
    "edt_sq",
    "label_components",
    "majority_downsample",
    "rasterize_polygon",
    "box_count",
    "warmup",
]
