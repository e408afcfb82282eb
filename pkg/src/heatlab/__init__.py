"""heatlab: raster toolkit for urban heat island analysis.

Three workflows around a pluggable land-surface-temperature predictor:
empirical park cooling profiles, predictor evaluation with heat-ordered
splits and climate forcing, and guided-inpainting greening simulations.
"""

__version__ = "0.1.0"

from .errors import DataError, HeatlabError, InternalError  # noqa: E402
from .grid import DEFAULT_NODATA, GeoGrid, GridSpec, PixelMask  # noqa: E402
from .gridio import load_grid, save_grid  # noqa: E402

__all__ = [
    "__version__",
    "DataError",
    "HeatlabError",
    "InternalError",
    "DEFAULT_NODATA",
    "GeoGrid",
    "GridSpec",
    "PixelMask",
    "load_grid",
    "save_grid",
]
