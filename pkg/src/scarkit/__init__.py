"""Numerical toolkit for spectrally localized kernels, microlocal lifts and
partially localized quasimodes on the hyperbolic plane."""

__version__ = "0.1.0"

from .config import GridConfig, RunConfig, SpectralConfig
from .errors import ScarkitError
from .geometry import GroupElement, Region, RegionKind

__all__ = [
    "__version__",
    "GridConfig",
    "GroupElement",
    "Region",
    "RegionKind",
    "RunConfig",
    "ScarkitError",
    "SpectralConfig",
]
