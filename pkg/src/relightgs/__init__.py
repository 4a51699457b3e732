"""Relightable 3D Gaussian splat rendering: SH light transport, environment
prefiltering, depth/normal geometry, EWA rasterization and losses."""

from ._backend import USE_NUMBA

__all__ = ["USE_NUMBA"]
__version__ = "0.1.0"
