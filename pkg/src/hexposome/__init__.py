"""Hexagonal-grid harmonization of geospatial exposure data and exposomic analytics."""

from .hexgrid import GridFingerprint, GridSpec, HexId

__version__ = "0.1.0"

__all__ = ["GridFingerprint", "GridSpec", "HexId", "__version__"]
